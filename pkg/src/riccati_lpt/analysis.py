"""Derived studies: zero-energy critical points, the deep double-well scan and
the ground / first-excited gap."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from . import lpt, oracle, varopt
from .model import PotentialSpec

ORACLE_METHODS = {"fd": oracle.solve_fd, "shoot": oracle.solve_shoot}


def _oracle(method):
    try:
        return ORACLE_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown oracle method {method!r}") from None


def critical_g(m2: float, tol: float = 1e-10, method: str = "fd", oracle_tol: float = 1e-11) -> float:
    """Coupling at which the ground-state energy vanishes for fixed ``m2 < 0``.

    E is increasing in g, so the root is unique.
    """
    if not m2 < 0:
        raise ValueError("a zero-energy ground state needs m2 < 0")
    solve = _oracle(method)

    def energy(g):
        return solve(PotentialSpec(m2, g), 0, oracle_tol).energy

    # g of order |m2|^(3/2) balances the two terms of V at the well bottom
    g0 = abs(m2) ** 1.5
    lo, hi = g0 / 8.0, g0
    e_lo, e_hi = energy(lo), energy(hi)
    for _ in range(60):
        if e_lo < 0 < e_hi:
            return brentq(energy, lo, hi, xtol=tol, rtol=8.9e-16)
        if e_lo >= 0:
            lo /= 2.0
            e_lo = energy(lo)
        if e_hi <= 0:
            hi *= 2.0
            e_hi = energy(hi)
    raise ValueError(f"no sign change of E(g) in the scanned window [{lo}, {hi}]")


def critical_m2(g: float, tol: float = 1e-10, method: str = "fd", oracle_tol: float = 1e-11) -> float:
    """Quadratic coefficient at which the ground-state energy vanishes for fixed ``g > 0``."""
    if not g > 0:
        raise ValueError("critical m2 needs g > 0")
    solve = _oracle(method)

    def energy(m2):
        return solve(PotentialSpec(m2, g), 0, oracle_tol).energy

    scale = g ** (2.0 / 3.0)
    lo, hi = -4.0 * scale, 0.0
    e_lo, e_hi = energy(lo), energy(hi)
    for _ in range(60):
        if e_lo < 0 < e_hi:
            return brentq(energy, lo, hi, xtol=tol, rtol=8.9e-16)
        if e_lo >= 0:
            lo *= 2.0
            e_lo = energy(lo)
        else:
            raise ValueError(f"E(m2=0, g={g}) = {e_hi} is not positive")
    raise ValueError(f"no sign change of E(m2) in the scanned window [{lo}, {hi}]")


def scaling_invariant(m2: float, g: float) -> float:
    """``m2 / g**(2/3)``, the single parameter left after scaling out g."""
    return m2 / g ** (2.0 / 3.0)


@dataclass
class ScanRow:
    m2: float
    E1: float = math.nan
    E2: float = math.nan
    E_oracle: float = math.nan
    params: dict | None = None
    error: str | None = None

    @property
    def oracle_deviation(self):
        return self.E1 + self.E2 - self.E_oracle


def semiclassical_scan(g: float, m2_values, order: int = 2, oracle_method: str = "shoot",
                       continuation: bool = True, **opt_options) -> list[ScanRow]:
    """Case-1 optimisation and second-order corrections for each ``m2``.

    Rows are processed from shallow to deep; with ``continuation`` each
    optimisation also starts from the previous optimum and the better of the
    two results is kept.  A failing row records its error and the scan goes on.
    """
    if not g > 0:
        raise ValueError("the scan needs g > 0")
    solve = _oracle(oracle_method)
    rows = {}
    previous = None
    for m2 in sorted(m2_values, reverse=True):
        row = ScanRow(m2=float(m2))
        rows[m2] = row
        spec = PotentialSpec(m2, g)
        try:
            res = varopt.case1_optimize(spec, **opt_options)
            if continuation and previous is not None:
                warm = varopt.case1_optimize(spec, init=previous, **opt_options)
                if warm.best_E1 < res.best_E1:
                    res = warm
            previous = varopt.params_dict(res.best_params)
            series = lpt.run_series(spec, res.best_params, order)
            row.E1 = res.best_E1
            row.E2 = series.E_terms[2] if order >= 2 else 0.0
            row.params = previous
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        try:
            row.E_oracle = solve(spec, 0).energy
        except (ValueError, RuntimeError) as exc:
            row.error = (row.error + "; " if row.error else "") + f"oracle: {exc}"
    return [rows[m] for m in m2_values]


def energy_gap(spec: PotentialSpec, method: str = "oracle", order: int = 2, **opt_options) -> float:
    """``E(0,1) - E(0,0)``, from the oracle or from case-1 LPT of both states."""
    if method == "oracle":
        e0 = oracle.solve_shoot(spec, 0).energy
        e1 = oracle.solve_shoot(spec, 1).energy
        return e1 - e0
    if method != "lpt":
        raise ValueError(f"unknown gap method {method!r}")
    if spec.g == 0:
        # harmonic: the even and odd Gaussians are exact
        return 2.0 * spec.m
    energies = []
    for state in ((0, 0), (0, 1)):
        res = varopt.case1_optimize(spec, state=state, **opt_options)
        energies.append(lpt.run_series(spec, res.best_params, order).partial_sums[-1])
    return energies[1] - energies[0]
