"""Independent eigenvalues of -d^2/dx^2 + m2 x^2 + g x^4.

Two unrelated methods, both working on the half-line with the parity of the
requested level imposed at x = 0:

* :func:`solve_fd` -- three-point finite differences on [0, L], the k-th
  eigenvalue of the symmetric tridiagonal matrix by Sturm-sequence bisection,
  and Richardson (Romberg) extrapolation in h^2 over successive halvings.
* :func:`solve_shoot` -- outward/inward integration of psi'' = (V - E) psi
  with an 8th-order Runge-Kutta integrator, levels bracketed by node counting
  and refined with Brent's method on the Wronskian mismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .model import PotentialSpec, eval_potential


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleSolution:
    energy: float
    state_index: int
    box_size: float
    grid_points: int
    extrapolation_order: int
    err_estimate: float
    method: str = "fd"


# ---------------------------------------------------------------------------
# shared helpers

def potential_minimum(spec: PotentialSpec):
    """``(x_min, V_min)`` on the half-line."""
    if spec.m2 >= 0 or spec.g == 0:
        return 0.0, 0.0
    x2 = -spec.m2 / (2.0 * spec.g)
    return math.sqrt(x2), -spec.m2**2 / (4.0 * spec.g)


def outer_turning_point(spec: PotentialSpec, energy: float):
    """Largest x >= 0 with V(x) = energy (0 if energy is below V everywhere)."""
    if spec.g == 0:
        return math.sqrt(max(energy, 0.0) / spec.m2)
    disc = spec.m2**2 + 4.0 * spec.g * energy
    if disc < 0:
        return potential_minimum(spec)[0]
    x2 = (-spec.m2 + math.sqrt(disc)) / (2.0 * spec.g)
    return math.sqrt(max(x2, 0.0))


def box_size(spec: PotentialSpec, energy: float, action: float = 24.0):
    """Distance beyond the outer turning point where the WKB decay
    ``integral sqrt(V - E)`` reaches ``action``."""
    xt = outer_turning_point(spec, energy)
    step = 0.25 * max(1.0, xt)
    x = xt
    acc = 0.0
    while acc < action:
        f = lambda t: math.sqrt(max(eval_potential(spec, t) - energy, 0.0))
        acc += quad(f, x, x + step)[0]
        x += step
    # back off inside the last step
    lo, hi = x - step, x
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if quad(lambda t: math.sqrt(max(eval_potential(spec, t) - energy, 0.0)), xt, mid)[0] < action:
            lo = mid
        else:
            hi = mid
    return hi


def rough_energy(spec: PotentialSpec, state_index: int):
    """Crude semiclassical guess, only used to size boxes and grids."""
    _, vmin = potential_minimum(spec)
    # Bohr-Sommerfeld on the half-line sector: find E with
    # integral_0^xt sqrt(E - V) = (n + 1/2) pi / 2
    target = (state_index + 0.5) * math.pi / 2.0

    def action(e):
        xt = outer_turning_point(spec, e)
        return quad(lambda t: math.sqrt(max(e - eval_potential(spec, t), 0.0)), 0.0, xt, limit=200)[0]

    lo, hi = vmin, vmin + 1.0
    while action(hi) < target:
        hi = vmin + 2.0 * (hi - vmin)
    return brentq(lambda e: action(e) - target, lo, hi, xtol=1e-6)


# ---------------------------------------------------------------------------
# finite differences

def sturm_count(diag, off, lam):
    """Number of eigenvalues of the symmetric tridiagonal matrix below ``lam``."""
    count = 0
    q = 1.0
    tiny = 1e-300
    e2 = 0.0
    for i in range(len(diag)):
        q = (diag[i] - lam) - (e2 / q if i else 0.0)
        if q == 0.0:
            q = -tiny
        if q < 0.0:
            count += 1
        if i < len(off):
            e2 = off[i] * off[i]
    return count


def tridiagonal_eigenvalue(diag, off, index, rtol=4e-16):
    """``index``-th smallest eigenvalue (0-based) by Sturm bisection."""
    diag = [float(v) for v in diag]
    off = [float(v) for v in off]
    n = len(diag)
    if not 0 <= index < n:
        raise ValueError("eigenvalue index out of range")
    # Gershgorin bounds
    radius = [0.0] * n
    for i, e in enumerate(off):
        radius[i] += abs(e)
        radius[i + 1] += abs(e)
    lo = min(d - r for d, r in zip(diag, radius))
    hi = max(d + r for d, r in zip(diag, radius))
    scale = max(abs(lo), abs(hi))
    while hi - lo > rtol * max(scale * 1e-6, abs(lo) + abs(hi)) + 1e-300:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if sturm_count(diag, off, mid) > index:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def fd_matrix(spec: PotentialSpec, L: float, n_intervals: int, parity: int):
    """Symmetric tridiagonal (diag, off) on the grid x_i = i L / n."""
    h = L / n_intervals
    x = np.arange(n_intervals) * h
    v = eval_potential(spec, x)
    inv = 1.0 / (h * h)
    if parity == 0:
        diag = 2.0 * inv + v
        off = np.full(n_intervals - 1, -inv)
        off[0] = -math.sqrt(2.0) * inv  # symmetrised reflection row
    else:
        diag = 2.0 * inv + v[1:]
        off = np.full(n_intervals - 2, -inv)
    return diag, off


def _fd_level(spec, L, n_intervals, state_index):
    parity = state_index % 2
    diag, off = fd_matrix(spec, L, n_intervals, parity)
    return tridiagonal_eigenvalue(diag, off, state_index // 2)


def richardson_table(values):
    """Romberg table for a sequence computed at h, h/2, h/4, ... (error in h^2)."""
    table = [[v] for v in values]
    for j in range(1, len(values)):
        for k in range(1, j + 1):
            prev = table[j][k - 1]
            table[j].append(prev + (prev - table[j - 1][k - 1]) / (4.0**k - 1.0))
    return table


def _wkb_box(spec, state_index, action=24.0):
    e = rough_energy(spec, state_index)
    return box_size(spec, e, action), e


def solve_fd(spec: PotentialSpec, state_index: int = 0, target_tol: float = 1e-9,
             L: float | None = None, n0: int | None = None, max_levels: int = 7,
             _retry: bool = True) -> OracleSolution:
    """Eigenvalue by second-order finite differences with Richardson extrapolation."""
    if state_index < 0:
        raise ValueError("state_index must be >= 0")
    if L is None:
        L, e_guess = _wkb_box(spec, state_index)
    else:
        e_guess = rough_energy(spec, state_index)
    if n0 is None:
        # a few points per local wavelength / decay length at the coarsest level
        _, vmin = potential_minimum(spec)
        kmax = math.sqrt(max(e_guess - vmin, 1.0))
        n0 = int(max(48, 4 * L * kmax + 2 * state_index))
        n0 += n0 % 2
    values = []
    table = None
    err = math.inf
    for lev in range(max_levels):
        n = n0 * 2**lev
        values.append(_fd_level(spec, L, n, state_index))
        table = richardson_table(values)
        if lev >= 2:
            err = abs(table[-1][-1] - table[-2][-2])
            if err < target_tol:
                break
    energy = table[-1][-1]
    # Sturm bisection resolves the level only to ~eps * ||T|| ~ eps * 4 / h^2
    h_fine = L / (n0 * 2 ** (len(values) - 1))
    err = max(err, 4.0 * np.finfo(float).eps / h_fine**2)
    # boundary sensitivity: a larger box must not move the level
    if _retry:
        wider = solve_fd(spec, state_index, target_tol, L=1.25 * L, n0=int(1.25 * n0) // 2 * 2,
                         max_levels=max_levels, _retry=False)
        shift = abs(wider.energy - energy)
        if shift > max(target_tol, 2 * (err + wider.err_estimate)):
            bigger = solve_fd(spec, state_index, target_tol, L=1.6 * L, n0=int(1.6 * n0) // 2 * 2,
                              max_levels=max_levels, _retry=False)
            if abs(bigger.energy - wider.energy) > max(target_tol, 2 * (wider.err_estimate + bigger.err_estimate)):
                raise OracleError(f"box size still influences the level (L={1.6 * L:.3g})")
            return bigger
        err = max(err, shift)
    return OracleSolution(energy=float(energy), state_index=state_index, box_size=float(L),
                          grid_points=n0 * 2 ** (len(values) - 1), extrapolation_order=2 * len(values),
                          err_estimate=float(max(err, 1e-15 * max(1.0, abs(energy)))), method="fd")


# ---------------------------------------------------------------------------
# shooting

def _rhs(spec, energy):
    m2, g = spec.m2, spec.g

    def f(x, u):
        x2 = x * x
        return [u[1], (m2 * x2 + g * x2 * x2 - energy) * u[0]]

    return f


def _integrate(spec, energy, x0, x1, u0, rtol):
    sol = solve_ivp(_rhs(spec, energy), (x0, x1), u0, method="DOP853", rtol=rtol, atol=1e-40)
    if sol.status < 0:
        raise OracleError(sol.message)
    return sol


def _sign_changes(v):
    s = np.sign(v[np.abs(v) > 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _outward_nodes(spec, energy, parity, L, rtol):
    u0 = [1.0, 0.0] if parity == 0 else [0.0, 1.0]
    sol = _integrate(spec, energy, 0.0, L, u0, rtol)
    return _sign_changes(sol.y[0][1:])


def _inward_start(spec, energy, L):
    k = math.sqrt(max(eval_potential(spec, L) - energy, 1e-12))
    dv = 2 * spec.m2 * L + 4 * spec.g * L**3
    return [1.0, -k - dv / (4.0 * k * k)]


def _mismatch(spec, energy, parity, L, xm, rtol):
    """Normalised Wronskian of the outward (parity) and inward (decaying) solutions."""
    if xm > 0:
        sol = _integrate(spec, energy, 0.0, xm, [1.0, 0.0] if parity == 0 else [0.0, 1.0], rtol)
        uo = sol.y[:, -1]
    else:
        uo = np.array([1.0, 0.0] if parity == 0 else [0.0, 1.0])
    sol = _integrate(spec, energy, L, xm, _inward_start(spec, energy, L), rtol)
    ui = sol.y[:, -1]
    w = uo[0] * ui[1] - uo[1] * ui[0]
    return w / (math.hypot(*uo) * math.hypot(*ui))


def _shoot_once(spec, state_index, L, xm, rtol, window):
    parity = state_index % 2
    j = state_index // 2
    e_lo, e_hi = window
    # expand the window until the node count brackets the level
    tries = 0
    while _outward_nodes(spec, e_hi, parity, L, 1e-10) <= j:
        e_hi = e_lo + 2.0 * (e_hi - e_lo)
        tries += 1
        if tries > 30:
            raise OracleError(f"failed to bracket level {state_index} in window [{e_lo}, {e_hi}]")
    # bisect on node counts until exactly one level remains
    lo, hi = e_lo, e_hi
    n_hi = _outward_nodes(spec, hi, parity, L, 1e-10)
    n_lo = _outward_nodes(spec, lo, parity, L, 1e-10)
    if n_lo > j:
        raise OracleError(f"window [{e_lo}, {e_hi}] starts above level {state_index}")
    for _ in range(200):
        if n_lo == j and n_hi == j + 1:
            f_lo = _mismatch(spec, lo, parity, L, xm, rtol)
            f_hi = _mismatch(spec, hi, parity, L, xm, rtol)
            if f_lo * f_hi < 0:
                break
        mid = 0.5 * (lo + hi)
        n_mid = _outward_nodes(spec, mid, parity, L, 1e-10)
        if n_mid > j:
            hi, n_hi = mid, n_mid
        else:
            lo, n_lo = mid, n_mid
    else:
        raise OracleError(f"could not isolate level {state_index} in window [{e_lo}, {e_hi}]")
    return brentq(lambda e: _mismatch(spec, e, parity, L, xm, rtol), lo, hi,
                  xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def solve_shoot(spec: PotentialSpec, state_index: int = 0, target_tol: float = 1e-10,
                L: float | None = None, rtol: float = 3e-14) -> OracleSolution:
    """Eigenvalue by shooting with node-count bracketing and Wronskian matching."""
    if state_index < 0:
        raise ValueError("state_index must be >= 0")
    if L is None:
        L, _ = _wkb_box(spec, state_index, action=26.0)
    xm, vmin = potential_minimum(spec)
    window = (vmin, vmin + max(1.0, abs(vmin)) * 0.5 + 1.0)
    e1 = _shoot_once(spec, state_index, L, xm, rtol, window)
    # error: looser integration and a wider box
    e2 = _shoot_once(spec, state_index, 1.2 * L, xm, 30 * rtol, window)
    err = max(abs(e1 - e2), 4e-16 * max(1.0, abs(e1)))
    if err > target_tol:
        e3 = _shoot_once(spec, state_index, 1.5 * L, xm, rtol, window)
        if abs(e3 - e1) > target_tol:
            raise OracleError(f"shooting did not reach tolerance ({abs(e3 - e1):.2e} > {target_tol:.2e})")
        e1, err = e3, abs(e3 - e1)
    return OracleSolution(energy=float(e1), state_index=state_index, box_size=float(L), grid_points=0,
                          extrapolation_order=8, err_estimate=float(err), method="shoot")


def oracle_energy(spec: PotentialSpec, state_index: int = 0, target_tol: float = 1e-10) -> OracleSolution:
    """Reference eigenvalue used across the package (shooting; FD for cross-checks)."""
    return solve_shoot(spec, state_index, target_tol)
