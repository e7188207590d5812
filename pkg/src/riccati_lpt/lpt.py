"""Logarithmic perturbation theory on the Riccati equation.

The trial function psi0 is the exact zero mode of V0 = y0^2 - y0'.  Writing
V = V0 + V1 and expanding E = sum E_k, y = sum y_k, order k gives

    y_k' - 2 y0 y_k = E_k - Q_k,     Q_1 = V1,  Q_k = -sum_{i=1}^{k-1} y_i y_{k-i}

solved by

    E_k = <Q_k psi0^2> / <psi0^2>,
    y_k = psi0^-2 int_0^x (E_k - Q_k) psi0^2  =  -psi0^-2 int_x^inf (E_k - Q_k) psi0^2.

Everything is computed on the half-line; ground-state corrections are odd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import trial as tr
from .model import PotentialSpec, eval_potential
from .quadgrid import (HALF_LINE, GridFunction, PanelGrid, QuadratureConfig, build_panel_grid,
                       gauss_legendre_nodes, integrate)

# log(psi0^2) below its maximum beyond which contributions are ignored
DROP = 110.0
# extra decay kept beyond the last point where y_k is reported
TAIL_MARGIN = 40.0
# default abscissae for the Riccati residual
DEFAULT_PROBES = np.linspace(-5.0, 5.0, 100)


@dataclass
class ConvergenceReport:
    y1_max: float
    y1_argmax: float
    domination_radius: float
    riccati_residual: list = field(default_factory=list)
    v0_tail_zero: float | None = None
    switch_point: float = 0.0
    switch_mismatch: float = 0.0


@dataclass
class PerturbationSeries:
    E_terms: list
    y_terms: list
    partial_sums: list
    diagnostics: ConvergenceReport | None
    grid: PanelGrid = None
    zero_mean_residuals: list = field(default_factory=list)

    def energy(self, order: int):
        """Partial sum through ``E_order``."""
        return self.partial_sums[order - 1]


# ---------------------------------------------------------------------------
# potentials

def _is_nodeless(trial):
    return not isinstance(trial, tr.ExcitedSpec) or trial.k == 0


def _parity(trial):
    return trial.p if isinstance(trial, tr.ExcitedSpec) else 0


def perturbation_potential(spec: PotentialSpec, trial):
    """``V1(x) = V(x) - V0(x)`` as a vectorised callable."""
    tr.check_normalizable(trial, spec.g)

    def v1(x):
        x = np.asarray(x, dtype=float)
        return eval_potential(spec, x) - tr.v0(trial, spec.g, x)

    return v1


def log_weight(trial, g, x):
    """``log psi0(x)^2``."""
    return 2.0 * tr.log_abs_psi(trial, g, x)


def _smooth_log_weight(trial, g, x):
    lw = log_weight(trial, g, x)
    if isinstance(trial, tr.ExcitedSpec):
        lw = 2.0 * tr.log_abs_psi(trial.base, g, x)
    return lw


def weight_extent(trial, g, drop=DROP):
    """``(x_peak, log_peak, x_end)``: the maximum of psi0^2 on x >= 0 and the
    last point where log psi0^2 is within ``drop`` of it."""
    span = 4.0
    while True:
        xs = np.linspace(0.0, span, 801)
        lw = _smooth_log_weight(trial, g, xs)
        if isinstance(trial, tr.ExcitedSpec):
            with np.errstate(divide="ignore"):
                lw = log_weight(trial, g, xs)
        i = int(np.nanargmax(lw))
        top = lw[i]
        above = np.nonzero(lw >= top - drop)[0]
        last = above[-1]
        if last < len(xs) - 1:
            break
        span *= 2.0
        if span > 1e4:
            raise ValueError("trial function is not normalisable")
    # linear interpolation of the crossing keeps x_end continuous in the parameters
    x0, x1 = xs[last], xs[last + 1]
    l0, l1 = lw[last], lw[last + 1]
    t = (l0 - (top - drop)) / (l0 - l1) if l0 != l1 else 0.0
    return float(xs[i]), float(top), float(x0 + t * (x1 - x0))


def _point_at_drop(trial, g, start, drop):
    """Smallest x >= start with log psi0^2(x) <= log psi0^2(start) - drop."""
    l0 = float(log_weight(trial, g, np.array([start]))[0])
    x = start
    step = 0.5
    while float(log_weight(trial, g, np.array([x + step]))[0]) > l0 - drop:
        x += step
        step *= 1.5
    lo, hi = x, x + step
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if float(log_weight(trial, g, np.array([mid]))[0]) > l0 - drop:
            lo = mid
        else:
            hi = mid
    return hi


# ---------------------------------------------------------------------------
# first order

def _ratio_integrals(num_fn, trial, g, cfg):
    """``int num * psi0^2 / int psi0^2`` over the half-line (log-space weights)."""
    _, top, _ = weight_extent(trial, g)

    def f(x):
        with np.errstate(divide="ignore"):
            w = np.exp(log_weight(trial, g, x) - top)
        return np.array([num_fn(x) * w, w])

    (num, den), (en, ed) = integrate(f, HALF_LINE, cfg)
    return num / den, abs(en / den) + abs(num * ed / den**2)


def compute_E1(spec: PotentialSpec, trial, cfg: QuadratureConfig | None = None):
    """First correction ``E1 = <V1 psi0^2> / <psi0^2>`` by adaptive quadrature.

    For trial functions with nodes off the origin V1 is singular there; the
    same number is then obtained from the Rayleigh quotient.
    """
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=2e-13)
    if not _is_nodeless(trial):
        return rayleigh_quotient(spec, trial, cfg)
    v1 = perturbation_potential(spec, trial)
    return _ratio_integrals(v1, trial, spec.g, cfg)[0]


def rayleigh_quotient(spec: PotentialSpec, trial, cfg: QuadratureConfig | None = None):
    """``<psi0|H|psi0> / <psi0|psi0>`` from ``psi0'^2 + V psi0^2``, independent of V0."""
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=2e-13)
    g = spec.g
    if isinstance(trial, tr.ExcitedSpec):
        _, top, _ = weight_extent(trial.base, g)

        def f(x):
            w = np.exp(2.0 * tr.log_abs_psi(trial.base, g, x) - top)
            u = tr._poly_u(trial)(x)
            dpsi = tr.psi_prime_over_abs_base(trial, g, x)
            return np.array([(dpsi**2 + eval_potential(spec, x) * u**2) * w, u**2 * w])

        (num, den), _ = integrate(f, HALF_LINE, cfg)
        return num / den
    return _ratio_integrals(lambda x: tr.y0(trial, g, x) ** 2 + eval_potential(spec, x), trial, g, cfg)[0]


def e1_closed_form(spec: PotentialSpec, cfg: QuadratureConfig | None = None):
    """``E0 + E1`` for the plain interpolation with a = m, b = 1 (needs m2 >= 0),
    from the reduced one-dimensional ratio of integrals."""
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=2e-13)
    m = spec.m
    sg = math.sqrt(spec.g)

    def f(x):
        e = np.exp(-m * x * x - 2.0 * sg / 3.0 * x**3)
        return np.array([x * (1.0 - m * x * x) * e, e])

    (num, den), _ = integrate(f, HALF_LINE, cfg)
    return m + 2.0 * sg * num / den


def variational_energy(spec: PotentialSpec, trial, n_panels: int = 40, n: int = 20):
    """``E0 + E1`` on a composite Gauss-Legendre rule over [0, x_end(trial)].

    The nodes move continuously with the trial parameters, which keeps the
    objective smooth for simplex minimisation.
    """
    g = spec.g
    if not _is_nodeless(trial):
        return rayleigh_quotient(spec, trial, QuadratureConfig(abs_tol=1e-300, rel_tol=1e-13))
    _, top, x_end = weight_extent(trial, g)
    breaks = np.linspace(0.0, x_end, n_panels + 1)
    base = trial.base if isinstance(trial, tr.ExcitedSpec) else trial
    if isinstance(base, tr.FullTrialParams) and g > 0:
        # resolve the core of width d/sqrt(g), which can be far below x_end/n_panels
        core = abs(base.d) / math.sqrt(g) * 2.0 ** np.arange(-3, 5)
        breaks = np.union1d(breaks, core[core < x_end])
    x, wt = gauss_legendre_nodes(breaks, n)
    w = wt * np.exp(log_weight(trial, g, x) - top)
    v1 = eval_potential(spec, x) - tr.v0(trial, g, x)
    return float((v1 @ w) / w.sum())


# ---------------------------------------------------------------------------
# higher orders

def _series_grid(spec, trial, x_report=None, order=16):
    g = spec.g
    x_peak, top, x_int = weight_extent(trial, g)
    x_need = max(x_int - 0.0, x_report or 0.0)
    x_end = _point_at_drop(trial, g, max(x_need, x_peak), TAIL_MARGIN)
    v1 = perturbation_potential(spec, trial)

    def funcs(x):
        lw = _smooth_log_weight(trial, g, x)
        return np.array([v1(x), tr.y0(trial, g, x), lw])

    def noise(x):
        # V1 = V - V0 cancels; its resolvable level is set by |V|
        v = np.abs(eval_potential(spec, x)) + 1.0
        return 64.0 * np.finfo(float).eps * np.array([v, np.sqrt(v), np.abs(_smooth_log_weight(trial, g, x))])

    grid = build_panel_grid(funcs, 0.0, x_end, order=order, rel_tol=1e-13, max_width=0.5,
                            log_weight=lambda x: _smooth_log_weight(trial, g, x), max_log_step=2.0,
                            init_panels=16, abs_floor=noise)
    n_keep = int(np.searchsorted(grid.breaks, x_need, side="left"))
    n_keep = min(max(n_keep, 1), grid.n_panels)
    return grid, n_keep


def _switch_index(grid, lw, weights):
    w = np.exp(lw - np.max(lw[np.isfinite(lw)]))
    cum = np.cumsum(weights * w)
    idx = int(np.searchsorted(cum, 0.5 * cum[-1]))
    return max(idx, 1)


def _solve_order(grid, lw, rhs, switch):
    """``y = psi0^-2 int_0^x rhs psi0^2`` (forward before ``switch``, complementary after)."""
    fwd = grid.scaled_cumulative(rhs, lw, from_left=True)
    bwd = -grid.scaled_cumulative(rhs, lw, from_left=False)
    y = np.where(np.arange(len(rhs)) <= switch, fwd, bwd)
    scale = max(abs(fwd[switch]), abs(bwd[switch]), 1e-300)
    return y, abs(fwd[switch] - bwd[switch]) / scale


def _tail_power(grid, values):
    xa, xb = grid.breaks[-2], grid.breaks[-1]
    va, vb = values[-1 - grid.order], values[-1]
    if va == 0 or vb == 0 or np.sign(va) != np.sign(vb):
        return 2.0
    return float(-math.log(abs(vb / va)) / math.log(xb / xa))


def _weighted_mean(weights, f, w, compensated):
    if compensated:
        return math.fsum(weights * f * w) / math.fsum(weights * w)
    return float((weights * w) @ f / (weights @ w))


def compute_yk(spec: PotentialSpec, trial, k: int, previous: PerturbationSeries) -> GridFunction:
    """Correction ``y_k`` given a series holding ``y_1 .. y_{k-1}`` and ``E_1 .. E_k``.

    Uses the grid stored on ``previous``; ``previous.E_terms`` must already
    contain ``E_k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    grid = previous.grid
    g = spec.g
    x = grid.nodes
    lw = log_weight(trial, g, x)
    q = _q_values(spec, trial, k, previous.y_terms, x)
    switch = _switch_index(grid, lw, grid.weights())
    y, _ = _solve_order(grid, lw, previous.E_terms[k] - q, switch)
    return GridFunction(grid, y, tail_exponent=_tail_power(grid, y), parity=-1)


def _q_values(spec, trial, k, y_terms, x):
    if k == 1:
        return perturbation_potential(spec, trial)(x)
    vals = [yt.values if len(yt.values) == len(x) else yt(x) for yt in y_terms[:k - 1]]
    return -sum(vals[i - 1] * vals[k - i - 1] for i in range(1, k))


def run_series(spec: PotentialSpec, trial, order: int = 2, x_report: float | None = None,
               compensated: bool = False, probe_xs=None, panel_order: int = 16) -> PerturbationSeries:
    """Corrections ``E_1 .. E_order`` and ``y_1 .. y_order``.

    ``y_order`` is not needed for ``E_order`` but is kept so that the Riccati
    residual can be reported at every order.  ``x_report`` extends the grid so
    that the ``y_k`` are accurate out to that abscissa.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not _is_nodeless(trial):
        raise ValueError("corrections need a trial function without nodes off the origin")
    tr.check_normalizable(trial, spec.g)
    g = spec.g
    if probe_xs is None:
        probe_xs = DEFAULT_PROBES
    x_report = max(x_report or 0.0, float(np.max(np.abs(probe_xs))))
    grid, n_keep = _series_grid(spec, trial, x_report, panel_order)
    x = grid.nodes
    weights = grid.weights()
    lw = log_weight(trial, g, x)
    w = np.exp(lw - np.max(lw[np.isfinite(lw)]))
    switch = _switch_index(grid, lw, weights)
    sub = grid.truncated(n_keep)
    n_sub = len(sub.nodes)

    E_terms = [0.0]
    full_y = []
    y_terms = []
    zero_mean = []
    mismatch = 0.0
    for k in range(1, order + 1):
        q = _q_values(spec, trial, k, full_y, x)
        ek = _weighted_mean(weights, q, w, compensated)
        E_terms.append(ek)
        rhs = ek - q
        zero_mean.append(float(weights @ (rhs * w)) / float(weights @ w))
        yk, mm = _solve_order(grid, lw, rhs, switch)
        if k == 1:
            mismatch = mm
        full_y.append(GridFunction(grid, yk, parity=-1))
        vals = yk[:n_sub]
        y_terms.append(GridFunction(sub, vals, tail_exponent=_tail_power(sub, vals), parity=-1))
    partial = list(np.cumsum(E_terms[1:]) + E_terms[0])
    series = PerturbationSeries(E_terms=E_terms, y_terms=y_terms, partial_sums=[float(p) for p in partial],
                                diagnostics=None, grid=grid, zero_mean_residuals=zero_mean)
    series._full_y = full_y
    rep = convergence_diagnostics(spec, trial, series, probe_xs=probe_xs)
    rep.switch_point = float(x[switch])
    rep.switch_mismatch = float(mismatch)
    series.diagnostics = rep
    return series


# ---------------------------------------------------------------------------
# diagnostics

def _refine_extremum(fn, xs, vals):
    i = int(np.argmax(vals))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    # golden section on |fn|
    gr = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    for _ in range(80):
        if abs(fn(c)) > abs(fn(d)):
            b = d
        else:
            a = c
        c = b - gr * (b - a)
        d = a + gr * (b - a)
    xm = 0.5 * (a + b)
    return abs(fn(xm)), xm


def domination_radius(spec: PotentialSpec, trial, x_max: float, n: int = 4000):
    """Smallest sampled R with |V1/V0| < 1 for all sampled |x| > R (inf if never).

    Also returns the last sign change of V0 on the sample, if any.
    """
    x = np.linspace(0.0, x_max, n + 1)[1:]
    v0 = tr.v0(trial, spec.g, x)
    v1 = eval_potential(spec, x) - v0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(v1 / v0)
    bad = ~(ratio < 1.0)
    crossings = np.nonzero(np.sign(v0[1:]) != np.sign(v0[:-1]))[0]
    v0_zero = float(x[crossings[-1]]) if len(crossings) else None
    if not bad.any():
        return 0.0, v0_zero
    if bad[-1]:
        return math.inf, v0_zero
    return float(x[np.nonzero(bad)[0][-1]]), v0_zero


def convergence_diagnostics(spec: PotentialSpec, trial, series: PerturbationSeries, probe_xs=None):
    if not series.y_terms:
        raise ValueError("series has no y_1")
    y1 = series.y_terms[0]
    xs = y1.nodes
    if np.all(y1.values == 0):
        y1_max, y1_arg = 0.0, 0.0
    else:
        y1_max, y1_arg = _refine_extremum(y1, xs, np.abs(y1.values))
    x_hi = float(series.grid.breaks[-1])
    radius, v0_zero = domination_radius(spec, trial, x_hi)
    if probe_xs is None:
        probe_xs = DEFAULT_PROBES
    n_avail = len(series.y_terms)
    resid = [float(np.max(np.abs(riccati_residual(spec, trial, series, k, probe_xs))))
             for k in range(0, n_avail + 1)]
    return ConvergenceReport(y1_max=float(y1_max), y1_argmax=float(y1_arg), domination_radius=radius,
                             riccati_residual=resid, v0_tail_zero=v0_zero)


def riccati_residual(spec: PotentialSpec, trial, series: PerturbationSeries, order: int, probe_xs):
    """``y' - y^2 - (E - V)`` for ``y = y0 + y_1 + .. + y_order``, ``E = E_1 + .. + E_order``.

    Derivatives of the y_k come from differentiating their interpolants, so
    the residual checks the stored corrections rather than restating the
    correction equations.
    """
    if order > len(series.y_terms):
        raise ValueError(f"series holds only {len(series.y_terms)} corrections")
    x = np.asarray(probe_xs, dtype=float)
    g = spec.g
    v1 = eval_potential(spec, x) - tr.v0(trial, g, x)
    y0 = tr.y0(trial, g, x)
    if order == 0:
        return v1
    s = sum(series.y_terms[k](x) for k in range(order))
    ds = sum(series.y_terms[k].derivative(x) for k in range(order))
    e = sum(series.E_terms[1:order + 1])
    return v1 + ds - 2.0 * y0 * s - s * s - e
