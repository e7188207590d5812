"""Quadrature on bounded intervals and the half-line, plus piecewise-Chebyshev
sampled functions.

Two kinds of integration live here:

* :func:`integrate` -- adaptive Gauss-Kronrod (7/15) with a rational map of
  ``[0, inf)`` onto ``[0, 1)``.  Used wherever an independent, error-controlled
  number is needed.
* :class:`PanelGrid` -- a composite Chebyshev-Lobatto grid.  Values sampled on
  its nodes can be integrated (Clenshaw-Curtis), cumulatively integrated, and
  interpolated spectrally.  The perturbation engine keeps every correction
  function on one of these grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import legendre

HALF_LINE = "half_line"

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK dqk15), non-negative half.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full symmetric rule on [-1, 1]
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_wg_full = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae (0.949.., 0.741.., ...).
for _i, _w in zip((1, 3, 5), _WG[:3]):
    _wg_full[_i] = _w
    _wg_full[14 - _i] = _w
_wg_full[7] = _WG[3]
G_WEIGHTS = _wg_full

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-12
    max_subdivisions: int = 400
    split_points: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("abs_tol and rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


class QuadratureError(RuntimeError):
    """Raised when an integral cannot be brought within tolerance.

    ``best_estimate`` and ``err_estimate`` carry the last available result;
    ``abscissa`` is set when the integrand produced a non-finite value.
    """

    def __init__(self, message, best_estimate=math.nan, err_estimate=math.inf, abscissa=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.err_estimate = err_estimate
        self.abscissa = abscissa


def _gk_batch(f, lo, hi, transform):
    """Apply the 7/15 rule to many intervals at once.

    Returns (kronrod, error) arrays with leading axis over intervals and any
    trailing component axes of a vector-valued integrand.
    """
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[:, None] + half[:, None] * GK_NODES[None, :]
    if transform is None:
        x, jac = t, None
    else:
        x, jac = transform(t)
    vals = np.asarray(f(x), dtype=float)
    if vals.ndim == 0:
        vals = np.broadcast_to(vals, t.shape)
    if jac is not None:
        vals = vals * jac
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.argwhere(bad)[0]
        xbad = float(x[tuple(idx[-2:])])
        raise QuadratureError(f"integrand is not finite at x = {xbad!r}", abscissa=xbad)
    vals = np.moveaxis(vals, -2, 0)  # (n_int, [m,] 15)
    hshape = (-1,) + (1,) * (vals.ndim - 2)
    h = half.reshape(hshape)
    k = (vals @ GK_WEIGHTS) * h
    g = (vals @ G_WEIGHTS) * h
    # QUADPACK-style error estimate
    mean = (vals @ GK_WEIGHTS) / 2.0
    resasc = (np.abs(vals - mean[..., None]) @ GK_WEIGHTS) * np.abs(h)
    resabs = (np.abs(vals) @ GK_WEIGHTS) * np.abs(h)
    err = np.abs(k - g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5), err)
    floor = 50.0 * _EPS * resabs
    err = np.maximum(scaled, floor)
    return k, err


def _half_line_map(t):
    one_minus = 1.0 - t
    x = t / one_minus
    return x, 1.0 / one_minus**2


def integrate(f: Callable, domain, cfg: QuadratureConfig | None = None):
    """Integrate a vectorised ``f`` over ``domain``.

    ``domain`` is either :data:`HALF_LINE` (``[0, inf)``) or a pair ``(a, b)``.
    ``f`` receives an ndarray and returns values of the same shape, or of shape
    ``(m,) + x.shape`` for ``m`` integrands sharing one subdivision; error
    control then applies to the worst component.

    Returns ``(value, err_estimate)``.
    """
    cfg = cfg or QuadratureConfig()
    if isinstance(domain, str):
        if domain != HALF_LINE:
            raise ValueError(f"unknown domain {domain!r}")
        transform = _half_line_map
        splits = sorted({0.0} | {s for s in cfg.split_points if s > 0})
        cuts = [s / (1.0 + s) for s in splits] + [1.0]
    else:
        a, b = map(float, domain)
        if not b > a:
            raise ValueError("interval must satisfy a < b")
        transform = None
        cuts = sorted({a, b} | {s for s in cfg.split_points if a < s < b})
    lo = np.array(cuts[:-1], dtype=float)
    hi = np.array(cuts[1:], dtype=float)

    k, err = _gk_batch(f, lo, hi, transform)
    n_sub = len(lo)
    # intervals kept as arrays; refine the worst ones in batches
    while True:
        total = k.sum(axis=0)
        tot_err = err.sum(axis=0)
        target = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(total))
        if np.all(tot_err <= target):
            break
        if n_sub >= cfg.max_subdivisions:
            value = total if np.ndim(total) else float(total)
            est = tot_err if np.ndim(tot_err) else float(tot_err)
            raise QuadratureError(
                f"no convergence after {n_sub} subdivisions (err {np.max(tot_err):.3e})",
                best_estimate=value, err_estimate=est)
        # relative contribution of each interval to the worst component
        share = (err / target).reshape(len(lo), -1).max(axis=1)
        order = np.argsort(share)[::-1]
        n_split = max(1, min(len(order), (cfg.max_subdivisions - n_sub), int(np.sum(share > 1.0 / len(lo))) or 1))
        pick = order[:n_split]
        keep = np.ones(len(lo), dtype=bool)
        keep[pick] = False
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        nk, ne = _gk_batch(f, new_lo, new_hi, transform)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        k = np.concatenate([k[keep], nk])
        err = np.concatenate([err[keep], ne])
        n_sub += n_split
    total = k.sum(axis=0)
    tot_err = err.sum(axis=0)
    if np.ndim(total) == 0:
        return float(total), float(tot_err)
    return total, tot_err


# --------------------------------------------------------------------------
# Fixed composite Gauss-Legendre rule

@lru_cache(maxsize=16)
def _gauss_legendre(n):
    return legendre.leggauss(n)


def gauss_legendre_nodes(breaks: Sequence[float], n: int = 20):
    """Nodes and weights of the composite ``n``-point Gauss-Legendre rule."""
    t, w = _gauss_legendre(n)
    br = np.asarray(breaks, dtype=float)
    half = 0.5 * np.diff(br)
    mid = 0.5 * (br[1:] + br[:-1])
    x = (mid[:, None] + half[:, None] * t).ravel()
    wt = (half[:, None] * w).ravel()
    return x, wt


# --------------------------------------------------------------------------
# Chebyshev-Lobatto panels

@lru_cache(maxsize=16)
def _cheb_panel(n):
    """Reference data for ``n + 1`` Lobatto points on [-1, 1] (ascending)."""
    t = -np.cos(np.pi * np.arange(n + 1) / n)
    t[0], t[-1] = -1.0, 1.0
    if n % 2 == 0:
        t[n // 2] = 0.0
    bw = np.ones(n + 1)
    bw[1::2] = -1.0
    bw[0] *= 0.5
    bw[-1] *= 0.5
    V = C.chebvander(t, n)
    to_coef = np.linalg.inv(V)
    # cumulative integral from -1 of each T_k, evaluated at the nodes
    Vint = np.empty((n + 1, n + 1))
    Vder = np.empty((n + 1, n + 1))
    for k in range(n + 1):
        e = np.zeros(n + 1)
        e[k] = 1.0
        Vint[:, k] = C.chebval(t, C.chebint(e, lbnd=-1))
        Vder[:, k] = C.chebval(t, C.chebder(e)) if k > 0 else 0.0
    S = Vint @ to_coef
    D = Vder @ to_coef
    w = S[-1].copy()
    return t, bw, to_coef, S, D, w


def _barycentric(t_nodes, bw, values, t):
    """Evaluate the interpolant through (t_nodes, values) at points t (one panel)."""
    diff = t[:, None] - t_nodes[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        q = bw[None, :] / diff
        out = (q @ values) / q.sum(axis=1)
    hit = exact.any(axis=1)
    if hit.any():
        out[hit] = values[np.argmax(exact[hit], axis=1)]
    return out


@dataclass(frozen=True)
class PanelGrid:
    """Composite Chebyshev-Lobatto grid on ``[breaks[0], breaks[-1]]``.

    Each panel carries ``order + 1`` points; neighbouring panels share their
    endpoint so ``nodes`` is strictly increasing with ``order * n_panels + 1``
    entries.
    """

    breaks: np.ndarray
    order: int = 16

    def __post_init__(self):
        br = np.asarray(self.breaks, dtype=float)
        if br.ndim != 1 or len(br) < 2 or np.any(np.diff(br) <= 0):
            raise ValueError("breaks must be strictly increasing with at least two entries")
        object.__setattr__(self, "breaks", br)

    @property
    def n_panels(self):
        return len(self.breaks) - 1

    @property
    def nodes(self):
        t = _cheb_panel(self.order)[0]
        half = 0.5 * np.diff(self.breaks)
        mid = 0.5 * (self.breaks[1:] + self.breaks[:-1])
        x = mid[:, None] + half[:, None] * t[None, :]
        x[:, 0] = self.breaks[:-1]
        x[:, -1] = self.breaks[1:]
        return np.concatenate([x[:, :-1].ravel(), self.breaks[-1:]])

    def panels(self, values):
        """View node values as an ``(n_panels, order + 1)`` array."""
        v = np.asarray(values)
        n = self.order
        idx = np.arange(self.n_panels)[:, None] * n + np.arange(n + 1)[None, :]
        return v[..., idx]

    def weights(self):
        """Clenshaw-Curtis weights for all nodes."""
        w = _cheb_panel(self.order)[5]
        half = 0.5 * np.diff(self.breaks)
        pw = half[:, None] * w[None, :]
        out = np.zeros(self.order * self.n_panels + 1)
        idx = np.arange(self.n_panels)[:, None] * self.order + np.arange(self.order + 1)[None, :]
        np.add.at(out, idx, pw)
        return out

    def integrate(self, values):
        return float(self.weights() @ np.asarray(values, dtype=float))

    def panel_integrals(self, values):
        """Integral of the interpolant over each panel."""
        w = _cheb_panel(self.order)[5]
        half = 0.5 * np.diff(self.breaks)
        return (self.panels(values) @ w) * half

    def derivative(self, values):
        """Derivative of the piecewise interpolant at the nodes.

        At shared panel endpoints the left and right one-sided values are
        averaged.
        """
        D = _cheb_panel(self.order)[4]
        half = 0.5 * np.diff(self.breaks)
        dp = (self.panels(values) @ D.T) / half[:, None]
        n = self.order
        out = np.empty(n * self.n_panels + 1)
        out[:-1].reshape(self.n_panels, n)[:] = dp[:, :-1]
        out[-1] = dp[-1, -1]
        out[n:-1:n] = 0.5 * (dp[:-1, -1] + dp[1:, 0])
        return out

    def scaled_cumulative(self, values, log_weight, from_left=True):
        """Weighted running integral, divided by the weight, in log space.

        With ``w = exp(log_weight)`` this returns, at each node ``x``,

        * ``w(x)**-1 * integral_{x0}^{x} f w``   if ``from_left``
        * ``w(x)**-1 * integral_{x}^{x_end} f w`` otherwise

        without ever forming ``w`` itself, so it is safe where ``w`` under- or
        overflows.  Each panel is integrated with its own local reference
        weight; the carried total is rescaled panel by panel.
        """
        f = np.asarray(values, dtype=float)
        lw = np.asarray(log_weight, dtype=float)
        S = _cheb_panel(self.order)[3]
        half = 0.5 * np.diff(self.breaks)
        fp = self.panels(f)
        lp = self.panels(lw)
        n = self.order
        out = np.empty(n * self.n_panels + 1)
        finite = np.isfinite(lp)
        if from_left:
            carry = 0.0  # running integral divided by w at the panel start
            out[0] = 0.0
            for j in range(self.n_panels):
                ref = lp[j].max()
                g = fp[j] * np.exp(lp[j] - ref)
                lead = carry * np.exp(lp[j, 0] - ref) if carry else 0.0
                cum = (S @ g) * half[j] + lead  # divided by w_ref
                with np.errstate(over="ignore", invalid="ignore"):
                    seg = np.where(finite[j], cum * np.exp(ref - lp[j]), 0.0)
                out[j * n + 1:(j + 1) * n + 1] = seg[1:]
                carry = seg[-1]
        else:
            carry = 0.0  # running tail integral divided by w at the panel end
            out[-1] = 0.0
            for j in range(self.n_panels - 1, -1, -1):
                ref = lp[j].max()
                g = fp[j] * np.exp(lp[j] - ref)
                cum = S @ g
                lead = carry * np.exp(lp[j, -1] - ref) if carry else 0.0
                tail = (cum[-1] - cum) * half[j] + lead
                with np.errstate(over="ignore", invalid="ignore"):
                    seg = np.where(finite[j], tail * np.exp(ref - lp[j]), 0.0)
                out[j * n:(j + 1) * n] = seg[:-1]
                carry = seg[0]
        return out

    def truncated(self, n_panels):
        """The grid made of the first ``n_panels`` panels."""
        return PanelGrid(self.breaks[: n_panels + 1], self.order)

    def locate(self, x):
        """Panel index for each point (clipped to the grid)."""
        j = np.searchsorted(self.breaks, x, side="right") - 1
        return np.clip(j, 0, self.n_panels - 1)

    def interpolate(self, values, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t_ref, bw = _cheb_panel(self.order)[:2]
        vp = self.panels(np.asarray(values, dtype=float))
        j = self.locate(x)
        out = np.empty_like(x)
        for jj in np.unique(j):
            sel = j == jj
            a, b = self.breaks[jj], self.breaks[jj + 1]
            t = (2.0 * x[sel] - a - b) / (b - a)
            out[sel] = _barycentric(t_ref, bw, vp[jj], t)
        return out


def build_panel_grid(funcs: Callable, a: float, b: float, order: int = 16, rel_tol: float = 1e-13,
                     max_width: float = np.inf, log_weight: Callable | None = None,
                     max_log_step: float = 4.0, init_panels: int = 8, max_panels: int = 4000,
                     abs_floor: float = 1e-300) -> PanelGrid:
    """Adaptively split ``[a, b]`` until every sampled function is resolved.

    ``funcs(x)`` returns an array ``(m, len(x))`` (or ``(len(x),)``).  A panel
    is accepted when the trailing Chebyshev coefficients of every function are
    below ``rel_tol`` times the function's magnitude on that panel (plus
    ``abs_floor``, which may be a callable giving a per-node roundoff level
    shaped like ``funcs(x)``), its width
    is at most ``max_width``, and ``log_weight`` (if given) changes by at most
    ``max_log_step`` across it.
    """
    t_ref = _cheb_panel(order)[0]
    to_coef = _cheb_panel(order)[2]
    todo = list(np.linspace(a, b, init_panels + 1))
    todo = [(todo[i], todo[i + 1]) for i in range(init_panels)]
    done = []
    while todo:
        if len(done) + len(todo) > max_panels:
            raise RuntimeError(f"panel refinement exceeded {max_panels} panels")
        lo = np.array([p[0] for p in todo])
        hi = np.array([p[1] for p in todo])
        x = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * t_ref[None, :]
        vals = np.asarray(funcs(x.ravel()), dtype=float)
        vals = vals.reshape((-1,) + x.shape)  # (m, n_todo, order+1)
        coef = vals @ to_coef.T
        scale = np.abs(vals).max(axis=2)
        tail = np.abs(coef[..., -3:]).max(axis=2)
        if callable(abs_floor):
            floor = np.abs(np.asarray(abs_floor(x.ravel()), dtype=float)).reshape(vals.shape).max(axis=2)
        else:
            floor = abs_floor
        ok = np.all((tail <= rel_tol * scale + floor) & np.isfinite(tail), axis=0)
        ok &= (hi - lo) <= max_width
        if log_weight is not None:
            lw = np.asarray(log_weight(x.ravel())).reshape(x.shape)
            ok &= np.ptp(lw, axis=1) <= max_log_step
        nxt = []
        for i, (l, h) in enumerate(todo):
            if ok[i] or (h - l) < 1e-12 * max(1.0, abs(h)):
                done.append((l, h))
            else:
                m = 0.5 * (l + h)
                nxt.extend([(l, m), (m, h)])
        todo = nxt
    done.sort()
    breaks = np.array([p[0] for p in done] + [done[-1][1]])
    return PanelGrid(breaks, order)


@dataclass(frozen=True)
class GridFunction:
    """A real function sampled on a :class:`PanelGrid`.

    Beyond the last node the function continues as ``c / x**tail_exponent``
    with ``c`` fixed by continuity.  ``parity`` (+1 even, -1 odd, 0 none)
    extends a half-line sample to negative ``x``.
    """

    grid: PanelGrid
    values: np.ndarray
    tail_exponent: float = 0.0
    parity: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ValueError("values must match the grid nodes")
        object.__setattr__(self, "values", v)

    @property
    def nodes(self):
        return self.grid.nodes

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x).astype(float).copy()
        sign = np.ones_like(xf)
        lo, hi = self.grid.breaks[0], self.grid.breaks[-1]
        if self.parity != 0:
            neg = xf < lo
            if lo != 0.0 and neg.any():
                raise ValueError("parity extension requires a grid starting at 0")
            xf[neg] = -xf[neg]
            if self.parity < 0:
                sign[neg] = -1.0
        elif np.any(xf < lo):
            raise ValueError(f"x below grid start {lo}")
        out = np.empty_like(xf)
        inside = xf <= hi
        if inside.any():
            out[inside] = self.grid.interpolate(self.values, xf[inside])
        if (~inside).any():
            c = self.values[-1] * hi**self.tail_exponent
            out[~inside] = c / xf[~inside] ** self.tail_exponent
        out *= sign
        return float(out[0]) if scalar else out.reshape(x.shape)

    def derivative(self, x):
        """Derivative of the interpolant (tail law beyond the grid)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x).astype(float).copy()
        sign = np.ones_like(xf)
        neg = xf < self.grid.breaks[0]
        if self.parity != 0:
            xf[neg] = -xf[neg]
            if self.parity > 0:
                sign[neg] = -1.0  # derivative of an even function is odd
        hi = self.grid.breaks[-1]
        out = np.empty_like(xf)
        inside = xf <= hi
        if inside.any():
            d = self.grid.derivative(self.values)
            out[inside] = self.grid.interpolate(d, xf[inside])
        if (~inside).any():
            p = self.tail_exponent
            c = self.values[-1] * hi**p
            out[~inside] = -p * c / xf[~inside] ** (p + 1)
        out *= sign
        return float(out[0]) if scalar else out.reshape(x.shape)


def build_grid_function(f: Callable, x_max: float, density_hint: int = 16, tail_exponent: float = 0.0,
                        x_min: float = 0.0, parity: int = 0, rel_tol: float = 1e-13,
                        max_width: float = np.inf) -> GridFunction:
    """Sample a vectorised ``f`` on an adaptive Chebyshev panel grid.

    ``density_hint`` is the number of Chebyshev intervals per panel.
    """
    if not x_max > x_min:
        raise ValueError("x_max must exceed x_min")
    grid = build_panel_grid(f, x_min, x_max, order=int(density_hint), rel_tol=rel_tol,
                            max_width=max_width)
    vals = np.asarray(f(grid.nodes), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise ValueError(f"function is not finite at node x = {grid.nodes[bad][0]!r}")
    return GridFunction(grid, vals, tail_exponent=tail_exponent, parity=parity)


def fsum_compensated(values):
    """Exactly rounded sum (Shewchuk), for the high-order corrections."""
    return math.fsum(np.asarray(values, dtype=float).ravel())
