"""Trial functions psi_0 = exp(-phi) and their logarithmic derivatives.

Sign convention: ``y = phi' = -psi'/psi`` throughout, so that the Riccati
equation reads ``y' - y**2 = E - V`` and a trial function is the exact zero
mode of ``V0 = y0**2 - y0'``.

Families
--------
simple / modified
    ``psi = (1 + c x^2)^(-1/2) exp(-a x^2/2 - b sqrt(g) |x|^3 / 3)``;
    ``c = 0`` is the plain two-parameter interpolation.
full
    ``psi = (1 + c^2 x^2)^(-1/2) exp(-(A + a x^2/2 + b g x^4/4) / sqrt(d^2 + g x^2))``.
excited
    ``x^p P_k(x^2)`` times a ``full`` trial function, with ``P_k`` monic and
    ``k`` positive roots.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .quadgrid import HALF_LINE, QuadratureConfig, integrate


@dataclass(frozen=True)
class SimpleTrialParams:
    a: float
    b: float
    c: float = 0.0

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be non-negative")
        if self.b < 0:
            raise ValueError("b must be non-negative")

    @property
    def family(self):
        return "simple" if self.c == 0 else "modified"


@dataclass(frozen=True)
class FullTrialParams:
    A: float
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not self.d**2 > 0:
            raise ValueError("d**2 must be positive")
        if self.b <= 0:
            raise ValueError("b must be positive")

    family = "full"


SUPPORTED_STATES = {(0, 0), (0, 1), (1, 0), (1, 1)}


@dataclass(frozen=True)
class ExcitedSpec:
    """State ``(k, p)``: ``x^p prod_i (x^2 - roots[i])`` times ``base``."""

    k: int
    p: int
    roots: tuple = ()
    base: FullTrialParams = None

    def __post_init__(self):
        if (self.k, self.p) not in SUPPORTED_STATES:
            raise ValueError(f"state (k={self.k}, p={self.p}) not supported")
        roots = tuple(float(r) for r in self.roots)
        object.__setattr__(self, "roots", roots)
        if self.base is None:
            raise ValueError("an excited state needs base parameters")
        if len(roots) != self.k:
            raise ValueError(f"k={self.k} needs exactly {self.k} roots, got {len(roots)}")
        if any(r <= 0 for r in roots) or len(set(roots)) != len(roots):
            raise ValueError("roots must be positive and distinct")

    family = "excited"

    @property
    def node_count(self):
        return 2 * self.k + self.p

    @property
    def nodes(self):
        pos = sorted(np.sqrt(self.roots))
        return sorted([-r for r in pos] + ([0.0] if self.p else []) + pos)


Trial = Union[SimpleTrialParams, FullTrialParams, ExcitedSpec]


def check_normalizable(trial: Trial, g: float):
    base = trial.base if isinstance(trial, ExcitedSpec) else trial
    if isinstance(base, SimpleTrialParams):
        if g > 0 and not base.b > 0:
            raise ValueError("b must be positive when g > 0")
        if g == 0 and not base.a > 0:
            raise ValueError("a must be positive when g = 0")
    elif isinstance(base, FullTrialParams):
        if g == 0 and not base.a > 0:
            raise ValueError("a must be positive when g = 0")


# ---------------------------------------------------------------------------
# simple / modified family

def _simple_log_psi(p: SimpleTrialParams, g, x):
    ax = np.abs(x)
    return -0.5 * p.a * x * x - p.b * np.sqrt(g) * ax**3 / 3.0 - 0.5 * np.log1p(p.c * x * x)


def y0_simple(params: SimpleTrialParams, g: float, x):
    """``a x + b sqrt(g) x|x| + c x / (1 + c x^2)``."""
    x = np.asarray(x, dtype=float)
    return params.a * x + params.b * np.sqrt(g) * x * np.abs(x) + params.c * x / (1.0 + params.c * x * x)


def _simple_y0_prime(p: SimpleTrialParams, g, x):
    cx2 = p.c * x * x
    return p.a + 2.0 * p.b * np.sqrt(g) * np.abs(x) + p.c * (1.0 - cx2) / (1.0 + cx2) ** 2


# ---------------------------------------------------------------------------
# full family

def _full_parts(p: FullTrialParams, g, x):
    x2 = x * x
    s = np.sqrt(p.d**2 + g * x2)
    N = p.A + 0.5 * p.a * x2 + 0.25 * p.b * g * x2 * x2
    N1 = p.a * x + p.b * g * x * x2
    N2 = p.a + 3.0 * p.b * g * x2
    return x2, s, N, N1, N2


def _full_log_psi(p: FullTrialParams, g, x):
    x2, s, N, _, _ = _full_parts(p, g, x)
    return -0.5 * np.log1p(p.c**2 * x2) - N / s


def _full_y0(p: FullTrialParams, g, x):
    x2, s, N, N1, _ = _full_parts(p, g, x)
    c2 = p.c**2
    return c2 * x / (1.0 + c2 * x2) + N1 / s - N * g * x / s**3


def _full_y0_prime(p: FullTrialParams, g, x):
    x2, s, N, N1, N2 = _full_parts(p, g, x)
    c2 = p.c**2
    s3 = s**3
    return (c2 * (1.0 - c2 * x2) / (1.0 + c2 * x2) ** 2
            + N2 / s - 2.0 * N1 * g * x / s3 - N * g / s3 + 3.0 * N * g * g * x2 / s**5)


# ---------------------------------------------------------------------------
# excited states

def _poly_u(spec: ExcitedSpec):
    u = np.polynomial.Polynomial([0.0] * spec.p + [1.0])
    for r in spec.roots:
        u = u * np.polynomial.Polynomial([-r, 0.0, 1.0])
    return u


def _ratio_y_over_x(base, g, x):
    """``y_base(x) / x`` with the x -> 0 limit filled in."""
    small = np.abs(x) < 1e-7
    xs = np.where(small, 1.0, x)
    out = _full_y0(base, g, xs) / xs
    if np.any(small):
        out = np.where(small, _full_y0_prime(base, g, np.zeros_like(x)), out)
    return out


def _excited_log_psi(spec: ExcitedSpec, g, x):
    u = _poly_u(spec)
    uval = u(x)
    sign = np.sign(uval)
    zero = sign == 0
    if np.any(zero):
        # signed-zero convention: take the sign of the right-hand limit
        sign = np.where(zero, np.sign(u(np.nextafter(x, np.inf))), sign)
        sign = np.where(sign == 0, np.sign(u.deriv()(x)), sign)
    with np.errstate(divide="ignore"):
        lu = np.log(np.abs(uval))
    return lu + _full_log_psi(spec.base, g, x), sign


def _excited_y0(spec: ExcitedSpec, g, x):
    u = _poly_u(spec)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _full_y0(spec.base, g, x) - u.deriv()(x) / u(x)


def _excited_v0(spec: ExcitedSpec, g, x):
    base = spec.base
    yb = _full_y0(base, g, x)
    out = yb**2 - _full_y0_prime(base, g, x)
    x2 = x * x
    p = spec.p
    if p:
        out = out - 2.0 * _ratio_y_over_x(base, g, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i, r in enumerate(spec.roots):
            out = out - 4.0 * x * yb / (x2 - r) + (4 * p + 2) / (x2 - r)
            for j, r2 in enumerate(spec.roots):
                if j != i:
                    out = out + 4.0 * x2 / ((x2 - r) * (x2 - r2))
    return out


# ---------------------------------------------------------------------------
# dispatch

def psi0_eval(trial: Trial, g: float, x):
    """``log psi_0(x)``; for excited states a pair ``(log|psi_0|, sign)``."""
    x = np.asarray(x, dtype=float)
    if isinstance(trial, SimpleTrialParams):
        return _simple_log_psi(trial, g, x)
    if isinstance(trial, FullTrialParams):
        return _full_log_psi(trial, g, x)
    if isinstance(trial, ExcitedSpec):
        return _excited_log_psi(trial, g, x)
    raise TypeError(f"unknown trial {trial!r}")


def log_abs_psi(trial: Trial, g: float, x):
    out = psi0_eval(trial, g, x)
    return out[0] if isinstance(trial, ExcitedSpec) else out


def y0(trial: Trial, g: float, x):
    x = np.asarray(x, dtype=float)
    if isinstance(trial, SimpleTrialParams):
        return y0_simple(trial, g, x)
    if isinstance(trial, FullTrialParams):
        return _full_y0(trial, g, x)
    if isinstance(trial, ExcitedSpec):
        return _excited_y0(trial, g, x)
    raise TypeError(f"unknown trial {trial!r}")


def y0_prime(trial: Trial, g: float, x):
    x = np.asarray(x, dtype=float)
    if isinstance(trial, SimpleTrialParams):
        return _simple_y0_prime(trial, g, x)
    if isinstance(trial, FullTrialParams):
        return _full_y0_prime(trial, g, x)
    if isinstance(trial, ExcitedSpec):
        yv = _excited_y0(trial, g, x)
        return yv**2 - _excited_v0(trial, g, x)
    raise TypeError(f"unknown trial {trial!r}")


def v0_from_y0(y0_fn, y0_prime_fn, x):
    """Potential with zero mode ``exp(-integral y0)`` at eigenvalue 0."""
    return y0_fn(x) ** 2 - y0_prime_fn(x)


def v0(trial: Trial, g: float, x):
    """``V0 = psi0''/psi0``, analytic for every family (regular at x = 0 for p = 1)."""
    x = np.asarray(x, dtype=float)
    if isinstance(trial, ExcitedSpec):
        return _excited_v0(trial, g, x)
    return v0_from_y0(lambda t: y0(trial, g, t), lambda t: y0_prime(trial, g, t), x)


def psi_prime_over_abs_base(spec: ExcitedSpec, g, x):
    """``psi'(x) / chi(x)`` where ``chi`` is the nodeless base factor."""
    u = _poly_u(spec)
    return u.deriv()(x) - u(x) * _full_y0(spec.base, g, x)


# ---------------------------------------------------------------------------
# parameter rules

def fix_case1_constraints(m2: float, g: float, d: float):
    """Pin ``(a, b)`` so the growing terms of the large-x expansion of y are exact."""
    if not g > 0:
        raise ValueError("asymptotic matching needs g > 0")
    return d * d / 3.0 + m2, 4.0 / 3.0


def case1_d_from_a(m2: float, a: float):
    """Invert :func:`fix_case1_constraints` for ``d**2``."""
    return 3.0 * (a - m2)


def extract_E_exp(trial: FullTrialParams, g: float):
    """Coefficient of x in the small-x expansion of y0 for the full family."""
    d = abs(trial.d)
    return trial.c**2 + trial.a / d - trial.A * g / d**3


def _overlap_moments(upper: ExcitedSpec, lower: ExcitedSpec, g, cfg):
    """Moments int x^(2p) x^(2j) u_low chi_up chi_low dx for j = 0..k, half line."""
    lp = upper.p
    u_low = _poly_u(lower)

    def f(x):
        lw = _full_log_psi(upper.base, g, x) + _full_log_psi(lower.base, g, x)
        w = np.exp(lw - ref) * x ** lp * u_low(x)
        return np.array([w * x ** (2 * j) for j in range(upper.k + 1)])

    xs = np.linspace(0.0, 20.0, 2001)
    ref = np.max(_full_log_psi(upper.base, g, xs) + _full_log_psi(lower.base, g, xs))
    val, _ = integrate(f, HALF_LINE, cfg)
    return np.atleast_1d(val)


def _signed_log(s, g, x):
    out = psi0_eval(s, g, x)
    return out if isinstance(s, ExcitedSpec) else (out, np.ones_like(x))


def overlap(s1: Trial, s2: Trial, g: float, cfg: QuadratureConfig | None = None):
    """``(<s1|s2>, |s1|, |s2|)`` over the full line, each norm scaled by its peak."""
    # integrands are O(1) after peak scaling; an absolute floor lets a vanishing overlap converge
    cfg = cfg or QuadratureConfig(abs_tol=1e-13, rel_tol=1e-13)
    xs = np.linspace(-20.0, 20.0, 4001)
    with np.errstate(divide="ignore"):
        r1 = np.max(_signed_log(s1, g, xs)[0])
        r2 = np.max(_signed_log(s2, g, xs)[0])

    def f(x):
        total = 0.0
        for xx in (x, -x):
            with np.errstate(divide="ignore"):
                l1, sg1 = _signed_log(s1, g, xx)
                l2, sg2 = _signed_log(s2, g, xx)
            e1, e2 = np.exp(l1 - r1), np.exp(l2 - r2)
            total = total + np.array([sg1 * sg2 * e1 * e2, e1 * e1, e2 * e2])
        return total

    val, _ = integrate(f, HALF_LINE, cfg)
    return val[0], np.sqrt(val[1]), np.sqrt(val[2])


def build_excited(spec: ExcitedSpec, lower_states, g: float, cfg: QuadratureConfig | None = None) -> ExcitedSpec:
    """Fix the polynomial roots of ``spec`` by orthogonality to ``lower_states``.

    States of the other parity are orthogonal automatically and ignored.  The
    overlap is linear in each root once the others are fixed, so with one
    root the constraint is solved in closed form.
    """
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=2e-13)
    same = [s for s in lower_states if s.p == spec.p]
    if any(s.k >= spec.k for s in same):
        raise ValueError("lower states must have k' < k")
    if len(same) > spec.k:
        raise ValueError(f"{len(same)} orthogonality constraints but only {spec.k} free roots")
    if spec.k == 0:
        return spec
    if len(same) == 0:
        return spec
    # k == 1 with one constraint: overlap = M1 - r * M0
    trial = replace(spec, roots=(1.0,))
    lower = same[0]
    m = _overlap_moments(trial, lower, g, cfg)
    root = m[1] / m[0]
    if not root > 0:
        raise ValueError("orthogonality constraint has no positive root")
    return replace(spec, roots=(float(root),))
