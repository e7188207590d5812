"""The potential family V(x) = m2 x^2 + g x^4 and its scaling reduction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PotentialSpec:
    """Coefficients of ``V(x) = m2*x**2 + g*x**4``.

    ``m2`` may be negative (double well).  ``g`` must be non-negative, and
    ``g == 0`` is only a bound problem for ``m2 > 0``.
    """

    m2: float
    g: float

    def __post_init__(self):
        if not np.isfinite(self.m2) or not np.isfinite(self.g):
            raise ValueError("m2 and g must be finite")
        if self.g < 0:
            raise ValueError(f"quartic coupling must be non-negative, got g={self.g}")
        if self.g == 0 and self.m2 <= 0:
            raise ValueError("g = 0 requires m2 > 0 for a bound ground state")

    @property
    def m(self):
        """Harmonic frequency ``sqrt(m2)``; only defined for ``m2 >= 0``."""
        if self.m2 < 0:
            raise ValueError("m = sqrt(m2) is imaginary for a double well")
        return float(np.sqrt(self.m2))

    def __call__(self, x):
        return eval_potential(self, x)


def eval_potential(spec: PotentialSpec, x):
    x2 = np.square(x)
    return spec.m2 * x2 + spec.g * x2 * x2


def symanzik_reduce(spec: PotentialSpec):
    """Map ``(m2, g)`` onto the one-parameter family with unit coupling.

    Returns ``(reduced, energy_factor, length_factor)`` such that
    ``E(spec) = energy_factor * E(reduced)`` and
    ``psi(x; spec) = psi(x * length_factor; reduced)``.
    """
    if spec.g <= 0:
        raise ValueError("scaling reduction needs g > 0")
    g13 = spec.g ** (1.0 / 3.0)
    reduced = PotentialSpec(spec.m2 / g13**2, 1.0)
    return reduced, g13, spec.g ** (1.0 / 6.0)


def symanzik_expand(reduced_m2: float, g: float) -> PotentialSpec:
    """Inverse of :func:`symanzik_reduce`: the spec with coupling ``g`` whose
    reduced parameter is ``reduced_m2``."""
    return PotentialSpec(reduced_m2 * g ** (2.0 / 3.0), g)
