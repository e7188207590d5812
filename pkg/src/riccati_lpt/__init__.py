"""Logarithmic perturbation theory for the quartic (double-well) oscillator."""

from .model import PotentialSpec, symanzik_expand, symanzik_reduce
from .trial import ExcitedSpec, FullTrialParams, SimpleTrialParams

__all__ = ["PotentialSpec", "symanzik_reduce", "symanzik_expand", "SimpleTrialParams",
           "FullTrialParams", "ExcitedSpec"]
__version__ = "0.1.0"
