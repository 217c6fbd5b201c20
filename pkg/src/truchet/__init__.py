"""Truchet-tile curves from pairs of two-sided sign sequences.

The package follows curves through the tiling of a pair of sequences,
collapses and renormalizes such pairs, evaluates the exact cocycle formulas
for closed-curve probabilities and checks them by simulation.
"""

from .sequences import (
    MINUS,
    PLUS,
    CylinderPattern,
    MarkovParams,
    Sequence,
    cylinder_measure,
    sample_markov,
)
from .dynamics import State, StepClass, TraceResult, phi, phi_inverse, trace

__all__ = [
    "MINUS",
    "PLUS",
    "CylinderPattern",
    "MarkovParams",
    "Sequence",
    "State",
    "StepClass",
    "TraceResult",
    "cylinder_measure",
    "phi",
    "phi_inverse",
    "sample_markov",
    "trace",
]
