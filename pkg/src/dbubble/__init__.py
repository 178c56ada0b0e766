"""Numerics for constant-mean-curvature generating curves and double bubbles in R^n."""

from .delaunay import (
    CurveState,
    DelaunayClass,
    DelaunayParams,
    GeneratingCurve,
    StopSpec,
    classify,
    evaluate_ode,
    force,
    state_from_invariants,
    trace,
)
from .errors import DbubbleError, DomainError, NoSuchPoint

__version__ = "0.1.0"
