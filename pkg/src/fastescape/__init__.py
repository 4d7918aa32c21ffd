"""Escape lengths of planar incompressible flows.

Flow along ``v`` can take length ~ c2/c1 to leave a unit disk; flowing first
along the perpendicular field and then along ``v`` always escapes within
``sqrt(4 pi c2/c1)``.  This package integrates the flows, builds the stream
function, finds the short level set and checks the quantitative bounds.
"""

from .errors import (
    ConsistencyError,
    DomainError,
    EscapeLabError,
    HypothesisViolated,
    IncompressibilityError,
    NumericalFailure,
    ParseError,
)
from .fieldcore import (
    Disk,
    FieldBounds,
    PlanarField,
    const_field,
    curl,
    curl_integral,
    divergence,
    estimate_bounds,
    make_field,
    perpendicular,
    rotation,
    unit_disk,
    vn_field,
    zigzag_field,
    zigzag_gradient,
)
from .flow import EscapeResult, FlowCurve, escape_length
from .planner import EscapePlan, compare_strategies, plan_escape
from .stream import ScalarGrid, compute_stream_function, find_short_level

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError", "DomainError", "EscapeLabError", "HypothesisViolated",
    "IncompressibilityError", "NumericalFailure", "ParseError",
    "Disk", "FieldBounds", "PlanarField", "const_field", "curl", "curl_integral",
    "divergence", "estimate_bounds", "make_field", "perpendicular", "rotation",
    "unit_disk", "vn_field", "zigzag_field", "zigzag_gradient",
    "EscapeResult", "FlowCurve", "escape_length",
    "EscapePlan", "compare_strategies", "plan_escape",
    "ScalarGrid", "compute_stream_function", "find_short_level",
]
