"""Numerical laboratory for pinching, planarity and convexity estimates in mean curvature flow."""

from . import constants, exact, flow, frame_algebra, gaussian, sampling, suites
from .errors import PinchlabError

__all__ = ["constants", "exact", "flow", "frame_algebra", "gaussian", "sampling", "suites",
           "PinchlabError"]
__version__ = "0.1.0"
