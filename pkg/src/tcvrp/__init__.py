"""Time-constrained capacitated vehicle routing: solvers, pipeline, harness."""

from .instance import TcvrpInstance
from .solution import Solution

__all__ = ["TcvrpInstance", "Solution"]
__version__ = "0.1.0"
