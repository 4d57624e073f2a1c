"""Compositional bounded synthesis of distributed reactive systems with certificates."""

from .architecture import Architecture, Process, validate
from .logic import ConjunctiveSpec, decompose, parse_ltl, relevant_processes
from .machines import GuaranteeTs, LocalStrategy, MooreTs, compose, extend, restrict, simulates
from .synthesis import Solution, Unknown, Unrealizable, synthesize
from .verification import verify_solution

__version__ = "0.1.0"

__all__ = [
    "Architecture", "Process", "validate", "ConjunctiveSpec", "decompose", "parse_ltl",
    "relevant_processes", "MooreTs", "GuaranteeTs", "LocalStrategy", "compose", "extend", "restrict",
    "simulates", "synthesize", "Solution", "Unrealizable", "Unknown", "verify_solution", "__version__",
]
