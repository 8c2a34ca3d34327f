"""Exact computations for weighted walks in the quarter plane.

Modules: ``exactalg`` (fractions, truncated series), ``towers`` (algebraic
extension towers), ``model`` (step sets, kernel, functional equation),
``enumeration``, ``orbit``, ``invariants``, ``decouple``, ``pipeline``
(certification) and ``guess`` (annihilator guessing).
"""

__version__ = "0.1.0"

from .model import BUILTIN_MODELS, StepModel, kernel, load_model, parse_model  # noqa: E402

__all__ = ["BUILTIN_MODELS", "StepModel", "kernel", "load_model", "parse_model", "__version__"]
