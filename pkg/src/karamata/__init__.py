"""Numerical toolkit for slowly varying functions.

Expressions are built from a small catalog and closure operations
(:mod:`karamata.core`), checked for slow variation (:mod:`karamata.verify`)
and turned into smooth equivalents (:mod:`karamata.smooth`).
"""

__version__ = "0.1.0"

from .core import GridSpec, evaluate, eval_log  # noqa: E402
from .dsl import parse, to_text  # noqa: E402
from .quadrature import CheckConfig  # noqa: E402

__all__ = ["GridSpec", "CheckConfig", "evaluate", "eval_log", "parse", "to_text", "__version__"]
