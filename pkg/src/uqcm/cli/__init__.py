"""Command-line surface and the cross-model equivalence harness."""

from .equivalence import EquivReport, cross_model_equivalence
from .main import main

__all__ = ["EquivReport", "cross_model_equivalence", "main"]
