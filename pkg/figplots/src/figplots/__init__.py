"""Figure rendering for the two-stream benchmark diagnostics CSVs."""

from .render import EXPECTED_COLUMNS, FigureSpec, SchemaError, load_diagnostics, render

__all__ = ["EXPECTED_COLUMNS", "FigureSpec", "SchemaError", "load_diagnostics", "render"]
__version__ = "0.1.0"
