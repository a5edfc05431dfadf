"""Figure regeneration for reservoir generalised-synchronisation runs."""

__version__ = "0.1.0"

from .figures import FigureSpec, RenderError, build_figure, render, specs_from_manifests
