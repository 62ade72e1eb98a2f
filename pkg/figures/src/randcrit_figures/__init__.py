"""Static figures from randcrit CLI artifacts."""

from .render import (
    ANGULAR_TOL,
    FigureKind,
    FigureSpec,
    RenderError,
    angular_uniformity,
    render,
    scaling_points,
)
from .schema import SchemaError

__version__ = "0.1.0"

__all__ = [
    "ANGULAR_TOL",
    "FigureKind",
    "FigureSpec",
    "RenderError",
    "SchemaError",
    "angular_uniformity",
    "render",
    "scaling_points",
    "__version__",
]
