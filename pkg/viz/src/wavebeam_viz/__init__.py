from .render import KINDS, FigureRequest, SchemaError, render

__all__ = ["FigureRequest", "KINDS", "SchemaError", "render"]
