from .render import FIGURE_KINDS, FigureSpec, RenderError, render, series_count

__version__ = "0.1.0"
