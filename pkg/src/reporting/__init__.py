"""Chart output."""

from .plots import emit_plots, parse_svg_data, render_chart

__all__ = ["emit_plots", "parse_svg_data", "render_chart"]
