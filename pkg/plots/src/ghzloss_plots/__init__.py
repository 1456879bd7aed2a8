"""Batch figure rendering for ghzloss result files.

Reads only the simulator's documented outputs (rate CSVs and threshold JSON
documents); never imports the simulator itself.
"""

__version__ = "0.1.0"

from .render import RenderResult, render_comparison, render_crossing

__all__ = ["RenderResult", "render_comparison", "render_crossing", "__version__"]
