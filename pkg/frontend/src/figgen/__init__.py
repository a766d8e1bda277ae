"""Batch figure generation over l4sim result CSVs.

Reads the experiment CSV schema (one row per scenario/seed plus mean and
std aggregate rows) and renders throughput/delay heatmaps, share bars, and
two-panel time-series figures.  Rendering is read-only and deterministic:
identical inputs produce byte-identical SVG output.
"""

__version__ = "0.1.0"
