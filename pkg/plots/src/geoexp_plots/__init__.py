"""Figure rendering for GEO-experiment CSV outputs.

Reads the design / dataset / study-records CSV contracts and renders the
standard figure set (design heatmaps, correlation traces, pre/post
scatters, estimate histograms, shrinkage efficiency, Stein-vs-Bayes
comparisons, credible-width densities) as image files.  Consumes only the
CSV files; it never imports the estimation package.
"""

from .render import KINDS, PlotJob, render

__version__ = "0.1.0"
