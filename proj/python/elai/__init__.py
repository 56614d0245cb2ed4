"""Lightweight explainable flow classifier.

Thin package wrapper over the compiled extension: dataset handling, linear
projections and information-gain ranking, the conv/recurrent/attention
classifier with seeded training, Shapley attributions, and evaluation
metrics.
"""

from elai._core import *  # noqa: F401,F403
from elai._core import __version__  # noqa: F401
