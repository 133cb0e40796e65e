"""Geometric facial-expression analysis toolkit.

Pairwise landmark distance/angle features with FACS-based pair selection,
a from-scratch ConvLSTM1D+MLP classifier, k-fold experiment harness, and a
sliding-window real-time predictor with expression-phase tracking.
"""

__version__ = "0.1.0"

from . import features, landmarks, scaling, topology  # noqa: F401
