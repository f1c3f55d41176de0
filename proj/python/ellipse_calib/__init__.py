"""Bayesian calibration of single-bounce reflection points on delay ellipses."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
