"""Reflection-loss models, slab settling, ray tracing and material identification."""

from math import degrees, radians

from ._matid import *  # noqa: F401,F403
from ._matid import __doc__  # noqa: F401

__version__ = "0.1.0"
