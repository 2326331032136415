"""Magnetic microrobot navigation in cerebral artery bifurcations."""

from ._mbnav import *  # noqa: F401,F403
from ._mbnav import __doc__  # noqa: F401
