"""Markov chain sampling of triangulations of surfaces and 3-manifolds."""

from .errors import *  # noqa: F401,F403
from .triangulation import FaceOrbit, FVector, Gluing, Triangulation, build, seed_triangulation

__version__ = "0.1.0"
