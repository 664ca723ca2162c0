"""Multi-view consistent 3D editing with a geometry-aware video diffusion toy model."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
