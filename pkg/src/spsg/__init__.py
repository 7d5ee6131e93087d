"""Image segmentation by sparse selection of dictionary words over superpixels."""

from spsg.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
