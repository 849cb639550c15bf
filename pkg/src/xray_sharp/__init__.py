"""Numerical toolkit for restricted X-ray transforms along smooth curves."""

from ._accel import backend_name, set_threads

__version__ = "0.1.0"

__all__ = ["backend_name", "set_threads", "__version__"]
