"""2-isogeny descent over quadratic twist families and the GF(2) random-matrix laws they are compared against."""

from __future__ import annotations

__version__ = "0.1.0"
