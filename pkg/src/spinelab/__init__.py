"""spinelab: numerical laboratory for boundary-point regularity of
anisotropic elliptic operators on spine (cusp) domains."""

__version__ = "0.1.0"
