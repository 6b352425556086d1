"""Exact deformation calculus for perfect complexes on affine schemes.

The package computes, in exact arithmetic over QQ or F_p: Groebner bases
and syzygies, truncated cotangent complexes of embedded affine schemes,
Atiyah and Kodaira-Spencer classes, obstruction classes of complexes over
square-zero extensions, and the deformations themselves when the
obstruction vanishes.
"""

__version__ = "0.1.0"
