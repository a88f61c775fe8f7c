"""
mothersolve: spectral curve, mother body and planar orthogonal polynomials
for the two-insertion spherical ensemble.
"""

__version__ = "1.0.0"
