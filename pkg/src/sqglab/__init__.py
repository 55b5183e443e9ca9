"""sqglab: a numerical laboratory for the scaling laws of explicit
pseudo-solutions to the 2D surface quasi-geostrophic equation.

Subpackages map one-to-one onto the lab's layers: spectral fields and
Fourier-multiplier operators (`spectral`), norm estimators (`norms`),
principal-value quadrature of the polar velocity integrals (`kernels`),
initial-data families (`profiles`, `radial`), closed-form pseudo-solution
evaluators and residuals (`pseudo`), the inviscid solver and critical-time
machinery (`evolution`), and experiment orchestration (`lab`, `cli`).
"""

from ._backend import BACKEND_NAME

__version__ = "0.1.0"
__all__ = ["BACKEND_NAME", "__version__"]
