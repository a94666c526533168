"""Reflection positivity of the stochastically quantized free field.

Submodules
----------
numerics   one-dimensional quadrature with error estimates
kernels    heat, equilibrium and finite stochastic-time kernels
rp_d1      delta-comb RP forms, F(t), series coefficients, Gram spectra (d = 1)
rp_ddim    Fourier-side construction for d > 1
spde_sim   torus-lattice sampler, Euler-Maruyama integrator, Monte Carlo RP forms
cli        command-line interface
"""

__version__ = "0.1.0"

from .exceptions import DomainError, QuadratureError, StabilityError
from .kernels import ModelParams

__all__ = ["DomainError", "QuadratureError", "StabilityError", "ModelParams", "__version__"]
