"""Gram-matrix certificate over a family of null combs.

The equilibrium form is a perfect square, so over null combs its Gram
matrix vanishes. The D_lambda Gram matrix has a clearly negative eigenvalue,
and the eigenvector assembles an explicit violating comb.
"""

import numpy as np

from rpq.kernels import ModelParams
from rpq.rp_d1 import gram_matrix, null_comb, rp_form_dlambda

params = ModelParams(1.0, 1.0)
family = [null_comb(1.0, 0.0, 0.2 * k) for k in range(1, 8)]

M, report = gram_matrix(family, params)
np.set_printoptions(precision=3, linewidth=120)
print("D_lambda spectrum:", np.array(report.gram_spectrum))
print("tolerance used   :", f"{report.tolerance_used:.2e}", "->", report.verdict.value)

witness = report.witness
print("witness atoms:", [(round(t, 2), round(w, 4)) for t, w in witness.atoms])
print("its D_lambda form:", rp_form_dlambda(witness, params).value)

_, eq = gram_matrix(family, params, kernel="equilibrium")
print("equilibrium spectrum (all ~0):", np.array(eq.gram_spectrum))
