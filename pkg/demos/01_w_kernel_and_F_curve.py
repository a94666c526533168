"""The smeared kernel W and the curve F(t) at lambda = m = 1.

At finite stochastic time the covariance of the free field is
D = C - exp(-lam m^2) (4 pi lam)^{-1/2} (2m)^{-1} W, and the null comb
exp(ms) delta_s - exp(mt) delta_t kills the C part. What is left is
-exp(-lam m^2) (4 pi lam)^{-1/2} F(t) / m, so any t with F(t) > 0 is a test
function with negative norm.
"""

import numpy as np

from rpq.kernels import ModelParams, w_kernel, w_kernel_closed
from rpq.rp_d1 import f_of_t, null_comb, rp_form_dlambda, scan_f

params = ModelParams(lam=1.0, mass=1.0)

# W by quadrature and by its erfc closed form agree to roundoff.
for t in (0.0, 0.5, 2.0):
    q = w_kernel(params, t)
    print(f"W({t}) quadrature {q.value:.15f} +- {q.error_estimate:.1e}, "
          f"closed {w_kernel_closed(params, t):.15f}")

# Scan F on [0, 3]; the report names the strongest witness.
grid = np.round(np.arange(0, 301) * 0.01, 12)
rows, report = scan_f(params, grid)
print("\n   t        F(t)")
for t, F, _ in rows[::25]:
    print(f"{t:5.2f}  {F: .6e}")
print("\nverdict:", report.verdict.value, "at t =", report.witness_point)

# The witness is an honest test function: its D-form is negative.
t_star = report.witness_point
form = rp_form_dlambda(null_comb(1.0, 0.0, t_star), params)
print(f"<theta f, D f> = {form.value:.6e}  (F = {f_of_t(params, t_star).value:.6e})")
