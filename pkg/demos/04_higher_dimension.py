"""Space-time dimension d = 2 with a band-limited spatial profile.

Take h~ supported on 1 <= |p| <= 2 (outside the radius (2 lam)^{-1/2}) and
the test function h_0 (x) delta_0 - h_T (x) delta_T with h_T~ = exp(T mu) h~.
F''(0) is an integral with a non-negative integrand, so F(T) > 0 for small
T, which makes the D_lambda norm of the test function negative.
"""

from rpq.kernels import ModelParams
from rpq.rp_ddim import (
    DdimTestSpec,
    band_profile,
    form_value_ddim,
    fpp0_ddim,
    null_check_ddim,
    scan_f_ddim,
    support_condition,
)

params = ModelParams(1.0, 0.5, dim=2)
profile = band_profile(dim_space=1, p_min=1.0, p_max=2.0, taper_width=0.25)
print("support condition holds:", support_condition(profile, params))

# The test function is null for the equilibrium form.
print("equilibrium form:", null_check_ddim(DdimTestSpec(profile, 0.0, 0.5, params)).value)

fpp0 = fpp0_ddim(profile, params)
print(f"F''(0) = {fpp0.value:.10f} +- {fpp0.error_estimate:.1e}")

rows, report = scan_f_ddim(profile, params, [0.0, 0.005, 0.01, 0.02, 0.05])
for T, F, _ in rows[1:]:
    print(f"T = {T:5.3f}:  2F(T)/T^2 = {2 * F / T**2:.6f}")
spec = DdimTestSpec(profile, 0.0, report.witness_point, params)
print("form value at witness:", form_value_ddim(spec).value, "->", report.verdict.value)
