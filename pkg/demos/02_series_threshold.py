"""Small-t expansion of F and the threshold lambda m^2 >= 1/2.

F(t) = (t^2 / 2) [c + (1 - 1/(2 lam)) W(0)] + O(t^3) at unit mass, and
c > 0. The bracket is therefore positive whenever lam m^2 >= 1/2, which is
enough to make F(t) > 0 for small t.
"""

from rpq.kernels import ModelParams
from rpq.rp_d1 import f_second_derivative_at_zero, series_coeffs

print(" lam m^2   c_lambda    W(0)      leading   F''(0) by finite differences")
for x in (0.3, 0.5, 0.75, 1.0, 2.0, 5.0, 10.0):
    s = series_coeffs(x)
    fd = f_second_derivative_at_zero(ModelParams(x, 1.0)).value
    print(f"{x:7.2f}  {s.c_lambda:9.6f}  {s.w0:9.6f}  {s.leading: 9.6f}  {fd: 9.6f}")

# At exactly 1/2 the W coefficient vanishes and the leading term is c itself.
s = series_coeffs(0.5)
print("\nboundary: leading == c_lambda ->", s.leading == s.c_lambda)
# Below 1/2 the bracket can still be positive, but nothing is claimed there.
