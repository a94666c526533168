"""Frozen reference values, produced by ``tests/compute_oracles.py`` (mpmath, 30 digits)."""

W_1_1_0 = 1.5157443122826242  # W_{1,1}(0) = 2 sqrt(pi) e erfc(1)
W_4_05_1 = 2.9130686818690226  # W_{4,0.5}(1)
W_1_10_0 = 0.19901463756489395  # W_{1,10}(0)
HALFLINE_U2 = 0.54723293684787264  # int_0^inf u^2 exp(-u^2/4 - u) du
C_1 = 0.27361646842393632  # c_lambda at lambda = 1
LEADING_1 = 1.0314886245652484  # c_1 + W_1(0) / 2
C_05 = 0.62271816967519389  # c_lambda at lambda = 1/2
LEADING_075 = 0.86835166911551085  # leading coefficient at lambda m^2 = 3/4
D_1_1_0 = 0.42135039647485743  # D_lambda(0), lambda = m = 1 (Fourier side)
D_2_05_13 = 0.23769013506849098  # D_lambda(1.3), lambda = 2, m = 0.5
F_1_1_05 = 0.1149158166883267  # F(0.5), lambda = m = 1
F_2_15_07 = 1.3457789682313362  # F(0.7), lambda = 2, m = 1.5
NULL_FORM_1_1_05 = -0.011925604269883777  # <theta f, D f> for null_comb(1, 0, 0.5)
SOBOLEV_INDICATOR = 0.56226188815926732  # asinh(2) - asinh(1)
G_EXAMPLE = 0.71574552660940909  # exp(-1.125 + 0.5 sqrt(2.5))
FPP0_INDICATOR = 0.36143837317543355  # F''(0), d=2, lambda=1, m=0.5, sharp band [1,2]
FPP0_TAPER_025 = 0.23125284020478984  # same with raised-cosine taper 0.25
FPP0_M01 = 0.22246428669038007  # lambda=1, m=0.1, band [1,2], taper 0.25
LATTICE_NULL_256_64 = -0.034625899465021159  # torus RP form, null_comb(1,0,0.5), n=256, L=64
LATTICE_D0_256_64 = 0.39607311254242126  # torus D_lambda(0), n=256, L=64, lambda=m=1
