"""Frozen decomposition signs.  Generated by scripts/generate_sign_constants.py; do not edit by hand.

Oracle instance: flat diag(-1,1,1,1), n = d_t, rho = 1,
p = 0.2 + 0.1 x, phi = 0.5, evaluated at x = [0.3, 0.2, -0.1, 0.4].
Flow-projected divergence  = -2.830000000000 vs C1 = +2.830000000000
Orthogonal divergence[1]   = +0.099999999989 vs C2[1] = +0.099999999989
Residuals: 0.000e+00 (flow), 0.000e+00 (orthogonal).
"""

SIGN_FLOW = -1
SIGN_ORTHO = 1
