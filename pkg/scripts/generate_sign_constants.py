#!/usr/bin/env python3
"""Regenerate src/weylfluid/_signs.py.

Freezes the two unit signs of the stress-energy divergence decomposition

    n_mu nabla^Gamma_nu T^{mu nu}                   = SIGN_FLOW  * C1
    (delta^mu_l + n^mu n_l) nabla^Gamma_nu T^{l nu} = SIGN_ORTHO * C2^mu

by brute force on a single flat-space instance, independently of the
library: plain index loops, finite differences, no weylfluid imports.

Instance: flat metric diag(-1, 1, 1, 1), flow n = d_t, rho = 1,
p(x) = 0.2 + 0.1 x, reparametrization scalar phi = 0.5.  The induced
covector is A = phi * n_flat = (-0.5, 0, 0, 0) and the compatible
connection is the covector deformation of the (vanishing) Christoffels.
"""

import itertools
import pathlib

M = 4
PHI = 0.5
RHO = 1.0
ETA = [
    [(-1.0 if i == 0 else 1.0) if i == j else 0.0 for j in range(M)]
    for i in range(M)
]
N_UP = [1.0, 0.0, 0.0, 0.0]
N_LOW = [sum(ETA[a][b] * N_UP[b] for b in range(M)) for a in range(M)]
A_LOW = [PHI * N_LOW[a] for a in range(M)]
A_UP = [sum(ETA[a][b] * A_LOW[b] for b in range(M)) for a in range(M)]  # eta inverse = eta
H = 1e-6


def pressure(x):
    return 0.2 + 0.1 * x[1]


def t_up(x):
    """T^{mu nu} = p eta^{mu nu} + (p + rho) n^mu n^nu."""
    p = pressure(x)
    return [
        [p * ETA[a][b] + (p + RHO) * N_UP[a] * N_UP[b] for b in range(M)]
        for a in range(M)
    ]


def gamma(a, b, c):
    """Covector deformation of the flat connection:
    A^a eta_bc - delta^a_b A_c - delta^a_c A_b."""
    out = A_UP[a] * ETA[b][c]
    if a == b:
        out -= A_LOW[c]
    if a == c:
        out -= A_LOW[b]
    return out


def div_t(x):
    """nabla_nu T^{mu nu} by central differences plus connection terms."""
    out = [0.0] * M
    for mu in range(M):
        for nu in range(M):
            xp = list(x)
            xm = list(x)
            xp[nu] += H
            xm[nu] -= H
            out[mu] += (t_up(xp)[mu][nu] - t_up(xm)[mu][nu]) / (2 * H)
    tv = t_up(x)
    for mu, nu, lam in itertools.product(range(M), repeat=3):
        out[mu] += gamma(mu, lam, nu) * tv[lam][nu]
        out[mu] += gamma(nu, lam, nu) * tv[mu][lam]
    return out


def c1(x):
    """(p+rho) nabla^Gamma_nu n^nu - (p-rho) phi + n^nu d_nu rho."""
    div_n = sum(gamma(nu, lam, nu) * N_UP[lam] for nu in range(M) for lam in range(M))
    p = pressure(x)
    return (p + RHO) * div_n - (p - RHO) * PHI


def c2(x):
    """(eta^{mu nu} + n^mu n^nu) d_nu p - 2 p n^nu nabla^g_nu n^mu  (flat: no
    acceleration term)."""
    out = [0.0] * M
    for mu in range(M):
        for nu in range(M):
            xp = list(x)
            xm = list(x)
            xp[nu] += H
            xm[nu] -= H
            dp = (pressure(xp) - pressure(xm)) / (2 * H)
            out[mu] += (ETA[mu][nu] + N_UP[mu] * N_UP[nu]) * dp
    return out


def main():
    x = [0.3, 0.2, -0.1, 0.4]
    div = div_t(x)
    flow = sum(N_LOW[mu] * div[mu] for mu in range(M))
    ortho = [div[mu] + N_UP[mu] * flow for mu in range(M)]

    c1v = c1(x)
    c2v = c2(x)
    sign_flow = round(flow / c1v)
    k = max(range(M), key=lambda mu: abs(c2v[mu]))
    sign_ortho = round(ortho[k] / c2v[k])
    res_flow = abs(flow - sign_flow * c1v)
    res_ortho = max(abs(ortho[mu] - sign_ortho * c2v[mu]) for mu in range(M))
    assert sign_flow in (-1, 1) and sign_ortho in (-1, 1)
    assert res_flow < 1e-8 and res_ortho < 1e-8, (res_flow, res_ortho)

    target = pathlib.Path(__file__).resolve().parents[1] / "src" / "weylfluid" / "_signs.py"
    target.write_text(
        '"""Frozen decomposition signs.  Generated by '
        'scripts/generate_sign_constants.py; do not edit by hand.\n'
        "\n"
        "Oracle instance: flat diag(-1,1,1,1), n = d_t, rho = 1,\n"
        f"p = 0.2 + 0.1 x, phi = {PHI}, evaluated at x = {x}.\n"
        f"Flow-projected divergence  = {flow:+.12f} vs C1 = {c1v:+.12f}\n"
        f"Orthogonal divergence[{k}]   = {ortho[k]:+.12f} vs C2[{k}] = {c2v[k]:+.12f}\n"
        f"Residuals: {res_flow:.3e} (flow), {res_ortho:.3e} (orthogonal).\n"
        '"""\n'
        "\n"
        f"SIGN_FLOW = {sign_flow}\n"
        f"SIGN_ORTHO = {sign_ortho}\n"
    )
    print(f"wrote {target}: SIGN_FLOW={sign_flow} SIGN_ORTHO={sign_ortho}")
    print(f"  flow residual {res_flow:.3e}, orthogonal residual {res_ortho:.3e}")


if __name__ == "__main__":
    main()
