"""Divergence of the stress-energy tensor under the Weyl connection, its
decomposition into flow-aligned and orthogonal condition residuals, the
particle-number current, and the identity tying the coordinate divergence of
the current to the two condition scalars.

The current is the weight-1 vector density

    J^mu = sqrt|g| T^{mu nu} n_nu   ( = -sqrt|g| rho n^mu for a perfect fluid)

whose conservation law is the plain coordinate divergence d_mu J^mu = 0.
Booking the non-metricity of the connection explicitly, the divergence
satisfies, identically,

    d_mu J^mu = sqrt|g| (nabla^Gamma_mu T^{mu nu} n_nu
                         + T^{mu nu} nabla^Gamma_mu n_nu)
                + m sqrt|g| A_mu T^{mu nu} n_nu

so vanishing stress-energy divergence together with the two condition
scalars s1 = T^{mu nu} nabla^Gamma_mu n_nu and s2 = T^{mu nu} A_mu n_nu
controls particle-number conservation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from ._signs import SIGN_FLOW, SIGN_ORTHO
from .connections import ConnectionField
from .errors import CapabilityError
from .fluid import stress_energy
from .geometry import (
    Chart,
    DerivativeEngine,
    MetricField,
    TensorField,
    metric_aux,
    scalar_field,
    tensor2_field,
    vector_field,
)


class VectorDensityField(TensorField):
    """Contravariant components carrying density weight 1."""

    weight = 1

    def __init__(self, chart, fn=None, *, eval_fn=None, name=""):
        super().__init__(chart, ("u",), fn, eval_fn=eval_fn, name=name)


def raise_indices2(g: MetricField, T: TensorField) -> TensorField:
    """``T^{ab} = g^{ac} g^{bd} T_{cd}`` as an evaluable field (dual-capable
    when both inputs are closed-form)."""
    m = g.chart.dim
    if g.supports_ad and T.supports_ad:
        def fn(coords):
            nb = np.size(ad.value(coords[0]))
            ginv = ad.mat_inv(g.fn(coords), nb, m)
            tc = T.fn(coords)
            half = [
                [sum(ginv[a][c] * tc[c][d] for c in range(m)) for d in range(m)]
                for a in range(m)
            ]
            return [
                [sum(half[a][d] * ginv[b][d] for d in range(m)) for b in range(m)]
                for a in range(m)
            ]

        return tensor2_field(g.chart, fn, variance=("u", "u"), name=f"raise({T.name})")

    def eval_fn(pts):
        inv = metric_aux(g, pts).inv
        return np.einsum("nac,nbd,ncd->nab", inv, inv, T(pts))

    return tensor2_field(g.chart, eval_fn=eval_fn, variance=("u", "u"), name=f"raise({T.name})")


def weyl_divergence_T(
    g: MetricField, gamma: ConnectionField, T: TensorField, engine: DerivativeEngine
) -> TensorField:
    """``nabla^Gamma_nu T^{mu nu}`` with indices raised by the metric."""
    t_up = raise_indices2(g, T)

    def eval_fn(pts):
        val, jac = engine.value_and_jacobian(t_up, pts)
        gam = gamma(pts)
        div = np.einsum("nmvv->nm", jac)
        div += np.einsum("nmlv,nlv->nm", gam, val)
        div += np.einsum("nvlv,nml->nm", gam, val)
        return div

    return vector_field(g.chart, eval_fn=eval_fn, name=f"divT({T.name})")


def _flow_kinematics(g, gamma, n, engine, pts):
    """Shared contractions: metric data, flow value/jacobian, lowered flow,
    Gamma- and g-divergences of the flow, and the g-acceleration (upper)."""
    data = metric_aux(g, pts, engine)
    nval, njac = engine.value_and_jacobian(n, pts)
    n_low = np.einsum("nab,nb->na", data.val, nval)
    gam = gamma(pts)
    div_flow_gamma = np.einsum("naa->n", njac) + np.einsum("nvlv,nl->n", gam, nval)
    div_flow_g = np.einsum("naa->n", njac) + np.einsum("nc,nc->n", data.gamma_trace, nval)
    acc_up = np.einsum("nc,nac->na", nval, njac) + np.einsum(
        "nabc,nb,nc->na", data.gamma, nval, nval
    )
    return data, nval, njac, n_low, div_flow_gamma, div_flow_g, acc_up


def conservation_condition_residuals(
    g: MetricField,
    gamma: ConnectionField,
    n: TensorField,
    p: TensorField,
    rho: TensorField,
    phi: TensorField,
    engine: DerivativeEngine,
):
    """The two scalars whose joint vanishing is equivalent to
    ``nabla^Gamma_nu T^{mu nu} = 0`` for the flow-built bundle:

        C1   = (p + rho) nabla^Gamma_nu n^nu - (p - rho) phi + n^nu d_nu rho
        C2^mu = (g^{mu nu} + n^mu n^nu) d_nu p - 2 p n^nu nabla^g_nu n^mu

    Returns ``(C1 scalar field, C2 vector field)``.
    """

    def eval_c1(pts):
        _, nval, _, _, div_gamma, _, _ = _flow_kinematics(g, gamma, n, engine, pts)
        drho = engine.jacobian(rho, pts)
        pv, rv, fv = p(pts), rho(pts), phi(pts)
        return (pv + rv) * div_gamma - (pv - rv) * fv + np.einsum("na,na->n", nval, drho)

    def eval_c2(pts):
        data, nval, _, _, _, _, acc_up = _flow_kinematics(g, gamma, n, engine, pts)
        dp = engine.jacobian(p, pts)
        proj = data.inv + np.einsum("na,nb->nab", nval, nval)
        return np.einsum("nab,nb->na", proj, dp) - 2.0 * p(pts)[:, None] * acc_up

    c1 = scalar_field(g.chart, eval_fn=eval_c1, name="C1")
    c2 = vector_field(g.chart, eval_fn=eval_c2, name="C2")
    return c1, c2


def decomposition_residuals(
    g: MetricField,
    gamma: ConnectionField,
    n: TensorField,
    p: TensorField,
    rho: TensorField,
    phi: TensorField,
    engine: DerivativeEngine,
    pts,
):
    """Residuals of the sign-fixed decomposition of the stress-energy
    divergence into the condition pair:

        n_mu nabla_nu T^{mu nu}                    = SIGN_FLOW  * C1
        (delta^mu_l + n^mu n_l) nabla_nu T^{l nu}  = SIGN_ORTHO * C2^mu

    with the two signs frozen from the brute-force oracle run recorded in
    ``_signs.py``.  Returns ``(flow_residual (N,), ortho_residual (N, m))``.
    """
    pts = g.chart.as_points(pts)
    T = stress_energy(g, n, p, rho)
    div = weyl_divergence_T(g, gamma, T, engine)(pts)
    gv = g(pts)
    nval = n(pts)
    n_low = np.einsum("nab,nb->na", gv, nval)
    c1, c2 = conservation_condition_residuals(g, gamma, n, p, rho, phi, engine)
    flow = np.einsum("na,na->n", n_low, div) - SIGN_FLOW * c1(pts)
    ortho = div + nval * np.einsum("na,na->n", n_low, div)[:, None] - SIGN_ORTHO * c2(pts)
    return flow, ortho


def particle_current(g: MetricField, T: TensorField, n: TensorField) -> VectorDensityField:
    """``J^mu = sqrt|g| T^{mu nu} n_nu``, a weight-1 vector density."""
    m = g.chart.dim
    if g.supports_ad and T.supports_ad and n.supports_ad:
        def fn(coords):
            nb = np.size(ad.value(coords[0]))
            gc = g.fn(coords)
            tc = T.fn(coords)
            nc = n.fn(coords)
            ginv = ad.mat_inv(gc, nb, m)
            sq = ad.sqrt(ad.absolute(ad.mat_det(gc, nb, m)))
            tn = [sum(tc[a][b] * nc[b] for b in range(m)) for a in range(m)]
            return [sq * sum(ginv[mu][a] * tn[a] for a in range(m)) for mu in range(m)]

        return VectorDensityField(g.chart, fn, name="J")

    def eval_fn(pts):
        data = metric_aux(g, pts)
        nv = n(pts)
        tn = np.einsum("nab,nb->na", T(pts), nv)
        return data.sqrt_det[:, None] * np.einsum("nma,na->nm", data.inv, tn)

    return VectorDensityField(g.chart, eval_fn=eval_fn, name="J")


def current_divergence(J: TensorField, engine: DerivativeEngine) -> TensorField:
    """Plain coordinate divergence ``d_mu J^mu`` (covariant for weight-1
    densities under any symmetric connection)."""
    if getattr(J, "weight", 0) != 1:
        raise CapabilityError("current_divergence expects a weight-1 vector density")

    def eval_fn(pts):
        jac = engine.jacobian(J, pts)
        return np.einsum("naa->n", jac)

    return scalar_field(J.chart, eval_fn=eval_fn, name=f"div({J.name})")


@dataclass(frozen=True)
class SliceSpec:
    """A coordinate slice ``x^axis = value`` with an integration box over
    the remaining coordinates and a per-axis quadrature resolution (odd
    Simpson node counts)."""

    axis: int
    value: float
    box: tuple
    nodes: int = 33

    def validate(self, chart: Chart) -> None:
        if not 0 <= self.axis < chart.dim:
            raise ValueError(f"slice axis {self.axis} outside chart dimension")
        lo, hi = chart.intervals[self.axis]
        if not (lo < self.value < hi):
            raise ValueError(
                f"slice value {self.value} outside chart interval "
                f"[{lo}, {hi}] of {chart.names[self.axis]!r}"
            )
        rest = [j for j in range(chart.dim) if j != self.axis]
        if len(self.box) != len(rest):
            raise ValueError("integration box must cover every non-slice axis")
        for (a, b), j in zip(self.box, rest):
            la, lb = chart.intervals[j]
            if a < la or b > lb or not b > a:
                raise ValueError(
                    f"integration interval [{a}, {b}] exits chart interval of "
                    f"{chart.names[j]!r}"
                )
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ValueError("Simpson quadrature needs an odd node count >= 3")


def _simpson_weights(nodes: int, h: float) -> np.ndarray:
    w = np.ones(nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _slice_quadrature(J, spec: SliceSpec, nodes: int) -> float:
    chart = J.chart
    rest = [j for j in range(chart.dim) if j != spec.axis]
    axes = [np.linspace(a, b, nodes) for (a, b) in spec.box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.empty((mesh[0].size, chart.dim))
    pts[:, spec.axis] = spec.value
    for mj, j in zip(mesh, rest):
        pts[:, j] = mj.ravel()
    vals = J(pts)[:, spec.axis].reshape(mesh[0].shape)
    for (a, b) in reversed(spec.box):
        w = _simpson_weights(nodes, (b - a) / (nodes - 1))
        vals = np.tensordot(vals, w, axes=([-1], [0]))
    return float(vals)


def number_on_slice(J: TensorField, spec: SliceSpec):
    """Integrate the slice-normal current component over the box.

    Tensor-product composite-Simpson quadrature; deterministic for a fixed
    node count.  Returns ``(value, error_estimate)`` where the estimate
    comes from one Richardson halving step (``None`` when the node count
    cannot be halved).
    """
    spec.validate(J.chart)
    fine = _slice_quadrature(J, spec, spec.nodes)
    coarse_nodes = (spec.nodes + 1) // 2
    if coarse_nodes >= 3 and coarse_nodes % 2 == 1:
        coarse = _slice_quadrature(J, spec, coarse_nodes)
        return fine, abs(fine - coarse) / 15.0
    return fine, None


@dataclass(frozen=True)
class ConditionScalars:
    """Directly contracted condition scalars and their closed forms.

    ``s1 = T^{mu nu} nabla^Gamma_mu n_nu`` has closed form
    ``p nabla^g_mu n^mu + (rho + (m-1) p) phi`` and ``s2 = T^{mu nu} A_mu
    n_nu`` has closed form ``rho phi``; both therefore vanish in a frame
    where the flow is divergence-free and affinely parametrized.
    """

    s1: TensorField
    s2: TensorField
    s1_residual: TensorField
    s2_residual: TensorField


def condition_scalars(
    g: MetricField,
    gamma: ConnectionField,
    A: TensorField,
    n: TensorField,
    p: TensorField,
    rho: TensorField,
    phi: TensorField,
    engine: DerivativeEngine,
) -> ConditionScalars:
    """Contract the condition scalars directly and compare with their
    closed forms."""
    T = stress_energy(g, n, p, rho)
    t_up = raise_indices2(g, T)
    m = g.chart.dim

    def contract(pts):
        data, nval, njac, n_low, _, div_g, _ = _flow_kinematics(g, gamma, n, engine, pts)
        gam = gamma(pts)
        # nabla^Gamma_c n_b, derivative index last
        dn_low = np.einsum("nbad,na->nbd", data.dg, nval) + np.einsum(
            "nba,nad->nbd", data.val, njac
        )
        cov_low = dn_low - np.einsum("nlbc,nl->nbc", gam, n_low)
        tv = t_up(pts)
        s1 = np.einsum("nmv,nvm->n", tv, cov_low)
        s2 = np.einsum("nm,nmv,nv->n", A(pts), tv, n_low)
        return s1, s2, div_g

    def eval_s1(pts):
        return contract(pts)[0]

    def eval_s2(pts):
        return contract(pts)[1]

    def eval_res1(pts):
        s1, _, div_g = contract(pts)
        closed = p(pts) * div_g + (rho(pts) + (m - 1) * p(pts)) * phi(pts)
        return s1 - closed

    def eval_res2(pts):
        _, s2, _ = contract(pts)
        return s2 - rho(pts) * phi(pts)

    return ConditionScalars(
        s1=scalar_field(g.chart, eval_fn=eval_s1, name="s1"),
        s2=scalar_field(g.chart, eval_fn=eval_s2, name="s2"),
        s1_residual=scalar_field(g.chart, eval_fn=eval_res1, name="s1-closed-form-residual"),
        s2_residual=scalar_field(g.chart, eval_fn=eval_res2, name="s2-closed-form-residual"),
    )


def current_identity_residual(
    g: MetricField,
    gamma: ConnectionField,
    A: TensorField,
    T: TensorField,
    n: TensorField,
    engine: DerivativeEngine,
) -> TensorField:
    """Residual of the divergence identity for the current built from the
    same ``(g, T, n)``; an identity, independent of conservation holding."""
    J = particle_current(g, T, n)
    div_j = current_divergence(J, engine)
    div_t = weyl_divergence_T(g, gamma, T, engine)
    t_up = raise_indices2(g, T)
    m = g.chart.dim

    def eval_fn(pts):
        data = metric_aux(g, pts, engine)
        nval, njac = engine.value_and_jacobian(n, pts)
        n_low = np.einsum("nab,nb->na", data.val, nval)
        gam = gamma(pts)
        dn_low = np.einsum("nbad,na->nbd", data.dg, nval) + np.einsum(
            "nba,nad->nbd", data.val, njac
        )
        cov_low = dn_low - np.einsum("nlbc,nl->nbc", gam, n_low)
        tv = t_up(pts)
        term1 = np.einsum("nv,nv->n", div_t(pts), n_low)
        term2 = np.einsum("nmv,nvm->n", tv, cov_low)
        term3 = m * np.einsum("nm,nmv,nv->n", A(pts), tv, n_low)
        return div_j(pts) - data.sqrt_det * (term1 + term2 + term3)

    return scalar_field(g.chart, eval_fn=eval_fn, name="current-identity-residual")
