"""Levi-Civita and Weyl-compatible connections, covariant derivatives, and
non-metricity diagnostics.

Connection coefficients are indexed ``gamma[n, a, b, c] = Gamma^a_{bc}``;
both constructors are torsion-free by construction (symmetric in ``b, c``).
The Weyl-compatible family is the one-covector deformation of the
Levi-Civita connection for which all null geodesics of the metric remain
autoparallel trajectories:

    Gamma^a_{bc} = {g}^a_{bc} + A^a g_{bc} - delta^a_b A_c - delta^a_c A_b

with non-metricity  nabla_c g_{ab} = 2 A_c g_{ab}  and the trace identity
nabla_c sqrt|g| = m A_c sqrt|g| on weight-1 densities.
"""

from __future__ import annotations

import numpy as np

from .errors import CapabilityError
from .geometry import (
    Chart,
    DerivativeEngine,
    MetricField,
    TensorField,
    metric_aux,
)


class ConnectionField:
    """Evaluable connection coefficients with a provenance tag."""

    def __init__(self, chart: Chart, eval_fn, provenance: str, name: str = ""):
        self.chart = chart
        self.eval_fn = eval_fn
        self.provenance = provenance
        self.name = name or provenance

    def __call__(self, pts) -> np.ndarray:
        pts = self.chart.as_points(pts)
        out = np.asarray(self.eval_fn(pts), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ValueError(f"connection {self.name} is not finite at a sample")
        return out

    def torsion(self, pts) -> np.ndarray:
        gam = self(pts)
        return gam - np.swapaxes(gam, -1, -2)


def eps_shift(ginv: np.ndarray, gval: np.ndarray, aval: np.ndarray) -> np.ndarray:
    """Deformation tensor ``A^a g_bc - delta^a_b A_c - delta^a_c A_b``."""
    n, m = aval.shape
    a_up = np.einsum("nae,ne->na", ginv, aval)
    eye = np.eye(m)
    return (
        np.einsum("na,nbc->nabc", a_up, gval)
        - np.einsum("ab,nc->nabc", eye, aval)
        - np.einsum("ac,nb->nabc", eye, aval)
    )


def levi_civita(g: MetricField, engine: DerivativeEngine) -> ConnectionField:
    """Christoffel symbols of the metric."""

    def eval_fn(pts):
        return metric_aux(g, pts, engine).gamma

    return ConnectionField(g.chart, eval_fn, provenance="levi-civita", name=f"{{{g.name}}}")


def eps_connection(g: MetricField, A: TensorField, engine: DerivativeEngine) -> ConnectionField:
    """Weyl-compatible connection of the pair ``(g, A)``.

    ``eps_connection(g, 0)`` evaluates through the same path as
    ``levi_civita(g)`` and agrees with it componentwise.
    """
    if A.variance != ("d",):
        raise CapabilityError("eps_connection expects a covector field")

    def eval_fn(pts):
        data = metric_aux(g, pts, engine)
        return data.gamma + eps_shift(data.inv, data.val, A(pts))

    return ConnectionField(g.chart, eval_fn, provenance="eps(A)", name=f"eps({g.name},{A.name})")


def external_connection(chart: Chart, eval_fn, name: str = "external") -> ConnectionField:
    """Wrap arbitrary coefficients for defect diagnostics."""
    return ConnectionField(chart, eval_fn, provenance="external", name=name)


def covariant_derivative(
    gamma: ConnectionField, F: TensorField, engine: DerivativeEngine
) -> TensorField:
    """Covariant derivative of a field of rank <= 2.

    Returns a field of rank+1 whose last index is the derivative index:
    the partial derivative plus one ``+Gamma`` contraction per upper index
    and one ``-Gamma`` contraction per lower index.  Reduces to the
    coordinate gradient on scalars.
    """
    if F.rank > 2:
        raise CapabilityError("covariant_derivative supports rank <= 2")
    variance = F.variance + ("d",)

    def eval_fn(pts):
        val, jac = engine.value_and_jacobian(F, pts)
        if F.rank == 0:
            return jac
        gam = gamma(pts)
        out = jac.copy()
        if F.rank == 1:
            if F.variance[0] == "u":
                out += np.einsum("nabc,nb->nac", gam, val)
            else:
                out -= np.einsum("nbac,nb->nac", gam, val)
            return out
        if F.variance == ("u", "u"):
            out += np.einsum("nalc,nlb->nabc", gam, val)
            out += np.einsum("nblc,nal->nabc", gam, val)
        elif F.variance == ("d", "d"):
            out -= np.einsum("nlac,nlb->nabc", gam, val)
            out -= np.einsum("nlbc,nal->nabc", gam, val)
        elif F.variance == ("u", "d"):
            out += np.einsum("nalc,nlb->nabc", gam, val)
            out -= np.einsum("nlbc,nal->nabc", gam, val)
        else:  # ("d", "u")
            out -= np.einsum("nlac,nlb->nabc", gam, val)
            out += np.einsum("nblc,nal->nabc", gam, val)
        return out

    return TensorField(gamma.chart, variance, eval_fn=eval_fn, name=f"D[{F.name}]")


def density_divergence_sqrtg(
    g: MetricField, gamma: ConnectionField, engine: DerivativeEngine, pts
) -> np.ndarray:
    """Weight-1 covariant derivative of the volume factor:
    ``d_c sqrt|g| - Gamma^l_{lc} sqrt|g|``, shape ``(N, m)``."""
    data = metric_aux(g, pts, engine)
    gam = gamma(pts)
    return data.dsqrt_det - np.einsum("nllc->nc", gam) * data.sqrt_det[:, None]


def nonmetricity_residual(
    gamma: ConnectionField, g: MetricField, A: TensorField, engine: DerivativeEngine
) -> TensorField:
    """Residual ``nabla^Gamma_c g_{ab} - 2 A_c g_{ab}`` as a rank-3 field.

    Index order of the result is ``(a, b, c)`` with the derivative index
    last.  Vanishes (to derivative-engine tolerance) exactly when the
    connection is the Weyl-compatible connection of ``(g, A)``.
    """

    def eval_fn(pts):
        data = metric_aux(g, pts, engine)
        gam = gamma(pts)
        nabla_g = (
            data.dg
            - np.einsum("nlac,nlb->nabc", gam, data.val)
            - np.einsum("nlbc,nal->nabc", gam, data.val)
        )
        return nabla_g - 2.0 * np.einsum("nc,nab->nabc", A(pts), data.val)

    return TensorField(g.chart, ("d", "d", "d"), eval_fn=eval_fn, name="nonmetricity-residual")


def sqrt_det_trace_residual(
    g: MetricField, gamma: ConnectionField, A: TensorField, engine: DerivativeEngine, pts
) -> np.ndarray:
    """Residual of the density trace identity
    ``nabla^Gamma_c sqrt|g| = m A_c sqrt|g|``, shape ``(N, m)``."""
    pts = g.chart.as_points(pts)
    lhs = density_divergence_sqrtg(g, gamma, engine, pts)
    data = metric_aux(g, pts)
    rhs = g.chart.dim * A(pts) * data.sqrt_det[:, None]
    return lhs - rhs
