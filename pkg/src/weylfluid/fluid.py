"""Fluid-induced Weyl structure: the covector sourced by a unit flow field,
the connection it generates, the perfect-fluid stress-energy tensor, and the
geodesy diagnostic.

Given a unit timelike flow ``n`` and a reparametrization scalar ``phi``, the
covector

    A_b = n^a nabla^g_a n_b + phi * n_b

is the unique choice for which the flow is autoparallel for the
Weyl-compatible connection of ``(g, A)`` up to parametrization:
``n^a nabla^Gamma_a n^b = phi n^b``.  Contracting with ``n`` gives
``n^a A_a = -phi`` since the unit flow is g-orthogonal to its own
acceleration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .connections import ConnectionField, eps_connection
from .errors import CapabilityError
from .geometry import (
    DerivativeEngine,
    MetricField,
    TensorField,
    covector_field,
    metric_aux,
    tensor2_field,
    vector_field,
)


@dataclass(frozen=True)
class FluidState:
    """Unit flow plus thermodynamic scalars (geometric units).

    ``n`` must be g-normalized; ``rho < 0`` is permitted (no energy
    condition is imposed) but a construction-time check warns about it.
    """

    n: TensorField
    p: TensorField
    rho: TensorField
    phi: TensorField

    def validate(self, g: MetricField, pts, tol: float = 1e-10) -> None:
        nv = self.n(pts)
        gv = g(pts)
        norm = np.einsum("nij,ni,nj->n", gv, nv, nv)
        worst = float(np.max(np.abs(norm + 1.0)))
        if worst > tol:
            raise ValueError(f"flow field is not unit timelike: |g(n,n)+1| = {worst:.3e}")
        rho = self.rho(pts)
        if np.any(rho < 0.0):
            warnings.warn("density is negative at some sample points", stacklevel=2)


@dataclass(frozen=True)
class WeylBundle:
    """Metric, Weyl covector, and the compatible connection they induce."""

    g: MetricField
    A: TensorField
    gamma: ConnectionField


def _acceleration(g: MetricField, n: TensorField, engine: DerivativeEngine, pts):
    """Covariant acceleration ``n^a nabla^g_a n_b`` with the index lowered."""
    data = metric_aux(g, pts, engine)
    nval, njac = engine.value_and_jacobian(n, pts)
    n_low = np.einsum("nab,nb->na", data.val, nval)
    # d_c n_b = d_c (g_ba n^a)
    dn_low = np.einsum("nbad,na->nbd", data.dg, nval) + np.einsum("nba,nad->nbd", data.val, njac)
    cov = dn_low - np.einsum("nlbc,nl->nbc", data.gamma, n_low)
    return np.einsum("nc,nbc->nb", nval, cov), nval, n_low


def fluid_covector(
    g: MetricField, n: TensorField, phi: TensorField, engine: DerivativeEngine
) -> TensorField:
    """The Weyl covector induced by a unit flow and its parametrization."""
    if n.variance != ("u",):
        raise CapabilityError("fluid_covector expects a vector flow field")

    def eval_fn(pts):
        acc, _, n_low = _acceleration(g, n, engine, pts)
        return acc + phi(pts)[:, None] * n_low

    return covector_field(g.chart, eval_fn=eval_fn, name="A(fluid)")


def fluid_connection(
    g: MetricField, n: TensorField, phi: TensorField, engine: DerivativeEngine
) -> WeylBundle:
    """Bundle the metric with the flow-induced covector and its connection."""
    A = fluid_covector(g, n, phi, engine)
    return WeylBundle(g=g, A=A, gamma=eps_connection(g, A, engine))


def geodesic_defect(
    bundle: WeylBundle, n: TensorField, phi: TensorField, engine: DerivativeEngine
) -> TensorField:
    """``D^a = n^b nabla^Gamma_b n^a - phi n^a``; zero for the bundle built
    from ``(n, phi)`` itself."""

    def eval_fn(pts):
        nval, njac = engine.value_and_jacobian(n, pts)
        gam = bundle.gamma(pts)
        transport = np.einsum("nb,nab->na", nval, njac) + np.einsum(
            "nabc,nb,nc->na", gam, nval, nval
        )
        return transport - phi(pts)[:, None] * nval

    return vector_field(bundle.g.chart, eval_fn=eval_fn, name="geodesic-defect")


def stress_energy(
    g: MetricField, n: TensorField, p: TensorField, rho: TensorField
) -> TensorField:
    """Perfect-fluid stress-energy ``T_ab = p g_ab + (p + rho) n_a n_b``.

    Symmetric by construction; satisfies ``T^{ab} n_b = -rho n^a``.
    """
    m = g.chart.dim
    if all(f.supports_ad for f in (g, n, p, rho)):
        def fn(coords):
            gc = g.fn(coords)
            nc = n.fn(coords)
            pc = p.fn(coords)
            rc = rho.fn(coords)
            n_low = [sum(gc[a][b] * nc[b] for b in range(m)) for a in range(m)]
            w = pc + rc
            return [
                [pc * gc[a][b] + w * n_low[a] * n_low[b] for b in range(m)]
                for a in range(m)
            ]

        return tensor2_field(g.chart, fn, name="T")

    def eval_fn(pts):
        gv = g(pts)
        nv = n(pts)
        n_low = np.einsum("nab,nb->na", gv, nv)
        return (
            p(pts)[:, None, None] * gv
            + (p(pts) + rho(pts))[:, None, None] * np.einsum("na,nb->nab", n_low, n_low)
        )

    return tensor2_field(g.chart, eval_fn=eval_fn, name="T")
