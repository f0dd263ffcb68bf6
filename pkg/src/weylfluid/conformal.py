"""Conformal rescaling of the whole geometric bundle, invariance checks,
and the preferred-frame solver.

Rescaling by a positive factor ``Phi`` acts as

    g   -> Phi^2 g          n   -> n / Phi
    A   -> A + d ln Phi     phi -> (phi - n^a d_a ln Phi) / Phi
    p   -> Phi^w p          rho -> Phi^w rho

with the density weight fixed at ``w = 1 - m`` so the particle current (and
hence any slice count) is a fixed point of the orbit.  The compatible
connection is invariant under the orbit, which is what makes the rescaled
bundle the *same* Weyl geometry in a different gauge.

The preferred frame is the orbit representative in which the flow is
divergence-free.  Its log-factor solves the transport equation

    n^a d_a ln Phi = -(1/(m-1)) nabla^g_a n^a,      ln Phi = 0 on a seed slice

integrated backward along flow characteristics and memoized on a tensor
grid for cheap derivative evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .interpolation import build_interpolator
from .connections import eps_connection
from .conservation import SliceSpec
from .errors import GaugeError, ReachabilityError, StiffnessError, TransversalityError
from .fluid import FluidState, WeylBundle, fluid_covector
from .geometry import (
    DerivativeEngine,
    MetricField,
    TensorField,
    constant_scalar,
    metric_aux,
    scalar_field,
)


class ConformalFactor:
    """A positive gauge factor together with its cached logarithm.

    Closed-form factors stay dual-differentiable; solver output is wrapped
    from the log side and flagged numeric (finite differences only).
    """

    def __init__(self, phi: TensorField, ln: TensorField):
        self.phi = phi
        self.ln = ln
        self.chart = phi.chart

    @classmethod
    def from_scalar(cls, phi: TensorField) -> "ConformalFactor":
        if phi.supports_ad:
            ln = scalar_field(phi.chart, lambda c: ad.log(phi.fn(c)), name=f"ln({phi.name})")
        else:
            ln = scalar_field(phi.chart, eval_fn=lambda pts: np.log(phi(pts)), name=f"ln({phi.name})")
        return cls(phi, ln)

    @classmethod
    def from_log(cls, ln: TensorField) -> "ConformalFactor":
        if ln.supports_ad:
            phi = scalar_field(ln.chart, lambda c: ad.exp(ln.fn(c)), name=f"exp({ln.name})")
        else:
            phi = scalar_field(ln.chart, eval_fn=lambda pts: np.exp(ln(pts)), name=f"exp({ln.name})")
        return cls(phi, ln)

    def validate(self, pts, tol: float = 1e-12) -> None:
        v = self.phi(pts)
        if np.any(v <= 0.0):
            k = int(np.argmax(v <= 0.0))
            raise GaugeError(f"conformal factor {v[k]:.6g} <= 0 at point {np.asarray(pts)[k]}")
        worst = float(np.max(np.abs(self.ln(pts) - np.log(v))))
        if worst > tol:
            raise GaugeError(f"cached log is inconsistent with the factor: {worst:.3e}")


@dataclass(frozen=True)
class ConformalWeights:
    """Scaling exponents of the thermodynamic scalars and their derived
    tensor weights.  The admissible value is ``w = 1 - m`` (current weight
    zero); anything else is only useful as a negative control."""

    m: int
    w: int = None

    def __post_init__(self):
        if self.w is None:
            object.__setattr__(self, "w", 1 - self.m)

    @property
    def stress_weight(self) -> int:
        return self.w + 2

    @property
    def current_weight(self) -> int:
        return self.m + self.w - 1


def _pow_scale(field: TensorField, factor: ConformalFactor, power: float, name: str):
    """Multiply a scalar/vector/tensor field by ``Phi**power``."""
    phi = factor.phi
    if field.supports_ad and phi.supports_ad:
        def fn(coords):
            s = phi.fn(coords) ** power
            return _scale_tree(field.fn(coords), s)

        return TensorField(field.chart, field.variance, fn, name=name)

    def eval_fn(pts):
        s = phi(pts) ** power
        v = field(pts)
        return v * s.reshape((-1,) + (1,) * field.rank)

    return TensorField(field.chart, field.variance, eval_fn=eval_fn, name=name)


def _scale_tree(components, s):
    if isinstance(components, (list, tuple)):
        return [_scale_tree(c, s) for c in components]
    return components * s


def conformal_rescale(
    bundle: WeylBundle,
    state: FluidState,
    factor: ConformalFactor,
    engine: DerivativeEngine,
    weights: ConformalWeights = None,
    check_pts=None,
):
    """Push the whole bundle along the gauge orbit.

    Returns the rescaled ``(WeylBundle, FluidState)``.  With the default
    weights the connection, the current and slice counts are unchanged;
    ``weights`` may be overridden for negative controls.  When
    ``check_pts`` is given the factor is validated there first
    (:class:`GaugeError` on non-positive values).
    """
    m = bundle.g.chart.dim
    if weights is None:
        weights = ConformalWeights(m)
    if check_pts is not None:
        factor.validate(check_pts)
    phi_f, ln_f = factor.phi, factor.ln

    g2_scaled = _pow_scale(bundle.g, factor, 2.0, name=f"{bundle.g.name}~")
    g2 = MetricField(
        bundle.g.chart, g2_scaled.fn, eval_fn=g2_scaled.eval_fn, name=g2_scaled.name
    )
    n2 = _pow_scale(state.n, factor, -1.0, name=f"{state.n.name}~")
    p2 = _pow_scale(state.p, factor, float(weights.w), name=f"{state.p.name}~")
    rho2 = _pow_scale(state.rho, factor, float(weights.w), name=f"{state.rho.name}~")

    A = bundle.A

    def a2_eval(pts):
        return A(pts) + engine.jacobian(ln_f, pts)

    A2 = TensorField(bundle.g.chart, ("d",), eval_fn=a2_eval, name=f"{A.name}~")

    def phi2_eval(pts):
        dln = engine.jacobian(ln_f, pts)
        return (state.phi(pts) - np.einsum("na,na->n", state.n(pts), dln)) / phi_f(pts)

    phi2 = scalar_field(bundle.g.chart, eval_fn=phi2_eval, name=f"{state.phi.name}~")

    bundle2 = WeylBundle(g=g2, A=A2, gamma=eps_connection(g2, A2, engine))
    state2 = FluidState(n=n2, p=p2, rho=rho2, phi=phi2)
    return bundle2, state2


def rescaled_stress_energy_check(
    T: TensorField, T2: TensorField, factor: ConformalFactor, pts
) -> float:
    """Max-norm of ``T~ - Phi^(3-m) T``; zero exactly when the rescale used
    the admissible weight (and identically in dimension three)."""
    m = T.chart.dim
    scale = factor.phi(pts) ** (3 - m)
    return float(np.max(np.abs(T2(pts) - scale[:, None, None] * T(pts))))


def current_invariance_check(J: TensorField, J2: TensorField, pts) -> float:
    """Max-norm of ``J~ - J`` over the sample batch."""
    return float(np.max(np.abs(J2(pts) - J(pts))))


# -- preferred frame ---------------------------------------------------------


@dataclass(frozen=True)
class FrameSolverParams:
    """Characteristic integrator and memo-grid settings.

    ``max_step``/``initial_step`` default to fractions of the slice-axis
    interval; accuracy is controlled by the embedded error estimate, the
    cap only keeps the final-step crossing interpolation honest.
    """

    rtol: float = 1e-8
    atol: float = 1e-10
    initial_step: float = None
    max_step: float = None
    max_steps: int = 4000
    # int, per-axis tuple, or None to take the preset hint (default 17)
    grid_nodes: object = None
    interpolation: str = "cubic"
    transversality_eps: float = 1e-8
    chunk: int = 24576


# Fehlberg 4(5) tableau; the fifth-order solution is propagated.
_RK_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_RK_A = [
    np.array([]),
    np.array([1 / 4]),
    np.array([3 / 32, 9 / 32]),
    np.array([1932 / 2197, -7200 / 2197, 7296 / 2197]),
    np.array([439 / 216, -8.0, 3680 / 513, -845 / 4104]),
    np.array([-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40]),
]
_RK_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
_RK_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])


def _rk_stage_batch(rhs, y, h):
    """One embedded step for a batch of states ``(B, d)`` with per-ray step
    sizes ``(B,)``; returns the fifth-order state and the error estimate."""
    ks = []
    for i in range(6):
        yi = y.copy()
        for j, aij in enumerate(_RK_A[i]):
            yi += (h * aij)[:, None] * ks[j]
        ks.append(rhs(yi))
    y5 = y.copy()
    err = np.zeros_like(y)
    for i in range(6):
        y5 += (h * _RK_B5[i])[:, None] * ks[i]
        err += (h * (_RK_B5[i] - _RK_B4[i]))[:, None] * ks[i]
    return y5, err


class _Transport:
    """Backward characteristic transport of the log-factor to a seed slice."""

    def __init__(self, g, n, engine, axis, value, params):
        self.g = g
        self.n = n
        self.engine = engine
        self.axis = axis
        self.value = value
        self.params = params
        self.m = g.chart.dim
        a, b = g.chart.intervals[axis]
        self.max_step = params.max_step or (b - a) / 8.0
        self.initial_step = params.initial_step or self.max_step / 5.0

    def _flow_and_source(self, pts):
        # only the metric trace d ln sqrt|g| is needed, not the full
        # Christoffel array: keeps the per-stage cost low for big batches
        gval, dg = self.engine.value_and_jacobian(self.g, pts)
        inv = np.linalg.inv(0.5 * (gval + np.swapaxes(gval, -1, -2)))
        trace = 0.5 * np.einsum("nij,njic->nc", inv, dg)
        nval, njac = self.engine.value_and_jacobian(self.n, pts)
        div = np.einsum("naa->n", njac) + np.einsum("nc,nc->n", trace, nval)
        return nval, div / (self.m - 1.0)

    def solve(self, pts) -> np.ndarray:
        """Log-factor values at the given points (chunked batch integration)."""
        pts = self.g.chart.as_points(pts)
        out = np.empty(len(pts))
        for start in range(0, len(pts), self.params.chunk):
            block = slice(start, start + self.params.chunk)
            out[block] = self._solve_block(pts[block])
        return out

    def _solve_block(self, pts) -> np.ndarray:
        p = self.params
        b = len(pts)
        xk = pts[:, self.axis]
        dirs = np.sign(xk - self.value)
        out = np.zeros(b)
        active = dirs != 0.0

        # state: m coordinates plus the accumulated source integral
        y = np.concatenate([pts, np.zeros((b, 1))], axis=1)
        h = np.full(b, self.initial_step)
        lo, hi = self.g.chart.bounds(0.0)

        def rhs(state):
            q = state[:, : self.m]
            nval, src = self._flow_and_source(q)
            bad = nval[:, self.axis] <= p.transversality_eps
            if np.any(bad & active_stage):
                k = int(np.argmax(bad & active_stage))
                raise TransversalityError(
                    f"flow component along slice axis is "
                    f"{nval[k, self.axis]:.3e} <= 0 near point {q[k]}"
                )
            d = np.zeros_like(state)
            d[:, : self.m] = -dirs[batch_idx, None] * nval
            d[:, self.m] = src
            return d

        for _ in range(p.max_steps):
            if not np.any(active):
                break
            batch_idx = np.flatnonzero(active)
            active_stage = np.ones(len(batch_idx), dtype=bool)
            ya = y[batch_idx]
            ha = np.minimum(h[batch_idx], self.max_step)
            y5, err = _rk_stage_batch(rhs, ya, ha)
            scale = p.atol + p.rtol * np.maximum(np.abs(ya), np.abs(y5))
            ratio = np.max(np.abs(err) / scale, axis=1)
            accept = ratio <= 1.0
            grow = 0.9 * np.power(np.maximum(ratio, 1e-16), -0.2)
            h[batch_idx] = ha * np.clip(grow, 0.2, 2.5)
            if np.any(h[batch_idx] < 1e-14):
                raise StiffnessError("characteristic step size underflow")
            if not np.any(accept):
                continue

            acc_idx = batch_idx[accept]
            y_old = y[acc_idx]
            y_new = y5[accept]
            xo = y_old[:, self.axis] - self.value
            xn = y_new[:, self.axis] - self.value
            crossed = (xo * xn <= 0.0) | (np.abs(xn) < 1e-13)
            if np.any(crossed):
                # locate the crossing by linear interpolation within the
                # final step and redo it with the clipped step size
                ci = acc_idx[crossed]
                theta = xo[crossed] / (xo[crossed] - xn[crossed])
                batch_idx = ci
                active_stage = np.ones(len(ci), dtype=bool)
                yc, _ = _rk_stage_batch(rhs, y_old[crossed], ha[accept][crossed] * theta)
                out[ci] = -dirs[ci] * yc[:, self.m]
                active[ci] = False
            keep = acc_idx[~crossed]
            if len(keep):
                kept = y_new[~crossed]
                inside = np.all(
                    (kept[:, : self.m] >= lo) & (kept[:, : self.m] <= hi), axis=1
                )
                if not np.all(inside):
                    k = int(np.argmax(~inside))
                    raise ReachabilityError(
                        f"characteristic from point {pts[keep[k]]} left the chart "
                        f"before reaching the seed slice"
                    )
                y[keep] = kept
        else:
            raise StiffnessError("characteristic integration exceeded max_steps")
        return out


def preferred_frame(
    g: MetricField,
    n: TensorField,
    seed_slice: SliceSpec,
    engine: DerivativeEngine,
    params: FrameSolverParams = None,
    grid_nodes=None,
) -> ConformalFactor:
    """Solve for the gauge factor making the flow divergence-free.

    ``ln Phi`` vanishes on the seed slice and is obtained at any point by
    integrating the flow characteristic back to the slice.  The solved
    values are memoized on a tensor grid spanning the half-margin inset of
    the chart box (node counts may differ per axis), with an interpolating
    tensor spline for cheap finite-difference derivatives; direct per-point
    integration stays available for spot checks via the returned factor's
    ``solve_at`` attribute.
    """
    params = params or FrameSolverParams()
    chart = g.chart
    transport = _Transport(g, n, engine, seed_slice.axis, seed_slice.value, params)

    nodes_spec = grid_nodes if grid_nodes is not None else params.grid_nodes
    if nodes_spec is None:
        nodes_spec = 17
    if np.isscalar(nodes_spec):
        nodes_spec = (int(nodes_spec),) * chart.dim
    lo, hi = chart.bounds(chart.margin / 2.0)
    axes = [np.linspace(lo[j], hi[j], nodes_spec[j]) for j in range(chart.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([a.ravel() for a in mesh], axis=-1)
    values = transport.solve(nodes).reshape(mesh[0].shape)
    interp = build_interpolator(axes, values, params.interpolation)

    ln = scalar_field(chart, eval_fn=lambda pts: interp(pts), name="ln(frame-factor)")
    factor = ConformalFactor.from_log(ln)
    factor.solve_at = transport.solve
    factor.grid_axes = axes
    factor.grid_values = values
    return factor


def transport_residual(
    factor: ConformalFactor, g: MetricField, n: TensorField, engine: DerivativeEngine
) -> TensorField:
    """Residual ``n^a d_a ln Phi + (1/(m-1)) nabla^g_a n^a`` of the
    preferred-frame transport equation."""
    m = g.chart.dim

    def eval_fn(pts):
        dln = engine.jacobian(factor.ln, pts)
        data = metric_aux(g, pts, engine)
        nval, njac = engine.value_and_jacobian(n, pts)
        div = np.einsum("naa->n", njac) + np.einsum("nc,nc->n", data.gamma_trace, nval)
        return np.einsum("na,na->n", nval, dln) + div / (m - 1.0)

    return scalar_field(g.chart, eval_fn=eval_fn, name="transport-residual")


def incompressibility_residual(g2: MetricField, n2: TensorField, engine: DerivativeEngine) -> TensorField:
    """Metric divergence of the rescaled flow, ``nabla^{g~}_a n~^a``."""

    def eval_fn(pts):
        data = metric_aux(g2, pts, engine)
        nval, njac = engine.value_and_jacobian(n2, pts)
        return np.einsum("naa->n", njac) + np.einsum("nc,nc->n", data.gamma_trace, nval)

    return scalar_field(g2.chart, eval_fn=eval_fn, name="incompressibility-residual")


def preferred_weyl_covector(g2: MetricField, n2: TensorField, engine: DerivativeEngine) -> TensorField:
    """The covector of the preferred gauge: the flow's own acceleration,
    with the reparametrization scalar pinned to zero."""
    return fluid_covector(g2, n2, constant_scalar(g2.chart, 0.0), engine)
