"""Autoparallel and null-geodesic integration, the null-compatibility check
between a metric and a Weyl-compatible connection, and trajectory
comparison up to reparametrization.

The operational content of null compatibility: a curve that is a null
geodesic of the metric must be an autoparallel *trajectory* of the
connection, i.e. its transport defect ``k^b nabla^Gamma_b k^a`` stays
proportional to the tangent.  The proportionality is tested by projecting
the defect orthogonally to the tangent under an auxiliary Euclidean
coordinate metric, since the physical norm of a null-parallel defect is
degenerate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .connections import ConnectionField, levi_civita
from .errors import ComparisonError, StiffnessError
from .geometry import Chart, DerivativeEngine, MetricField, TensorField

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


@dataclass(frozen=True)
class StepperParams:
    """Embedded adaptive Runge-Kutta controls."""

    rtol: float = 1e-10
    atol: float = 1e-10
    initial_step: float = 1e-3
    max_step_fraction: float = 0.02  # of the full parameter range
    min_step: float = 1e-13
    max_steps: int = 200000


@dataclass
class WorldlinePath:
    """Accepted integration nodes of one worldline.

    ``points[i]`` and ``tangents[i]`` belong to parameter ``s[i]``; the
    parameters are strictly increasing.  ``exited`` marks truncation at the
    chart boundary.
    """

    s: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    steps: int
    max_error: float
    exited: bool = False

    @property
    def start(self):
        return self.points[0]

    def hermite_resample(self, count: int):
        """Dense output: cubic Hermite interpolation on the accepted nodes,
        evaluated at ``count`` uniform parameter values."""
        svals = np.linspace(self.s[0], self.s[-1], count)
        seg = np.clip(np.searchsorted(self.s, svals, side="right") - 1, 0, len(self.s) - 2)
        s0, s1 = self.s[seg], self.s[seg + 1]
        hseg = s1 - s0
        t = ((svals - s0) / hseg)[:, None]
        p0, p1 = self.points[seg], self.points[seg + 1]
        m0 = self.tangents[seg] * hseg[:, None]
        m1 = self.tangents[seg + 1] * hseg[:, None]
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        return svals, h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1

    def to_csv(self, path: str) -> None:
        m = self.points.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s"] + [f"x{j}" for j in range(m)] + [f"v{j}" for j in range(m)])
            for i in range(len(self.s)):
                writer.writerow(
                    [f"{self.s[i]:.17g}"]
                    + [f"{v:.17g}" for v in self.points[i]]
                    + [f"{v:.17g}" for v in self.tangents[i]]
                )


def _rk_step_batch(rhs, y, h):
    """One embedded step for states ``(B, d)`` with per-ray sizes ``(B,)``."""
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


def _integrate_batch(chart: Chart, accel, x0s, v0s, s_max: float, params: StepperParams):
    """Adaptive embedded integration of ``x'' = accel(x, v)`` for a batch of
    independent rays with per-ray step control.

    ``accel(X, V)`` maps ``(B, m)`` pairs to accelerations ``(B, m)``.
    Rays that leave the chart box are truncated at the boundary (located by
    step bisection) and flagged ``exited``.  Returns one
    :class:`WorldlinePath` per ray.
    """
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    v0s = np.atleast_2d(np.asarray(v0s, dtype=float))
    nrays, m = x0s.shape
    lo, hi = chart.bounds(0.0)

    def rhs(state):
        return np.concatenate([state[:, m:], accel(state[:, :m], state[:, m:])], axis=1)

    y = np.concatenate([x0s, v0s], axis=1)
    s = np.zeros(nrays)
    h = np.full(nrays, min(params.initial_step, s_max))
    h_cap = params.max_step_fraction * s_max
    nodes_s = [[0.0] for _ in range(nrays)]
    nodes_y = [[y[i].copy()] for i in range(nrays)]
    attempts = np.zeros(nrays, dtype=int)
    max_ratio = np.zeros(nrays)
    exited = np.zeros(nrays, dtype=bool)
    active = np.ones(nrays, dtype=bool)

    for _ in range(params.max_steps):
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        ya = y[idx]
        ha = np.minimum(np.minimum(h[idx], h_cap), s_max - s[idx])
        y5, err = _rk_step_batch(rhs, ya, ha)
        scale = params.atol + params.rtol * np.maximum(np.abs(ya), np.abs(y5))
        ratio = np.max(np.abs(err) / scale, axis=1)
        attempts[idx] += 1
        accept = ratio <= 1.0
        h[idx] = ha * np.clip(0.9 * np.maximum(ratio, 1e-16) ** -0.2, 0.2, 5.0)
        if np.any(h[idx] < params.min_step):
            k = idx[int(np.argmin(h[idx]))]
            raise StiffnessError(f"step size underflow at s = {s[k]:.6g}")
        acc = idx[accept]
        if len(acc) == 0:
            continue
        y_new = y5[accept]
        h_acc = ha[accept]
        inside = np.all((y_new[:, :m] >= lo) & (y_new[:, :m] <= hi), axis=1)

        kept = acc[inside]
        max_ratio[kept] = np.maximum(max_ratio[kept], ratio[accept][inside])
        s[kept] += h_acc[inside]
        y[kept] = y_new[inside]
        for i, ray in enumerate(kept):
            nodes_s[ray].append(s[ray])
            nodes_y[ray].append(y[ray].copy())
        finished = kept[s[kept] >= s_max * (1.0 - 1e-14)]
        active[finished] = False

        for ray, h_try in zip(acc[~inside], h_acc[~inside]):
            # bisect toward the boundary, keeping the inside part
            h_in, h_out = 0.0, h_try
            y_in = None
            base = y[ray][None, :]
            for _ in range(60):
                h_mid = 0.5 * (h_in + h_out)
                y_mid, _ = _rk_step_batch(rhs, base, np.array([h_mid]))
                if np.all((y_mid[0, :m] >= lo) & (y_mid[0, :m] <= hi)):
                    h_in, y_in = h_mid, y_mid[0]
                else:
                    h_out = h_mid
            if y_in is not None:
                s[ray] += h_in
                nodes_s[ray].append(s[ray])
                nodes_y[ray].append(y_in)
            exited[ray] = True
            active[ray] = False
    else:
        raise StiffnessError("integration exceeded the step budget")

    paths = []
    for i in range(nrays):
        stacked = np.asarray(nodes_y[i])
        paths.append(WorldlinePath(
            s=np.asarray(nodes_s[i]),
            points=stacked[:, :m],
            tangents=stacked[:, m:],
            steps=int(attempts[i]),
            max_error=float(max_ratio[i]),
            exited=bool(exited[i]),
        ))
    return paths


def _integrate(chart: Chart, accel, x0, v0, s_max: float, params: StepperParams):
    """Single-ray convenience wrapper over the batch integrator."""
    def accel_batch(xs, vs):
        return accel(xs, vs)

    x0 = np.asarray(x0, dtype=float)[None, :]
    v0 = np.asarray(v0, dtype=float)[None, :]
    return _integrate_batch(chart, accel_batch, x0, v0, s_max, params)[0]


def _autoparallel_accel(gamma):
    def accel(xs, vs):
        return -np.einsum("nabc,nb,nc->na", gamma(xs), vs, vs)

    return accel


def integrate_autoparallel(
    gamma: ConnectionField, x0, v0, s_max: float, params: StepperParams = None
) -> WorldlinePath:
    """Solve ``x''^a + Gamma^a_{bc} x'^b x'^c = 0``."""
    params = params or StepperParams()
    chart = gamma.chart
    chart.require_inside(chart.as_points(x0))
    if not np.any(np.asarray(v0, dtype=float)):
        raise ValueError("initial tangent must be nonzero")
    return _integrate(chart, _autoparallel_accel(gamma), x0, v0, s_max, params)


def integrate_autoparallel_batch(
    gamma: ConnectionField, x0s, v0s, s_max: float, params: StepperParams = None
):
    """Independent autoparallels integrated together (per-ray step control)."""
    params = params or StepperParams()
    chart = gamma.chart
    chart.require_inside(chart.as_points(x0s))
    return _integrate_batch(chart, _autoparallel_accel(gamma), x0s, v0s, s_max, params)


def integrate_null_geodesic(
    g: MetricField,
    x0,
    k0,
    s_max: float,
    engine: DerivativeEngine,
    params: StepperParams = None,
    null_eps: float = 1e-10,
) -> WorldlinePath:
    """Affine null geodesic of the metric; the initial tangent must already
    be null to ``null_eps``.  The squared tangent norm is a first integral
    and is monitored through :func:`null_norm_drift`."""
    x0 = np.asarray(x0, dtype=float)
    k0 = np.asarray(k0, dtype=float)
    gv = g(x0[None, :])[0]
    norm0 = float(k0 @ gv @ k0)
    if abs(norm0) > null_eps:
        raise ValueError(f"initial tangent is not null: g(k,k) = {norm0:.3e}")
    return integrate_autoparallel(levi_civita(g, engine), x0, k0, s_max, params)


def integrate_null_geodesic_batch(
    g: MetricField,
    x0s,
    k0s,
    s_max: float,
    engine: DerivativeEngine,
    params: StepperParams = None,
    null_eps: float = 1e-10,
):
    """Independent null geodesics integrated together."""
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    k0s = np.atleast_2d(np.asarray(k0s, dtype=float))
    norms = np.einsum("nij,ni,nj->n", g(x0s), k0s, k0s)
    if np.any(np.abs(norms) > null_eps):
        k = int(np.argmax(np.abs(norms)))
        raise ValueError(f"initial tangent {k} is not null: g(k,k) = {norms[k]:.3e}")
    return integrate_autoparallel_batch(levi_civita(g, engine), x0s, k0s, s_max, params)


def null_norm_drift(g: MetricField, path: WorldlinePath) -> float:
    """Maximum |g(k,k)| along the path."""
    gv = g(path.points)
    return float(np.max(np.abs(np.einsum("nij,ni,nj->n", gv, path.tangents, path.tangents))))


def eps_null_check(
    g: MetricField, gamma: ConnectionField, path: WorldlinePath, engine: DerivativeEngine
) -> dict:
    """Transport defect of a metric null geodesic under another connection.

    Along the path, ``D^a = k^b nabla^Gamma_b k^a`` equals the connection
    deformation contracted with the tangent (the metric part cancels by
    construction of the path), so it is evaluated pointwise.  Reports the
    maximum Euclidean-orthogonal component (must vanish for compatible
    connections) and the maximum parallel magnitude.
    """
    lc = levi_civita(g, engine)
    dgam = gamma(path.points) - lc(path.points)
    k = path.tangents
    defect = np.einsum("nabc,nb,nc->na", dgam, k, k)
    k_norm = np.linalg.norm(k, axis=1)
    k_hat = k / k_norm[:, None]
    parallel = np.einsum("na,na->n", defect, k_hat)
    ortho = defect - parallel[:, None] * k_hat
    return {
        "max_orthogonal": float(np.max(np.linalg.norm(ortho, axis=1))),
        # coefficient alpha in defect = alpha * k, not the projection norm
        "max_parallel": float(np.max(np.abs(parallel / k_norm))),
    }


def _arclength_samples(path: WorldlinePath, count: int):
    """Euclidean arc length parametrization from a dense Hermite resample."""
    _, pts = path.hermite_resample(count)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    return arc, pts


def trajectory_compare(path_a: WorldlinePath, path_b: WorldlinePath, count: int = 2500) -> float:
    """Maximum pointwise distance between two paths after reparametrizing
    both by auxiliary-Euclidean arc length over the common arc range."""
    if np.linalg.norm(path_a.start - path_b.start) > 1e-9:
        raise ComparisonError("paths do not share a starting point")
    arc_a, pts_a = _arclength_samples(path_a, count)
    arc_b, pts_b = _arclength_samples(path_b, count)
    common = min(arc_a[-1], arc_b[-1])
    if common <= 0.0:
        raise ComparisonError("paths have no common arc range")
    grid = np.linspace(0.0, common, count)
    m = pts_a.shape[1]
    interp_a = np.stack([np.interp(grid, arc_a, pts_a[:, j]) for j in range(m)], axis=1)
    interp_b = np.stack([np.interp(grid, arc_b, pts_b[:, j]) for j in range(m)], axis=1)
    return float(np.max(np.linalg.norm(interp_a - interp_b, axis=1)))


def integral_curve(
    n: TensorField, x0, s_max: float, engine: DerivativeEngine, params: StepperParams = None
) -> WorldlinePath:
    """Integral curve of a vector field.

    Solved in second-order form ``x'' = (dn) x'`` with ``x'(0) = n(x0)``,
    whose unique solution keeps ``x' = n(x)``; this reuses the worldline
    stepper and records the velocity for trajectory comparison.
    """
    params = params or StepperParams()

    def accel(xs, vs):
        jac = engine.jacobian(n, xs)
        return np.einsum("nad,nd->na", jac, vs)

    x0 = np.asarray(x0, dtype=float)
    v0 = n(x0[None, :])[0]
    return _integrate(n.chart, accel, x0, v0, s_max, params)
