"""Named verification suites.

Each suite function takes a prepared :class:`SuiteContext` and returns a
list of :class:`CheckRecord`; the harness assembles them into a report.
Every record carries a short anchor phrase naming the identity it
exercises, so reports are self-documenting.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .catalog import (
    CatalogBundle,
    null_tangent,
    polynomial_covector,
    polynomial_scalar,
    perturbed_metric,
    seeded_positive_factor,
    sheared_flow,
    comoving_flow,
)
from .conformal import (
    ConformalFactor,
    ConformalWeights,
    FrameSolverParams,
    conformal_rescale,
    current_invariance_check,
    incompressibility_residual,
    preferred_frame,
    preferred_weyl_covector,
    rescaled_stress_energy_check,
    transport_residual,
)
from .connections import eps_connection, levi_civita, nonmetricity_residual, sqrt_det_trace_residual
from .conservation import (
    SliceSpec,
    condition_scalars,
    current_divergence,
    current_identity_residual,
    decomposition_residuals,
    number_on_slice,
    particle_current,
)
from .errors import WeylFluidError
from .fluid import WeylBundle, fluid_connection, fluid_covector, geodesic_defect, stress_energy
from .geometry import DerivativeEngine, constant_scalar, metric_aux, scalar_field
from .worldlines import (
    StepperParams,
    eps_null_check,
    integral_curve,
    integrate_autoparallel,
    integrate_autoparallel_batch,
    integrate_null_geodesic_batch,
    null_norm_drift,
    trajectory_compare,
)


@dataclass(frozen=True)
class Tolerances:
    """Residual thresholds, one per check family."""

    tol_ad: float = 1e-9
    tol_fd: float = 1e-5
    inverse: float = 1e-12
    identity: float = 1e-8
    frame: float = 1e-4
    frame_closed: float = 1e-6
    quadrature_rel: float = 1e-6
    trajectory: float = 1e-6
    null_orthogonal: float = 1e-8
    current_weight: float = 1e-8
    stress_weight: float = 1e-9

    @property
    def derivative(self) -> float:
        return self.tol_ad


@dataclass(frozen=True)
class CheckRecord:
    name: str
    anchor: str
    max_residual: float
    tol: float
    passed: bool


@dataclass
class SuiteContext:
    """Everything a suite needs: the built preset, derivative engine,
    shared sample batch, thresholds and seeds."""

    preset: CatalogBundle
    engine: DerivativeEngine
    pts: np.ndarray
    tols: Tolerances = dc_field(default_factory=Tolerances)
    seed: int = 0
    weight_override: int = None
    frame_params: FrameSolverParams = dc_field(default_factory=FrameSolverParams)
    rays: int = 5
    nonmetricity_pairs: int = 20
    seeded_factors: int = 10

    def __post_init__(self):
        self._bundle = None

    @property
    def bundle(self) -> WeylBundle:
        if self._bundle is None:
            st = self.preset.state
            self._bundle = fluid_connection(self.preset.g, st.n, st.phi, self.engine)
        return self._bundle

    def record(self, name, anchor, residual, tol) -> CheckRecord:
        residual = float(residual)
        return CheckRecord(name, anchor, residual, float(tol), bool(residual <= tol))


def _maxabs(arr) -> float:
    return float(np.max(np.abs(arr)))


# -- connection suite ---------------------------------------------------------


def connection_suite(ctx: SuiteContext):
    g, engine, pts, tols = ctx.preset.g, ctx.engine, ctx.pts, ctx.tols
    chart = g.chart
    checks = []

    graw = g(pts)
    checks.append(ctx.record(
        "metric-symmetry", "metric components are symmetric",
        _maxabs(graw - np.swapaxes(graw, 1, 2)), 0.0))

    try:
        g.check_signature(pts)
        sig = 0.0
    except WeylFluidError:
        sig = 1.0
    checks.append(ctx.record(
        "metric-signature", "one negative and m-1 positive metric eigenvalues", sig, 0.5))

    data = metric_aux(g, pts)
    eye = np.eye(chart.dim)
    checks.append(ctx.record(
        "metric-inverse", "g times its inverse is the identity",
        _maxabs(np.einsum("nab,nbc->nac", data.inv, data.val) - eye), tols.inverse))

    bundle = ctx.bundle
    checks.append(ctx.record(
        "torsion-free", "connection coefficients are symmetric in the lower pair",
        _maxabs(bundle.gamma.torsion(pts)), 0.0))

    zero_cov = polynomial_covector(chart, np.random.default_rng(0), 0.0)
    lc = levi_civita(g, engine)
    checks.append(ctx.record(
        "zero-covector-reduction", "vanishing covector reproduces the metric connection",
        _maxabs(eps_connection(g, zero_cov, engine)(pts) - lc(pts)), 0.0))

    checks.append(ctx.record(
        "nonmetricity", "covariant metric derivative equals twice covector times metric",
        _maxabs(nonmetricity_residual(bundle.gamma, g, bundle.A, engine)(pts)),
        tols.derivative))
    checks.append(ctx.record(
        "volume-trace", "weight-1 derivative of sqrt|g| equals m A sqrt|g|",
        _maxabs(sqrt_det_trace_residual(g, bundle.gamma, bundle.A, engine, pts)),
        tols.derivative))

    worst_pair = 0.0
    base = ctx.preset.g
    for k in range(ctx.nonmetricity_pairs):
        rng_seed = ctx.seed * 1000 + k
        gk = perturbed_metric(base, 0.01, rng_seed) if base.supports_ad else base
        ak = polynomial_covector(chart, np.random.default_rng(rng_seed + 1), 0.3)
        gammak = eps_connection(gk, ak, engine)
        worst_pair = max(worst_pair, _maxabs(nonmetricity_residual(gammak, gk, ak, engine)(pts)))
        worst_pair = max(worst_pair, _maxabs(sqrt_det_trace_residual(gk, gammak, ak, engine, pts)))
    checks.append(ctx.record(
        "nonmetricity-seeded-pairs",
        "non-metricity and trace identities over seeded metric/covector pairs",
        worst_pair, tols.derivative))
    return checks


# -- fluid suite --------------------------------------------------------------


def _fluid_family(ctx: SuiteContext):
    """The preset family swept by geodesy checks: comoving and sheared flows
    crossed with zero/constant/polynomial reparametrization scalars."""
    g = ctx.preset.g
    chart = g.chart
    rng = np.random.default_rng(ctx.seed + 7)
    flows = [ctx.preset.state.n]
    if g.supports_ad:
        flows.append(comoving_flow(chart, g))
        if chart.intervals[1][0] <= 0.0 <= chart.intervals[1][1]:
            flows.append(sheared_flow(chart, g, 0.1))
    phis = [
        ctx.preset.state.phi,
        constant_scalar(chart, 0.0),
        constant_scalar(chart, 0.4),
        polynomial_scalar(chart, rng, 0.2, name="phi(poly)"),
    ]
    return flows, phis


def fluid_suite(ctx: SuiteContext):
    g, engine, pts, tols = ctx.preset.g, ctx.engine, ctx.pts, ctx.tols
    st = ctx.preset.state
    checks = []

    bundle = ctx.bundle
    checks.append(ctx.record(
        "geodesic-defect", "flow transport is proportional to the flow",
        _maxabs(geodesic_defect(bundle, st.n, st.phi, engine)(pts)), tols.derivative))

    contraction = np.einsum("na,na->n", bundle.A(pts), st.n(pts)) + st.phi(pts)
    checks.append(ctx.record(
        "covector-flow-contraction", "flow contraction of the covector is minus the scalar",
        _maxabs(contraction), tols.derivative))

    T = stress_energy(g, st.n, st.p, st.rho)
    tval = T(pts)
    checks.append(ctx.record(
        "stress-energy-symmetry", "stress-energy is symmetric",
        _maxabs(tval - np.swapaxes(tval, 1, 2)), 0.0))

    data = metric_aux(g, pts)
    nv = st.n(pts)
    tn = np.einsum("nma,nab,nb->nm", data.inv, tval, nv)
    checks.append(ctx.record(
        "flow-eigenvector", "the flow is a stress-energy eigenvector with eigenvalue -rho",
        _maxabs(tn + st.rho(pts)[:, None] * nv), tols.inverse))

    flows, phis = _fluid_family(ctx)
    worst = 0.0
    for flow in flows:
        for phi in phis:
            fb = fluid_connection(g, flow, phi, engine)
            worst = max(worst, _maxabs(geodesic_defect(fb, flow, phi, engine)(pts)))
            worst = max(worst, _maxabs(
                np.einsum("na,na->n", fb.A(pts), flow(pts)) + phi(pts)))
    checks.append(ctx.record(
        "geodesic-defect-family", "geodesy across the preset flow/scalar family",
        worst, tols.derivative))
    return checks


# -- conservation suite -------------------------------------------------------


def conservation_suite(ctx: SuiteContext):
    g, engine, pts, tols = ctx.preset.g, ctx.engine, ctx.pts, ctx.tols
    st = ctx.preset.state
    meta = ctx.preset.meta
    bundle = ctx.bundle
    checks = []

    flow_res, ortho_res = decomposition_residuals(
        g, bundle.gamma, st.n, st.p, st.rho, st.phi, engine, pts)
    checks.append(ctx.record(
        "divergence-decomposition-flow",
        "flow projection of the stress-energy divergence matches the first condition",
        _maxabs(flow_res), tols.identity))
    checks.append(ctx.record(
        "divergence-decomposition-orthogonal",
        "orthogonal projection matches the second condition",
        _maxabs(ortho_res), tols.identity))

    T = stress_energy(g, st.n, st.p, st.rho)
    J = particle_current(g, T, st.n)
    data = metric_aux(g, pts)
    expected = -data.sqrt_det[:, None] * st.rho(pts)[:, None] * st.n(pts)
    checks.append(ctx.record(
        "current-perfect-fluid-form", "current equals minus density times weighted flow",
        _maxabs(J(pts) - expected), tols.derivative))

    checks.append(ctx.record(
        "current-divergence-identity",
        "coordinate current divergence equals its connection decomposition",
        _maxabs(current_identity_residual(g, bundle.gamma, bundle.A, T, st.n, engine)(pts)),
        tols.identity))

    cs = condition_scalars(g, bundle.gamma, bundle.A, st.n, st.p, st.rho, st.phi, engine)
    checks.append(ctx.record(
        "condition-scalar-transport", "contracted flow-transport scalar matches closed form",
        _maxabs(cs.s1_residual(pts)), tols.derivative))
    checks.append(ctx.record(
        "condition-scalar-covector", "contracted covector scalar equals rho phi",
        _maxabs(cs.s2_residual(pts)), tols.derivative))

    if meta.get("conserved"):
        checks.append(ctx.record(
            "current-conservation", "conserved preset has divergence-free current",
            _maxabs(current_divergence(J, engine)(pts)), tols.identity))
        axis = meta["slice_axis"]
        v1, v2 = meta["slice_values"]
        box = meta["slice_box"]
        n1, e1 = number_on_slice(J, SliceSpec(axis, v1, box))
        n2, e2 = number_on_slice(J, SliceSpec(axis, v2, box))
        rel = abs(n1 - n2) / max(abs(n1), abs(n2), 1e-300)
        checks.append(ctx.record(
            "slice-count-conservation", "slice counts agree along the flow",
            rel, tols.quadrature_rel))
    return checks


# -- conformal suite ----------------------------------------------------------


def conformal_suite(ctx: SuiteContext):
    g, engine, pts, tols = ctx.preset.g, ctx.engine, ctx.pts, ctx.tols
    st = ctx.preset.state
    bundle = ctx.bundle
    chart = g.chart
    m = chart.dim
    weights = None
    if ctx.weight_override is not None:
        weights = ConformalWeights(m, w=ctx.weight_override)
    checks = []

    gamma_ref = bundle.gamma(pts)
    worst_orbit = 0.0
    for k in range(ctx.seeded_factors):
        fac = seeded_positive_factor(chart, ctx.seed * 100 + k)
        b2, _ = conformal_rescale(bundle, st, fac, engine, check_pts=pts)
        worst_orbit = max(worst_orbit, _maxabs(b2.gamma(pts) - gamma_ref))
    checks.append(ctx.record(
        "connection-orbit-invariance", "the connection is unchanged along the gauge orbit",
        worst_orbit, tols.derivative))

    f1 = seeded_positive_factor(chart, ctx.seed * 100 + 41)
    f2 = seeded_positive_factor(chart, ctx.seed * 100 + 42)
    b_i, s_i = conformal_rescale(bundle, st, f1, engine)
    b_ii, s_ii = conformal_rescale(b_i, s_i, f2, engine)
    prod = ConformalFactor.from_log(
        scalar_field(chart, lambda c: f1.ln.fn(c) + f2.ln.fn(c)))
    b_p, s_p = conformal_rescale(bundle, st, prod, engine)
    group = max(
        _maxabs(b_ii.g(pts) - b_p.g(pts)),
        _maxabs(s_ii.n(pts) - s_p.n(pts)),
        _maxabs(b_ii.A(pts) - b_p.A(pts)),
        _maxabs(s_ii.phi(pts) - s_p.phi(pts)),
        _maxabs(s_ii.p(pts) - s_p.p(pts)),
        _maxabs(s_ii.rho(pts) - s_p.rho(pts)),
    )
    checks.append(ctx.record(
        "gauge-group-law", "successive rescalings compose multiplicatively", group,
        tols.derivative))

    fac = seeded_positive_factor(chart, ctx.seed * 100 + 43)
    b2, s2 = conformal_rescale(bundle, st, fac, engine, weights=weights)
    norm = np.einsum("nij,ni,nj->n", b2.g(pts), s2.n(pts), s2.n(pts))
    checks.append(ctx.record(
        "rescaled-normalization", "rescaled flow is unit for the rescaled metric",
        _maxabs(norm + 1.0), tols.derivative))

    closure = fluid_covector(b2.g, s2.n, s2.phi, engine)
    checks.append(ctx.record(
        "covector-transformation-closure",
        "rescaled covector is induced by the rescaled flow and scalar",
        _maxabs(b2.A(pts) - closure(pts)), tols.identity))

    T = stress_energy(g, st.n, st.p, st.rho)
    T2 = stress_energy(b2.g, s2.n, s2.p, s2.rho)
    checks.append(ctx.record(
        "stress-energy-weight", "rescaled stress-energy carries exponent 3-m",
        rescaled_stress_energy_check(T, T2, fac, pts), tols.stress_weight))

    J = particle_current(g, T, st.n)
    J2 = particle_current(b2.g, T2, s2.n)
    checks.append(ctx.record(
        "current-weight", "the current is a gauge-orbit fixed point",
        current_invariance_check(J, J2, pts), tols.current_weight))

    meta = ctx.preset.meta
    if meta.get("slice_box") is not None:
        spec = SliceSpec(meta["slice_axis"], meta["slice_values"][0], meta["slice_box"])
        n1, _ = number_on_slice(J, spec)
        n2, _ = number_on_slice(J2, spec)
        checks.append(ctx.record(
            "slice-count-gauge-invariance", "slice counts are gauge invariant",
            abs(n1 - n2) / max(abs(n1), 1e-300), tols.quadrature_rel))
    return checks


# -- frame suite --------------------------------------------------------------


def frame_suite(ctx: SuiteContext):
    g, engine, pts, tols = ctx.preset.g, ctx.engine, ctx.pts, ctx.tols
    st = ctx.preset.state
    meta = ctx.preset.meta
    chart = g.chart
    checks = []

    axis = meta["slice_axis"]
    value = meta["slice_values"][0]
    spec = SliceSpec(axis, value, meta["slice_box"])
    nodes = ctx.frame_params.grid_nodes or meta.get("frame_nodes")
    factor = preferred_frame(g, st.n, spec, engine, ctx.frame_params, grid_nodes=nodes)

    checks.append(ctx.record(
        "frame-transport", "solved factor satisfies the transport equation",
        _maxabs(transport_residual(factor, g, st.n, engine)(pts)), tols.frame))

    closed_builder = meta.get("closed_frame")
    if closed_builder is not None:
        closed = closed_builder(value)
        lo, hi = chart.bounds(chart.margin / 2.0)
        grid_pts = np.stack(
            [m.ravel() for m in np.meshgrid(*factor.grid_axes, indexing="ij")], axis=-1)
        checks.append(ctx.record(
            "frame-closed-form", "solved log factor matches the closed form on the grid",
            _maxabs(factor.grid_values.ravel() - closed.ln(grid_pts)), tols.frame_closed))
        b2c, s2c = conformal_rescale(ctx.bundle, st, closed, engine)
        checks.append(ctx.record(
            "incompressibility-closed-form",
            "closed-form gauge makes the flow divergence-free",
            _maxabs(incompressibility_residual(b2c.g, s2c.n, engine)(pts)),
            tols.frame_closed))

    b2, s2 = conformal_rescale(ctx.bundle, st, factor, engine)
    checks.append(ctx.record(
        "incompressibility", "solved gauge makes the flow divergence-free",
        _maxabs(incompressibility_residual(b2.g, s2.n, engine)(pts)), tols.frame))

    A2 = preferred_weyl_covector(b2.g, s2.n, engine)
    pb = WeylBundle(b2.g, A2, eps_connection(b2.g, A2, engine))
    zero = constant_scalar(chart, 0.0)
    cs = condition_scalars(pb.g, pb.gamma, pb.A, s2.n, s2.p, s2.rho, zero, engine)
    checks.append(ctx.record(
        "preferred-scalar-transport", "first obstruction scalar vanishes in the frame",
        _maxabs(cs.s1(pts)), tols.frame))
    checks.append(ctx.record(
        "preferred-scalar-covector", "second obstruction scalar vanishes in the frame",
        _maxabs(cs.s2(pts)), tols.frame))
    checks.append(ctx.record(
        "preferred-geodesic-defect", "flow is affinely autoparallel in the frame",
        _maxabs(geodesic_defect(pb, s2.n, zero, engine)(pts)), tols.frame))
    return checks


# -- worldlines suite ---------------------------------------------------------


def worldlines_suite(ctx: SuiteContext):
    g, engine, tols = ctx.preset.g, ctx.engine, ctx.tols
    st = ctx.preset.state
    meta = ctx.preset.meta
    chart = g.chart
    bundle = ctx.bundle
    checks = []

    rng = np.random.default_rng(ctx.seed + 101)
    lo, hi = chart.bounds(chart.margin + 0.15)
    s_max = meta.get("ray_s_max", 1.0)
    stepper = StepperParams()

    x0s = lo + rng.random((ctx.rays, chart.dim)) * (hi - lo)
    dirs = rng.normal(size=(ctx.rays, chart.dim - 1))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    k0s = np.stack([null_tangent(g, x0, d) for x0, d in zip(x0s, dirs)])
    paths_g = integrate_null_geodesic_batch(g, x0s, k0s, s_max, engine, stepper)
    paths_w = integrate_autoparallel_batch(bundle.gamma, x0s, k0s, s_max, stepper)

    worst_dev = 0.0
    worst_ortho = 0.0
    worst_drift = 0.0
    for path_g, path_w in zip(paths_g, paths_w):
        worst_drift = max(worst_drift, null_norm_drift(g, path_g))
        report = eps_null_check(g, bundle.gamma, path_g, engine)
        worst_ortho = max(worst_ortho, report["max_orthogonal"])
        # deviation per unit auxiliary arc over the common range
        _, dense = path_g.hermite_resample(400)
        arc = max(float(np.sum(np.linalg.norm(np.diff(dense, axis=0), axis=1))), 1e-6)
        worst_dev = max(worst_dev, trajectory_compare(path_g, path_w) / arc)
    checks.append(ctx.record(
        "null-first-integral", "tangent norm is conserved along metric null geodesics",
        worst_drift, tols.identity))
    checks.append(ctx.record(
        "null-compatibility-defect", "null transport defect stays parallel to the ray",
        worst_ortho, tols.null_orthogonal))
    checks.append(ctx.record(
        "null-trajectory-coincidence",
        "metric null geodesics and connection autoparallels share trajectories",
        worst_dev, tols.trajectory))

    x0 = 0.5 * (lo + hi)
    flow_path = integral_curve(st.n, x0, s_max, engine, stepper)
    auto_path = integrate_autoparallel(bundle.gamma, x0, st.n(x0[None, :])[0], s_max, stepper)
    checks.append(ctx.record(
        "flow-line-trajectory", "flow lines are autoparallel trajectories",
        trajectory_compare(flow_path, auto_path), tols.trajectory))
    return checks


SUITES = {
    "connection": connection_suite,
    "fluid": fluid_suite,
    "conservation": conservation_suite,
    "conformal": conformal_suite,
    "frame": frame_suite,
    "worldlines": worldlines_suite,
}
