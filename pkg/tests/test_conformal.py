"""Gauge-orbit transport of the bundle and the preferred-frame solver."""

import numpy as np
import pytest

from weylfluid.catalog import build, seeded_positive_factor
from weylfluid.conformal import (
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
from weylfluid.connections import eps_connection
from weylfluid.conservation import SliceSpec, condition_scalars, number_on_slice, particle_current
from weylfluid.errors import GaugeError, ReachabilityError
from weylfluid.fluid import WeylBundle, fluid_connection, fluid_covector, geodesic_defect, stress_energy
from weylfluid.geometry import DerivativeEngine, constant_scalar, scalar_field

ENG = DerivativeEngine()
FAST_FRAME = FrameSolverParams(grid_nodes=9)


def _setup(name, **params):
    preset = build(name, params or None)
    st = preset.state
    bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
    pts = preset.chart.sample_points(3, 16, seed=0)
    return preset, bundle, pts


class TestWeights:
    def test_admissible_value(self):
        w = ConformalWeights(4)
        assert w.w == -3
        assert w.current_weight == 0
        assert w.stress_weight == -1

    def test_dimension_three(self):
        w = ConformalWeights(3)
        assert w.w == -2
        assert w.stress_weight == 0  # stress-energy conformally invariant


class TestRescale:
    def test_identity_gauge(self):
        preset, bundle, pts = _setup("flrw-comoving-dust")
        one = ConformalFactor.from_scalar(constant_scalar(preset.chart, 1.0))
        b2, s2 = conformal_rescale(bundle, preset.state, one, ENG)
        assert np.abs(b2.g(pts) - preset.g(pts)).max() < 1e-15
        assert np.abs(s2.n(pts) - preset.state.n(pts)).max() < 1e-15
        assert np.abs(s2.phi(pts) - preset.state.phi(pts)).max() < 1e-12
        assert np.abs(b2.A(pts) - bundle.A(pts)).max() < 1e-12

    def test_flat_exponential_factor(self):
        preset, bundle, pts = _setup("minkowski-dust-rest")
        chart = preset.chart
        fac = ConformalFactor.from_log(scalar_field(chart, lambda c: 0.1 * c[0]))
        b2, s2 = conformal_rescale(bundle, preset.state, fac, ENG)
        t = pts[:, 0]
        assert np.allclose(s2.phi(pts), -0.1 * np.exp(-0.1 * t), atol=1e-14)
        assert np.allclose(b2.A(pts), np.stack(
            [0.1 + 0 * t, 0 * t, 0 * t, 0 * t], axis=1), atol=1e-14)
        assert np.abs(b2.gamma(pts) - bundle.gamma(pts)).max() < 1e-14

    def test_scalar_weight_arithmetic(self):
        # w = 1 - m = -3: doubling the factor scales pressure by 1/8
        preset, bundle, pts = _setup("minkowski-radiation")
        fac = ConformalFactor.from_scalar(constant_scalar(preset.chart, 2.0))
        _, s2 = conformal_rescale(bundle, preset.state, fac, ENG)
        p0 = preset.state.p(pts)
        assert np.allclose(s2.p(pts), p0 / 8.0, rtol=1e-14)

    def test_unit_normalization_preserved(self):
        preset, bundle, pts = _setup("flrw-radiation")
        fac = seeded_positive_factor(preset.chart, 3)
        b2, s2 = conformal_rescale(bundle, preset.state, fac, ENG)
        norm = np.einsum("nij,ni,nj->n", b2.g(pts), s2.n(pts), s2.n(pts))
        assert np.abs(norm + 1.0).max() < 1e-12

    def test_connection_orbit_invariance(self):
        preset, bundle, pts = _setup("minkowski-perturbed")
        ref = bundle.gamma(pts)
        for seed in range(10):
            fac = seeded_positive_factor(preset.chart, seed)
            b2, _ = conformal_rescale(bundle, preset.state, fac, ENG)
            assert np.abs(b2.gamma(pts) - ref).max() < 1e-9

    def test_covector_closure(self):
        preset, bundle, pts = _setup("minkowski-sheared")
        fac = seeded_positive_factor(preset.chart, 5)
        b2, s2 = conformal_rescale(bundle, preset.state, fac, ENG)
        rebuilt = fluid_covector(b2.g, s2.n, s2.phi, ENG)
        assert np.abs(b2.A(pts) - rebuilt(pts)).max() < 1e-8

    def test_group_law(self):
        preset, bundle, pts = _setup("flrw-comoving-dust")
        chart = preset.chart
        f1 = seeded_positive_factor(chart, 21)
        f2 = seeded_positive_factor(chart, 22)
        b_a, s_a = conformal_rescale(bundle, preset.state, f1, ENG)
        b_ab, s_ab = conformal_rescale(b_a, s_a, f2, ENG)
        prod = ConformalFactor.from_log(
            scalar_field(chart, lambda c: f1.ln.fn(c) + f2.ln.fn(c)))
        b_p, s_p = conformal_rescale(bundle, preset.state, prod, ENG)
        for lhs, rhs in [(b_ab.g, b_p.g), (s_ab.n, s_p.n), (b_ab.A, b_p.A),
                         (s_ab.phi, s_p.phi), (s_ab.p, s_p.p), (s_ab.rho, s_p.rho)]:
            assert np.abs(lhs(pts) - rhs(pts)).max() < 1e-9

    def test_gauge_error_on_nonpositive_factor(self):
        preset, bundle, pts = _setup("minkowski-dust-rest")
        bad = ConformalFactor.from_scalar(
            scalar_field(preset.chart, lambda c: c[0]))  # changes sign on the chart
        with pytest.raises(GaugeError):
            conformal_rescale(bundle, preset.state, bad, ENG, check_pts=pts)


class TestWeightChecks:
    def test_stress_energy_weight(self):
        preset, bundle, pts = _setup("flrw-radiation")
        fac = seeded_positive_factor(preset.chart, 8)
        b2, s2 = conformal_rescale(bundle, preset.state, fac, ENG)
        T = stress_energy(preset.g, preset.state.n, preset.state.p, preset.state.rho)
        T2 = stress_energy(b2.g, s2.n, s2.p, s2.rho)
        assert rescaled_stress_energy_check(T, T2, fac, pts) < 1e-12

    def test_dimension_three_invariance(self):
        preset, bundle, pts = _setup("minkowski3-dust")
        fac = seeded_positive_factor(preset.chart, 9)
        b2, s2 = conformal_rescale(bundle, preset.state, fac, ENG)
        T = stress_energy(preset.g, preset.state.n, preset.state.p, preset.state.rho)
        T2 = stress_energy(b2.g, s2.n, s2.p, s2.rho)
        assert np.abs(T2(pts) - T(pts)).max() < 1e-12

    def test_current_invariance_and_negative_control(self):
        preset, bundle, pts = _setup("flrw-comoving-dust")
        st = preset.state
        fac = seeded_positive_factor(preset.chart, 10)
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        J = particle_current(preset.g, T, st.n)

        b2, s2 = conformal_rescale(bundle, st, fac, ENG)
        J2 = particle_current(b2.g, stress_energy(b2.g, s2.n, s2.p, s2.rho), s2.n)
        good = current_invariance_check(J, J2, pts)
        assert good < 1e-12

        bw, sw = conformal_rescale(bundle, st, fac, ENG,
                                   weights=ConformalWeights(4, w=-4))
        Jw = particle_current(bw.g, stress_energy(bw.g, sw.n, sw.p, sw.rho), sw.n)
        bad = current_invariance_check(J, Jw, pts)
        assert bad > 1e-2  # fails by six orders of magnitude and more

    def test_slice_count_gauge_invariance(self):
        preset, bundle, pts = _setup("flrw-comoving-dust")
        st = preset.state
        fac = seeded_positive_factor(preset.chart, 11)
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        J = particle_current(preset.g, T, st.n)
        b2, s2 = conformal_rescale(bundle, st, fac, ENG)
        J2 = particle_current(b2.g, stress_energy(b2.g, s2.n, s2.p, s2.rho), s2.n)
        spec = SliceSpec(0, 0.0, ((-0.5, 0.5),) * 3)
        n1, _ = number_on_slice(J, spec)
        n2, _ = number_on_slice(J2, spec)
        assert abs(n1 - n2) < 1e-10


class TestPreferredFrame:
    def test_already_incompressible(self):
        preset, bundle, pts = _setup("minkowski-dust-rest")
        spec = SliceSpec(0, 0.0, ((-0.5, 0.5),) * 3)
        fac = preferred_frame(preset.g, preset.state.n, spec, ENG, FAST_FRAME)
        assert np.abs(fac.grid_values).max() < 1e-12
        assert np.abs(fac.ln(pts)).max() < 1e-12

    def test_cosmology_closed_form(self):
        preset, bundle, pts = _setup("flrw-comoving-dust")
        spec = SliceSpec(0, 0.0, ((-0.5, 0.5),) * 3)
        fac = preferred_frame(preset.g, preset.state.n, spec, ENG, FAST_FRAME)
        t = fac.grid_axes[0]
        assert np.abs(fac.grid_values[:, 0, 0, 0] + 0.1 * t).max() < 1e-10
        # spot check by direct integration away from the memo grid
        probe = np.array([[2.345, 0.21, -0.4, 0.11]])
        assert fac.solve_at(probe)[0] == pytest.approx(-0.2345, abs=1e-9)

    def test_transport_residual_sheared(self):
        preset, bundle, pts = _setup("minkowski-sheared")
        spec = SliceSpec(0, 0.0, ((-0.5, 0.5),) * 3)
        fac = preferred_frame(preset.g, preset.state.n, spec, ENG,
                              FrameSolverParams(grid_nodes=11))
        res = transport_residual(fac, preset.g, preset.state.n, ENG)(pts)
        assert np.abs(res).max() < 1e-4
        b2, s2 = conformal_rescale(bundle, preset.state, fac, ENG)
        inc = incompressibility_residual(b2.g, s2.n, ENG)(pts)
        assert np.abs(inc).max() < 1e-4

    def test_closed_form_factor_incompressibility(self):
        preset, bundle, pts = _setup("flrw-comoving-dust")
        closed = preset.meta["closed_frame"](0.0)
        b2, s2 = conformal_rescale(bundle, preset.state, closed, ENG)
        inc = incompressibility_residual(b2.g, s2.n, ENG)(pts)
        assert np.abs(inc).max() < 1e-10

    def test_preferred_covector_scalars(self):
        preset, bundle, pts = _setup("flrw-comoving-dust")
        closed = preset.meta["closed_frame"](0.0)
        b2, s2 = conformal_rescale(bundle, preset.state, closed, ENG)
        A2 = preferred_weyl_covector(b2.g, s2.n, ENG)
        pb = WeylBundle(b2.g, A2, eps_connection(b2.g, A2, ENG))
        zero = constant_scalar(preset.chart, 0.0)
        cs = condition_scalars(pb.g, pb.gamma, pb.A, s2.n, s2.p, s2.rho, zero, ENG)
        assert np.abs(cs.s1(pts)).max() < 1e-10
        assert np.abs(cs.s2(pts)).max() < 1e-10
        assert np.abs(geodesic_defect(pb, s2.n, zero, ENG)(pts)).max() < 1e-10

    def test_reachability_error(self):
        # a characteristic from the box corner drifts out before reaching
        # the seed slice
        preset, bundle, pts = _setup("minkowski-sheared")
        spec = SliceSpec(0, 0.0, ((-0.5, 0.5),) * 3)
        fac = preferred_frame(preset.g, preset.state.n, spec, ENG, FAST_FRAME)
        with pytest.raises(ReachabilityError):
            fac.solve_at(np.array([[-0.49, 0.9995, 0.0, 0.0]]))

    def test_transversality_error(self):
        # the sheared flow is not transversal to constant-x slices
        preset, bundle, pts = _setup("minkowski-sheared")
        from weylfluid.errors import TransversalityError

        spec = SliceSpec(1, 0.0, ((-0.4, 0.4),) * 3)
        with pytest.raises(TransversalityError):
            preferred_frame(preset.g, preset.state.n, spec, ENG, FAST_FRAME)
