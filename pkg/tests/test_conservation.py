"""Stress-energy divergence decomposition, particle current, slice counts
and the condition scalars with their closed forms."""

import numpy as np
import pytest

from weylfluid.catalog import build
from weylfluid.conservation import (
    SliceSpec,
    condition_scalars,
    conservation_condition_residuals,
    current_divergence,
    current_identity_residual,
    decomposition_residuals,
    number_on_slice,
    particle_current,
    raise_indices2,
    weyl_divergence_T,
)
from weylfluid.fluid import fluid_connection, stress_energy
from weylfluid.geometry import DerivativeEngine, constant_scalar, scalar_field

from oracles import (
    covector_transport_contraction,
    divergence_T_fd,
    simpson_1d,
    vector_divergence_fd,
)

ENG = DerivativeEngine()


@pytest.fixture(scope="module")
def flat_phi():
    """Flat chart, dust at rest with reparametrization scalar 0.5."""
    preset = build("minkowski-dust-phi")
    bundle = fluid_connection(preset.g, preset.state.n, preset.state.phi, ENG)
    pts = preset.chart.sample_points(3, 8, seed=0)
    return preset, bundle, pts


@pytest.fixture(scope="module")
def flrw_dust():
    preset = build("flrw-comoving-dust")
    bundle = fluid_connection(preset.g, preset.state.n, preset.state.phi, ENG)
    pts = preset.chart.sample_points(3, 8, seed=1)
    return preset, bundle, pts


class TestDivergenceT:
    def test_flat_constant_fields(self):
        preset = build("minkowski-dust-rest")
        st = preset.state
        bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        pts = preset.chart.sample_points(3, 8, seed=2)
        assert np.abs(weyl_divergence_T(preset.g, bundle.gamma, T, ENG)(pts)).max() == 0.0

    def test_reparametrized_dust_against_oracle(self, flat_phi):
        preset, bundle, pts = flat_phi
        st = preset.state
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        div = weyl_divergence_T(preset.g, bundle.gamma, T, ENG)(pts)
        # frozen from the index-loop oracle: rho (m+1) phi along the flow
        assert np.allclose(div, [2.5, 0.0, 0.0, 0.0], atol=1e-12)
        t_up = raise_indices2(preset.g, T)
        ref = divergence_T_fd(preset.g, bundle.gamma,
                              lambda x: t_up(x[None, :])[0], pts[0])
        assert np.allclose(div[0], ref, atol=1e-9)

    def test_flrw_against_fd_oracle(self, flrw_dust):
        preset, bundle, pts = flrw_dust
        st = preset.state
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        div = weyl_divergence_T(preset.g, bundle.gamma, T, ENG)(pts)
        assert np.abs(div).max() < 1e-12  # conserved preset
        t_up = raise_indices2(preset.g, T)
        ref = divergence_T_fd(preset.g, bundle.gamma,
                              lambda x: t_up(x[None, :])[0], pts[3])
        assert np.allclose(div[3], ref, atol=1e-8)


class TestConditionResiduals:
    def test_rest_dust_vanishes(self):
        preset = build("minkowski-dust-rest")
        st = preset.state
        bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
        pts = preset.chart.sample_points(3, 8, seed=3)
        c1, c2 = conservation_condition_residuals(
            preset.g, bundle.gamma, st.n, st.p, st.rho, st.phi, ENG)
        assert np.abs(c1(pts)).max() == 0.0
        assert np.abs(c2(pts)).max() == 0.0

    def test_reparametrized_dust_value(self, flat_phi):
        # frozen from the index-loop oracle: C1 = rho (m+1) phi = 2.5
        preset, bundle, pts = flat_phi
        st = preset.state
        c1, c2 = conservation_condition_residuals(
            preset.g, bundle.gamma, st.n, st.p, st.rho, st.phi, ENG)
        assert np.allclose(c1(pts), 2.5, atol=1e-13)
        assert np.abs(c2(pts)).max() < 1e-13

    def test_constant_pressure_fluid(self):
        preset = build("minkowski-radiation", {"phi": 0.0})
        st = preset.state
        bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
        pts = preset.chart.sample_points(3, 8, seed=4)
        c1, c2 = conservation_condition_residuals(
            preset.g, bundle.gamma, st.n, st.p, st.rho, st.phi, ENG)
        assert np.abs(c1(pts)).max() < 1e-14
        assert np.abs(c2(pts)).max() < 1e-14

    def test_decomposition_signs(self, flat_phi):
        preset, bundle, pts = flat_phi
        st = preset.state
        flow, ortho = decomposition_residuals(
            preset.g, bundle.gamma, st.n, st.p, st.rho, st.phi, ENG, pts)
        assert np.abs(flow).max() < 1e-12
        assert np.abs(ortho).max() < 1e-12

    def test_decomposition_signs_with_pressure(self):
        preset = build("flrw-radiation")
        st = preset.state
        bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
        pts = preset.chart.sample_points(3, 8, seed=5)
        flow, ortho = decomposition_residuals(
            preset.g, bundle.gamma, st.n, st.p, st.rho, st.phi, ENG, pts)
        assert np.abs(flow).max() < 1e-10
        assert np.abs(ortho).max() < 1e-10


class TestParticleCurrent:
    def test_flat_dust(self):
        preset = build("minkowski-dust-rest")
        st = preset.state
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        J = particle_current(preset.g, T, st.n)
        pts = preset.chart.sample_points(3, 8, seed=6)
        assert np.allclose(J(pts), [-1.0, 0, 0, 0], atol=1e-15)

    def test_vanishing_density(self):
        preset = build("minkowski-dust-rest", {"rho0": 0.0})
        st = preset.state
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        J = particle_current(preset.g, T, st.n)
        assert np.abs(J(preset.chart.sample_points(3, 4, seed=0))).max() == 0.0

    def test_conserved_cosmology_current(self, flrw_dust):
        preset, bundle, pts = flrw_dust
        st = preset.state
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        J = particle_current(preset.g, T, st.n)
        jv = J(pts)
        assert np.abs(jv[:, 0] + 1.0).max() < 1e-12  # - a^3 rho = -1 for all t
        assert np.abs(jv[:, 1:]).max() < 1e-12
        assert np.abs(current_divergence(J, ENG)(pts)).max() < 1e-12

    def test_linear_density_divergence(self):
        preset = build("minkowski-dust-rest")
        chart = preset.chart
        st = preset.state
        rho = scalar_field(chart, lambda c: 1.0 + 0.1 * c[0])
        T = stress_energy(preset.g, st.n, st.p, rho)
        J = particle_current(preset.g, T, st.n)
        pts = chart.sample_points(3, 8, seed=7)
        div = current_divergence(J, ENG)(pts)
        assert np.allclose(div, -0.1, atol=1e-13)
        ref = vector_divergence_fd(J, pts[0])
        assert div[0] == pytest.approx(ref, abs=1e-9)


class TestNumberOnSlice:
    def test_zero_current(self):
        preset = build("minkowski-dust-rest", {"rho0": 0.0})
        st = preset.state
        J = particle_current(preset.g, stress_energy(preset.g, st.n, st.p, st.rho), st.n)
        val, err = number_on_slice(J, SliceSpec(0, 0.0, ((-0.5, 0.5),) * 3))
        assert val == 0.0

    def test_unit_box_dust(self):
        preset = build("minkowski-dust-rest")
        st = preset.state
        J = particle_current(preset.g, stress_energy(preset.g, st.n, st.p, st.rho), st.n)
        val, err = number_on_slice(J, SliceSpec(0, 0.0, ((-0.5, 0.5),) * 3))
        assert val == pytest.approx(-1.0, abs=1e-12)
        assert err < 1e-12

    def test_slice_invariance_conserved_dust(self, flrw_dust):
        preset, bundle, pts = flrw_dust
        st = preset.state
        J = particle_current(preset.g, stress_energy(preset.g, st.n, st.p, st.rho), st.n)
        box = ((-0.5, 0.5),) * 3
        n0, _ = number_on_slice(J, SliceSpec(0, 0.0, box))
        n5, _ = number_on_slice(J, SliceSpec(0, 5.0, box))
        assert abs(n0 - n5) < 1e-8

    def test_quadrature_against_1d_oracle(self):
        # separable current: integral factorizes into 1-d Simpson sums
        preset = build("minkowski-dust-rest")
        chart = preset.chart
        st = preset.state
        rho = scalar_field(chart, lambda c: 1.0 + 0.3 * c[1] * c[1])
        J = particle_current(preset.g, stress_energy(preset.g, st.n, st.p, rho), st.n)
        spec = SliceSpec(0, 0.0, ((-0.5, 0.5), (-0.4, 0.4), (-0.3, 0.3)), nodes=17)
        val, _ = number_on_slice(J, spec)
        xs = np.linspace(-0.5, 0.5, 17)
        ref = -simpson_1d(1.0 + 0.3 * xs**2, -0.5, 0.5) * 0.8 * 0.6
        assert val == pytest.approx(ref, rel=1e-12)

    def test_validation(self):
        preset = build("minkowski-dust-rest")
        st = preset.state
        J = particle_current(preset.g, stress_energy(preset.g, st.n, st.p, st.rho), st.n)
        with pytest.raises(ValueError, match="outside chart interval"):
            number_on_slice(J, SliceSpec(0, 5.0, ((-0.5, 0.5),) * 3))
        with pytest.raises(ValueError, match="exits chart interval"):
            number_on_slice(J, SliceSpec(0, 0.0, ((-2.0, 2.0),) * 3))
        with pytest.raises(ValueError, match="odd"):
            number_on_slice(J, SliceSpec(0, 0.0, ((-0.5, 0.5),) * 3, nodes=10))


class TestConditionScalars:
    def test_dust_reduction(self, flat_phi):
        # pressureless: transport scalar reduces to rho phi
        preset, bundle, pts = flat_phi
        st = preset.state
        cs = condition_scalars(
            preset.g, bundle.gamma, bundle.A, st.n, st.p, st.rho, st.phi, ENG)
        assert np.allclose(cs.s1(pts), 0.5, atol=1e-13)
        assert np.allclose(cs.s2(pts), 0.5, atol=1e-13)
        assert np.abs(cs.s1_residual(pts)).max() < 1e-13
        assert np.abs(cs.s2_residual(pts)).max() < 1e-13

    def test_dust_scaled(self):
        preset = build("minkowski-dust-phi", {"rho0": 2.0})
        st = preset.state
        bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
        pts = preset.chart.sample_points(3, 4, seed=8)
        cs = condition_scalars(
            preset.g, bundle.gamma, bundle.A, st.n, st.p, st.rho, st.phi, ENG)
        assert np.allclose(cs.s1(pts), 1.0, atol=1e-13)  # rho phi = 2 * 0.5

    def test_vanishing_case(self):
        preset = build("minkowski-radiation", {"phi": 0.0})
        st = preset.state
        bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
        pts = preset.chart.sample_points(3, 4, seed=9)
        cs = condition_scalars(
            preset.g, bundle.gamma, bundle.A, st.n, st.p, st.rho, st.phi, ENG)
        assert np.abs(cs.s1(pts)).max() < 1e-14
        assert np.abs(cs.s2(pts)).max() < 1e-14

    def test_pressure_case_value_and_oracle(self):
        # comoving exponential cosmology: metric divergence of the flow is
        # (m-1) H = 0.3; frozen transport-scalar value from the contraction
        # oracle is p*0.3 + (rho + 3p) phi = 0.54
        preset = build("flrw-radiation", {"phi": 0.3})
        chart = preset.chart
        st = preset.state
        p = constant_scalar(chart, 0.2)
        rho = constant_scalar(chart, 1.0)
        bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
        cs = condition_scalars(
            preset.g, bundle.gamma, bundle.A, st.n, p, rho, st.phi, ENG)
        pts = chart.sample_points(3, 4, seed=10)
        assert np.allclose(cs.s1(pts), 0.54, atol=1e-12)
        assert np.abs(cs.s1_residual(pts)).max() < 1e-12

        T = stress_energy(preset.g, st.n, p, rho)
        t_up = raise_indices2(preset.g, T)
        ref = covector_transport_contraction(
            preset.g, bundle.gamma, lambda x: t_up(x[None, :])[0], st.n, pts[0])
        assert cs.s1(pts)[0] == pytest.approx(ref, abs=1e-8)


class TestCurrentIdentity:
    def test_trivial(self):
        preset = build("minkowski-dust-rest")
        st = preset.state
        bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        pts = preset.chart.sample_points(3, 8, seed=11)
        res = current_identity_residual(preset.g, bundle.gamma, bundle.A, T, st.n, ENG)
        assert np.abs(res(pts)).max() == 0.0

    def test_nonconserved_identity_holds(self, flat_phi):
        preset, bundle, pts = flat_phi
        st = preset.state
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        res = current_identity_residual(preset.g, bundle.gamma, bundle.A, T, st.n, ENG)
        assert np.abs(res(pts)).max() < 1e-12

    @pytest.mark.parametrize("name", ["flrw-radiation", "minkowski-radiation",
                                      "schwarzschild-static", "minkowski-sheared"])
    def test_identity_across_presets(self, name):
        preset = build(name)
        st = preset.state
        bundle = fluid_connection(preset.g, st.n, st.phi, ENG)
        T = stress_energy(preset.g, st.n, st.p, st.rho)
        pts = preset.chart.sample_points(3, 8, seed=12)
        res = current_identity_residual(preset.g, bundle.gamma, bundle.A, T, st.n, ENG)
        assert np.abs(res(pts)).max() < 1e-9
