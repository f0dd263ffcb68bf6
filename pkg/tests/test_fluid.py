"""Flow-induced covector, bundle geodesy and the stress-energy tensor."""

import numpy as np
import pytest

from weylfluid.catalog import (
    flrw_chart,
    flrw_metric,
    minkowski_chart,
    minkowski_metric,
    polynomial_scalar,
    comoving_flow,
    sheared_flow,
)
from weylfluid.connections import eps_connection
from weylfluid.fluid import (
    FluidState,
    WeylBundle,
    fluid_connection,
    fluid_covector,
    geodesic_defect,
    stress_energy,
)
from weylfluid.geometry import (
    DerivativeEngine,
    constant_scalar,
    covector_field,
    metric_aux,
)

ENG = DerivativeEngine()


@pytest.fixture(scope="module")
def flat():
    chart = minkowski_chart(4)
    g = minkowski_metric(chart)
    return chart, g, comoving_flow(chart, g), chart.sample_points(3, 8, seed=0)


@pytest.fixture(scope="module")
def cosmo():
    chart = flrw_chart(4)
    g = flrw_metric(chart, "exp", 0.1)
    return chart, g, comoving_flow(chart, g), chart.sample_points(3, 8, seed=1)


class TestFluidCovector:
    def test_geodesic_flow_no_reparametrization(self, flat):
        chart, g, n, pts = flat
        A = fluid_covector(g, n, constant_scalar(chart, 0.0), ENG)
        assert np.abs(A(pts)).max() < 1e-14

    def test_constant_scalar_gives_flow_covector(self, flat):
        chart, g, n, pts = flat
        A = fluid_covector(g, n, constant_scalar(chart, 0.5), ENG)
        assert np.allclose(A(pts), [-0.5, 0.0, 0.0, 0.0], atol=1e-14)

    def test_comoving_cosmology_is_geodesic(self, cosmo):
        chart, g, n, pts = cosmo
        A = fluid_covector(g, n, constant_scalar(chart, 0.0), ENG)
        assert np.abs(A(pts)).max() < 1e-12

    def test_flow_contraction_identity(self, cosmo):
        chart, g, n, pts = cosmo
        rng = np.random.default_rng(4)
        phi = polynomial_scalar(chart, rng, 0.3)
        A = fluid_covector(g, n, phi, ENG)
        contraction = np.einsum("na,na->n", A(pts), n(pts))
        assert np.abs(contraction + phi(pts)).max() < 1e-12


class TestGeodesicDefect:
    def test_flat_rest(self, flat):
        chart, g, n, pts = flat
        phi = constant_scalar(chart, 0.0)
        bundle = fluid_connection(g, n, phi, ENG)
        assert np.abs(geodesic_defect(bundle, n, phi, ENG)(pts)).max() == 0.0

    def test_reparametrized_flow_still_autoparallel(self, flat):
        chart, g, n, pts = flat
        phi = constant_scalar(chart, 0.5)
        bundle = fluid_connection(g, n, phi, ENG)
        assert np.abs(geodesic_defect(bundle, n, phi, ENG)(pts)).max() < 1e-14

    def test_mismatched_bundle_registers_defect(self, flat):
        chart, g, n, pts = flat
        phi0 = constant_scalar(chart, 0.0)
        A = covector_field(chart, lambda c: [0.0 * c[0] - 0.5] + [0.0 * c[0]] * 3)
        wrong = WeylBundle(g, A, eps_connection(g, A, ENG))
        d = geodesic_defect(wrong, n, phi0, ENG)(pts)
        assert np.allclose(d, [0.5, 0.0, 0.0, 0.0], atol=1e-14)

    def test_sheared_family(self, cosmo):
        chart, g, _, pts = cosmo
        n = sheared_flow(chart, g, 0.1)
        for phi in (constant_scalar(chart, 0.0),
                    constant_scalar(chart, 0.4),
                    polynomial_scalar(chart, np.random.default_rng(7), 0.2)):
            bundle = fluid_connection(g, n, phi, ENG)
            assert np.abs(geodesic_defect(bundle, n, phi, ENG)(pts)).max() < 1e-10


class TestStressEnergy:
    def test_dust_components(self, flat):
        chart, g, n, pts = flat
        T = stress_energy(g, n, constant_scalar(chart, 0.0), constant_scalar(chart, 1.0))
        assert np.allclose(T(pts), np.diag([1.0, 0, 0, 0]), atol=1e-15)

    def test_pressure_components(self, flat):
        chart, g, n, pts = flat
        T = stress_energy(g, n, constant_scalar(chart, 0.2), constant_scalar(chart, 1.0))
        assert np.allclose(T(pts), np.diag([1.0, 0.2, 0.2, 0.2]), atol=1e-15)

    def test_flow_eigenvector(self, cosmo):
        chart, g, n, pts = cosmo
        rho = polynomial_scalar(chart, np.random.default_rng(2), 0.5)
        p = constant_scalar(chart, 0.1)
        T = stress_energy(g, n, p, rho)
        data = metric_aux(g, pts)
        tn = np.einsum("nma,nab,nb->nm", data.inv, T(pts), n(pts))
        assert np.abs(tn + rho(pts)[:, None] * n(pts)).max() < 1e-12

    def test_negative_density_warns(self, flat):
        chart, g, n, pts = flat
        state = FluidState(
            n=n, p=constant_scalar(chart, 0.0),
            rho=constant_scalar(chart, -1.0), phi=constant_scalar(chart, 0.0))
        with pytest.warns(UserWarning, match="negative"):
            state.validate(g, pts)
