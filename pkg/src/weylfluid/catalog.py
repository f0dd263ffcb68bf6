"""Built-in spacetimes, fluids and seeded random ingredients used by the
verification suites.

Every preset build is deterministic for a fixed ``(name, parameters, seed)``
triple, validates the type invariants it depends on (Lorentzian signature on
the sampled box, unit flow, finite scalars), and records enough metadata for
the suites to pick sensible slices, rays and closed-form cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import autodiff as ad
from .conformal import ConformalFactor
from .errors import ConstructionError
from .fluid import FluidState
from .geometry import (
    Chart,
    MetricField,
    TensorField,
    constant_scalar,
    covector_field,
    normalize_timelike,
    scalar_field,
    vector_field,
)


@dataclass
class CatalogBundle:
    """A fully validated (chart, metric, fluid) instance plus suite hints."""

    name: str
    chart: Chart
    g: MetricField
    state: FluidState
    meta: dict = dc_field(default_factory=dict)


# -- polynomial ingredients ---------------------------------------------------


def _normalized(chart, coords, j):
    a, b = chart.intervals[j]
    return (coords[j] - 0.5 * (a + b)) / (0.5 * (b - a))


def polynomial_scalar(chart: Chart, rng, scale: float, name: str = "poly") -> TensorField:
    """Degree-<=2 polynomial in box-normalized coordinates with seeded
    coefficients of size ``scale``.

    Evaluated with dense tensor contractions (values and, for dual input,
    the chain-rule gradient) rather than per-term dual arithmetic; these
    polynomials sit inside perturbed metrics, so this path is hot.
    """
    m = chart.dim
    c0 = scale * rng.uniform(-1.0, 1.0)
    c1 = scale * rng.uniform(-1.0, 1.0, m)
    c2 = scale * rng.uniform(-1.0, 1.0, (m, m))
    c2 = 0.5 * (c2 + c2.T)
    mid = np.array([0.5 * (a + b) for a, b in chart.intervals])
    half = np.array([0.5 * (b - a) for a, b in chart.intervals])

    def fn(coords):
        dual_in = isinstance(coords[0], ad.Dual)
        xi = np.stack(
            [(ad.value(coords[j]) - mid[j]) / half[j] for j in range(m)], axis=-1)
        val = c0 + xi @ c1 + np.einsum("ni,ij,nj->n", xi, c2, xi)
        if not dual_in:
            return val
        dpoly = (c1 + 2.0 * xi @ c2) / half  # d(poly)/d(x_j), shape (N, m)
        grad = sum(dpoly[:, j, None] * coords[j].grad for j in range(m))
        return ad.Dual(val, grad)

    return scalar_field(chart, fn, name=name)


def polynomial_covector(chart: Chart, rng, scale: float, name: str = "A(poly)") -> TensorField:
    comps = [polynomial_scalar(chart, rng, scale) for _ in range(chart.dim)]
    return covector_field(chart, lambda coords: [f.fn(coords) for f in comps], name=name)


def seeded_positive_factor(chart: Chart, seed: int, scale: float = 0.2) -> ConformalFactor:
    """Gauge factor ``exp(polynomial)``, strictly positive and dual-capable."""
    rng = np.random.default_rng(seed)
    ln = polynomial_scalar(chart, rng, scale, name=f"lnPhi(seed={seed})")
    return ConformalFactor.from_log(ln)


def perturbed_metric(base: MetricField, eps: float, seed: int) -> MetricField:
    """``g + eps * h`` with a seeded symmetric polynomial perturbation.

    The caller must re-check the signature; construction enforces
    ``eps <= 0.01`` which keeps every catalog chart Lorentzian.
    """
    if eps > 0.01:
        raise ConstructionError("metric perturbations are validated only for eps <= 0.01")
    chart = base.chart
    m = chart.dim
    rng = np.random.default_rng(seed)
    entries = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(i, m):
            entries[i][j] = entries[j][i] = polynomial_scalar(chart, rng, 1.0)

    def fn(coords):
        gc = base.fn(coords)
        h = [[entries[i][j].fn(coords) if j >= i else None for j in range(m)]
             for i in range(m)]
        return [
            [gc[i][j] + eps * (h[i][j] if j >= i else h[j][i]) for j in range(m)]
            for i in range(m)
        ]

    return MetricField(chart, fn, name=f"{base.name}+{eps}h")


# -- metric constructors ------------------------------------------------------


_COORD_NAMES = ("t", "x", "y", "z", "w", "v")


def minkowski_chart(m: int = 4, t_half: float = 1.0, space_half: float = 1.0,
                    margin: float = 0.1) -> Chart:
    names = _COORD_NAMES[:m]
    intervals = [(-t_half, t_half)] + [(-space_half, space_half)] * (m - 1)
    return Chart(names=names, intervals=intervals, margin=margin)


def minkowski_metric(chart: Chart) -> MetricField:
    m = chart.dim

    def fn(coords):
        zero = 0.0 * coords[0]
        return [
            [(zero - 1.0 if i == 0 else zero + 1.0) if i == j else zero for j in range(m)]
            for i in range(m)
        ]

    return MetricField(chart, fn, name="minkowski")


def flrw_chart(m: int = 4, t_interval=(-1.0, 6.0), space_half: float = 1.0,
               margin: float = 0.1) -> Chart:
    names = _COORD_NAMES[:m]
    intervals = [tuple(t_interval)] + [(-space_half, space_half)] * (m - 1)
    return Chart(names=names, intervals=intervals, margin=margin)


def flrw_metric(chart: Chart, kind: str = "exp", param: float = 0.1) -> MetricField:
    """Spatially flat cosmology ``diag(-1, a^2, ..., a^2)`` with scale
    factor ``exp(H t)`` or ``t^q``."""
    m = chart.dim
    if kind == "exp":
        def a2(t):
            return ad.exp((2.0 * param) * t)
    elif kind == "power":
        if chart.intervals[0][0] <= 0.0:
            raise ConstructionError("power-law scale factor needs t > 0 on the chart")
        def a2(t):
            return t ** (2.0 * param)
    else:
        raise ConstructionError(f"unknown scale-factor kind {kind!r}")

    def fn(coords):
        zero = 0.0 * coords[0]
        s = a2(coords[0])
        return [
            [(zero - 1.0 if i == 0 else s) if i == j else zero for j in range(m)]
            for i in range(m)
        ]

    return MetricField(chart, fn, name=f"flrw-{kind}")


def schwarzschild_chart(rs: float = 1.0, t_half: float = 70.0, margin: float = 0.1) -> Chart:
    return Chart(
        names=("t", "r", "th", "ph"),
        intervals=[(-t_half, 2.0 * t_half), (2.5 * rs, 10.0 * rs),
                   (0.25 * math.pi, 0.75 * math.pi), (-0.5, 6.8)],
        margin=margin,
    )


def schwarzschild_metric(chart: Chart, rs: float = 1.0) -> MetricField:
    def fn(coords):
        t, r, th, ph = coords
        zero = 0.0 * t
        f = 1.0 - rs / r
        r2 = r * r
        sin_th = ad.sin(th)
        return [
            [zero - f, zero, zero, zero],
            [zero, 1.0 / f, zero, zero],
            [zero, zero, r2, zero],
            [zero, zero, zero, r2 * sin_th * sin_th],
        ]

    return MetricField(chart, fn, name="schwarzschild")


# -- flow constructors --------------------------------------------------------


def comoving_flow(chart: Chart, g: MetricField) -> TensorField:
    m = chart.dim

    def fn(coords):
        zero = 0.0 * coords[0]
        return [zero + 1.0 if j == 0 else zero for j in range(m)]

    return normalize_timelike(g, vector_field(chart, fn, name="dt"))


def sheared_flow(chart: Chart, g: MetricField, eps: float, profile=None) -> TensorField:
    """``normalize(d_t + eps * s(x) * d_x)`` with a polynomial default
    profile ``s(x) = x``."""
    m = chart.dim

    def fn(coords):
        zero = 0.0 * coords[0]
        s = coords[1] if profile is None else profile(coords)
        return [
            zero + 1.0 if j == 0 else (eps * s if j == 1 else zero) for j in range(m)
        ]

    return normalize_timelike(g, vector_field(chart, fn, name="sheared"))


# -- preset registry ----------------------------------------------------------


def _merge(defaults: dict, parameters: dict, name: str) -> dict:
    params = dict(defaults)
    for key, val in (parameters or {}).items():
        if key not in defaults:
            raise ConstructionError(f"unknown parameter {key!r} for preset {name!r}")
        params[key] = float(val)
    return params


def _flrw_conserved_density(chart, kind, param, rho0):
    m = chart.dim
    expo = float(1 - m)
    if kind == "exp":
        def fn(coords):
            return rho0 * ad.exp((expo * param) * coords[0])
    else:
        def fn(coords):
            return rho0 * coords[0] ** (expo * param)
    return scalar_field(chart, fn, name="rho")


def _flrw_closed_frame(chart, kind, param):
    """Closed-form incompressible-gauge factor for a comoving cosmology:
    ``ln Phi = ln a(t0) - ln a(t)``, parametrized by the seed-slice time."""

    def build(t0: float) -> ConformalFactor:
        if kind == "exp":
            def fn(coords):
                return param * (t0 - coords[0])
        else:
            def fn(coords):
                return param * (math.log(t0) - ad.log(coords[0]))
        return ConformalFactor.from_log(scalar_field(chart, fn, name="lnPhi(frame)"))

    return build


def _build_minkowski(kind: str, parameters: dict, seed: int) -> CatalogBundle:
    defaults = {
        "rest": {"rho0": 1.0, "phi": 0.0, "w": 0.0, "dim": 4},
        "phi": {"rho0": 1.0, "phi": 0.5, "w": 0.0, "dim": 4},
        "radiation": {"rho0": 1.0, "phi": 0.3, "w": 1.0 / 3.0, "dim": 4},
        "sheared": {"rho0": 1.0, "eps": 0.1, "phi_scale": 0.1, "w": 0.0, "dim": 4},
        "perturbed": {"rho0": 1.0, "phi": 0.2, "eps": 0.01, "w": 0.0, "dim": 4},
    }[kind]
    params = _merge(defaults, parameters, f"minkowski-{kind}")
    m = int(params["dim"])
    rng = np.random.default_rng(seed)

    if kind == "sheared":
        chart = minkowski_chart(m, t_half=0.5)
    else:
        chart = minkowski_chart(m)
    g = minkowski_metric(chart)
    if kind == "perturbed":
        g = perturbed_metric(g, params["eps"], seed)

    if kind == "sheared":
        n = sheared_flow(chart, g, params["eps"])
        phi = polynomial_scalar(chart, rng, params["phi_scale"], name="phi")
    else:
        n = comoving_flow(chart, g)
        phi = constant_scalar(chart, params["phi"], name="phi")

    rho = constant_scalar(chart, params["rho0"], name="rho")
    p = constant_scalar(chart, params["w"] * params["rho0"], name="p")
    state = FluidState(n=n, p=p, rho=rho, phi=phi)

    space_box = tuple((-0.5, 0.5) for _ in range(m - 1))
    meta = {
        "conserved": kind == "rest",
        "eos_w": params["w"],
        "slice_axis": 0,
        "slice_values": (0.0, 0.25) if kind == "sheared" else (0.0, 0.5),
        "slice_box": space_box,
        "frame_ready": kind in ("rest", "sheared"),
        "ray_s_max": 0.8 if kind == "sheared" else 1.5,
        "closed_frame": None,
    }
    return CatalogBundle(f"minkowski-{kind}", chart, g, state, meta)


def _build_flrw(kind: str, parameters: dict, seed: int) -> CatalogBundle:
    defaults = {
        "comoving-dust": {"H": 0.1, "rho0": 1.0, "w": 0.0, "dim": 4},
        "radiation": {"H": 0.1, "rho0": 1.0, "w": 1.0 / 3.0, "phi": 0.1, "dim": 4},
        "power-dust": {"q": 2.0 / 3.0, "rho0": 1.0, "w": 0.0, "dim": 4},
    }[kind]
    params = _merge(defaults, parameters, f"flrw-{kind}")
    m = int(params["dim"])

    if kind == "power-dust":
        chart = flrw_chart(m, t_interval=(0.5, 4.0))
        sf_kind, sf_param = "power", params["q"]
        slice_values = (1.0, 3.0)
    else:
        chart = flrw_chart(m)
        sf_kind, sf_param = "exp", params["H"]
        slice_values = (0.0, 5.0)

    g = flrw_metric(chart, sf_kind, sf_param)
    n = comoving_flow(chart, g)
    # the power-law log factor is strongly curved near small t: the flow is
    # comoving, so spend memo nodes on the time axis only
    frame_nodes = (65,) + (9,) * (m - 1) if kind == "power-dust" else None

    if kind == "radiation":
        def rho_fn(coords):
            return params["rho0"] * ad.exp(-0.2 * coords[0])
        rho = scalar_field(chart, rho_fn, name="rho")
        phi = constant_scalar(chart, params["phi"], name="phi")
        conserved = False
    else:
        rho = _flrw_conserved_density(chart, sf_kind, sf_param, params["rho0"])
        phi = constant_scalar(chart, 0.0, name="phi")
        conserved = True

    def p_fn(coords):
        return params["w"] * rho.fn(coords)

    p = scalar_field(chart, p_fn, name="p")
    state = FluidState(n=n, p=p, rho=rho, phi=phi)
    meta = {
        "conserved": conserved,
        "eos_w": params["w"],
        "slice_axis": 0,
        "slice_values": slice_values,
        "slice_box": tuple((-0.5, 0.5) for _ in range(m - 1)),
        "frame_ready": True,
        "frame_nodes": frame_nodes,
        "ray_s_max": 1.5,
        "closed_frame": _flrw_closed_frame(chart, sf_kind, sf_param),
    }
    return CatalogBundle(f"flrw-{kind}", chart, g, state, meta)


def _build_schwarzschild(parameters: dict, seed: int) -> CatalogBundle:
    params = _merge({"rs": 1.0, "rho0": 1.0, "phi": 0.0, "w": 0.0}, parameters, "schwarzschild-static")
    rs = params["rs"]
    if rs <= 0:
        raise ConstructionError("Schwarzschild radius must be positive")
    chart = schwarzschild_chart(rs)
    g = schwarzschild_metric(chart, rs)
    n = comoving_flow(chart, g)
    state = FluidState(
        n=n,
        p=constant_scalar(chart, params["w"] * params["rho0"], name="p"),
        rho=constant_scalar(chart, params["rho0"], name="rho"),
        phi=constant_scalar(chart, params["phi"], name="phi"),
    )
    meta = {
        "conserved": False,
        "eos_w": params["w"],
        "slice_axis": 0,
        "slice_values": (10.0, 30.0),
        "slice_box": ((3.0, 9.0), (0.9, 2.2), (0.5, 5.5)),
        "frame_ready": False,
        "ray_s_max": 2.0,
        "closed_frame": None,
        "rs": rs,
    }
    return CatalogBundle("schwarzschild-static", chart, g, state, meta)


_BUILDERS = {
    "minkowski-dust-rest": lambda p, s: _build_minkowski("rest", p, s),
    "minkowski-dust-phi": lambda p, s: _build_minkowski("phi", p, s),
    "minkowski-radiation": lambda p, s: _build_minkowski("radiation", p, s),
    "minkowski-sheared": lambda p, s: _build_minkowski("sheared", p, s),
    "minkowski-perturbed": lambda p, s: _build_minkowski("perturbed", p, s),
    "minkowski3-dust": lambda p, s: _build_minkowski("phi", {**(p or {}), "dim": 3, "phi": 0.4}, s),
    "flrw-comoving-dust": lambda p, s: _build_flrw("comoving-dust", p, s),
    "flrw-radiation": lambda p, s: _build_flrw("radiation", p, s),
    "flrw-power-dust": lambda p, s: _build_flrw("power-dust", p, s),
    "schwarzschild-static": _build_schwarzschild,
}


def preset_names() -> tuple:
    return tuple(sorted(_BUILDERS))


_PRESET_DEFAULTS = {
    "minkowski-dust-rest": {"rho0", "phi", "w", "dim"},
    "minkowski-dust-phi": {"rho0", "phi", "w", "dim"},
    "minkowski-radiation": {"rho0", "phi", "w", "dim"},
    "minkowski-sheared": {"rho0", "eps", "phi_scale", "w", "dim"},
    "minkowski-perturbed": {"rho0", "phi", "eps", "w", "dim"},
    "minkowski3-dust": {"rho0", "phi", "w", "dim"},
    "flrw-comoving-dust": {"H", "rho0", "w", "dim"},
    "flrw-radiation": {"H", "rho0", "w", "phi", "dim"},
    "flrw-power-dust": {"q", "rho0", "w", "dim"},
    "schwarzschild-static": {"rs", "rho0", "phi", "w"},
}


def validate_parameters(name: str, parameters: dict) -> None:
    """Reject unknown presets or parameter keys without building anything."""
    if name not in _BUILDERS:
        raise ConstructionError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        )
    allowed = _PRESET_DEFAULTS[name]
    for key in parameters or {}:
        if key not in allowed:
            raise ConstructionError(
                f"unknown parameter {key!r} for preset {name!r} "
                f"(allowed: {', '.join(sorted(allowed))})"
            )


def build(name: str, parameters: dict = None, seed: int = 0) -> CatalogBundle:
    """Construct and validate a catalog preset.

    Deterministic for fixed ``(name, parameters, seed)``.  Raises
    :class:`ConstructionError` for unknown names or invalid parameters and
    propagates signature/timelike failures from validation.
    """
    if name not in _BUILDERS:
        raise ConstructionError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        )
    bundle = _BUILDERS[name](parameters, seed)
    bundle.name = name
    pts = bundle.chart.sample_points(per_axis=3, extra=32, seed=seed)
    try:
        bundle.g.check_signature(pts)
    except Exception as exc:
        raise ConstructionError(f"preset {name!r} failed signature validation: {exc}") from exc
    bundle.state.validate(bundle.g, pts)
    return bundle


def verification_matrix() -> tuple:
    """The preset instances swept by the acceptance checks."""
    return (
        "minkowski-dust-rest",
        "minkowski-dust-phi",
        "minkowski-radiation",
        "minkowski-sheared",
        "minkowski-perturbed",
        "minkowski3-dust",
        "flrw-comoving-dust",
        "flrw-radiation",
        "flrw-power-dust",
        "schwarzschild-static",
    )


# -- initial-data helpers -----------------------------------------------------


def null_tangent(g: MetricField, x0, spatial) -> np.ndarray:
    """Project a spatial direction to a future-pointing null tangent at a
    point by solving the quadratic ``g(k, k) = 0`` for the time component."""
    x0 = np.asarray(x0, dtype=float)
    gv = g(x0[None, :])[0]
    d = np.zeros(g.chart.dim)
    d[1:] = np.asarray(spatial, dtype=float)
    a = gv[0, 0]
    b = gv[0, 1:] @ d[1:]
    c = d[1:] @ gv[1:, 1:] @ d[1:]
    disc = b * b - a * c
    k0 = (-b - math.sqrt(disc)) / a
    if k0 < 0:
        k0 = (-b + math.sqrt(disc)) / a
    return np.concatenate([[k0], d[1:]])


def circular_orbit_init(bundle: CatalogBundle, r: float):
    """Timelike circular-orbit initial data in the equatorial plane of the
    static spherically symmetric preset.  Returns ``(x0, v0, proper_period)``.
    """
    rs = bundle.meta.get("rs")
    if rs is None:
        raise ConstructionError("circular orbits are defined for the Schwarzschild preset")
    omega = math.sqrt(0.5 * rs / r**3)
    ut = 1.0 / math.sqrt(1.0 - rs / r - r * r * omega * omega)
    x0 = np.array([0.0, r, 0.5 * math.pi, 0.0])
    v0 = np.array([ut, 0.0, 0.0, ut * omega])
    proper_period = 2.0 * math.pi / omega / ut
    return x0, v0, proper_period
