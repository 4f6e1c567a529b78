"""Partition functions, thermal Wigner fields and thermal averages.

Every method reduces to phase-space quadrature of a thermal weight w:

* grid methods (``classical``, ``closed``, ``short-time``,
  ``metaplectic-local``) integrate w(x) O(x) directly over x;
* midpoint methods (``normal-form``, ``double-sc``) integrate over the
  trajectory midpoint X with the volume-absorbing amplitude,

      integral dX |det dx/dX|^(1/2) exp(S^i(x(X))/hbar) O(x(X)),

  which needs no root search and no caustic handling.

Two partition conventions are carried: the phase-space integral Z-tilde and
the trace-normalized Z = (2 pi hbar)^(-N) Z-tilde.  Averages are ratios and
do not depend on the convention.

Quadrature is trapezoidal on an auto-sized midpoint window (the integrand's
own decay, bounded by beta H <= beta H_min + 40), refined by doubling until
the requested relative change is met; integrand evaluations are data
parallel and reduced in a fixed order, so results do not depend on the
worker count.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import closed_forms as cf
from . import models as mdl
from . import normal_form as nf
from .double_dynamics import IntegratorOptions, sc_weyl_batch
from .exceptions import QuadratureError
from .fields import GridSpec, ThermalField
from .parallel import chunked_map

__all__ = [
    "GRID_METHODS",
    "MIDPOINT_METHODS",
    "METHODS",
    "Observable",
    "evaluate_observable",
    "valid_methods",
    "QuadratureSpec",
    "PartitionResult",
    "AverageResult",
    "partition_weyl",
    "thermal_average",
    "energy_variance_and_heat_capacity",
    "double_beta_partition",
    "lopsided_energy",
    "thermal_wigner_field",
    "sc_weyl_cloud",
]

GRID_METHODS = ("classical", "closed", "short-time", "metaplectic-local")
MIDPOINT_METHODS = ("normal-form", "double-sc")
METHODS = GRID_METHODS + MIDPOINT_METHODS

BOUNDARY_FRACTION_LIMIT = 1e-10


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class Observable:
    """Weyl observable O(x): identity, energies, projectors, monomials.

    ``hamiltonian_squared`` is the Weyl symbol of H-hat squared through
    O(hbar^2): H(x)^2 - (hbar^2/4) det H_x (exact for quadratic models).
    """

    kind: str
    payload: tuple = ()

    KINDS = (
        "identity",
        "hamiltonian",
        "hamiltonian_squared",
        "coherent",
        "polynomial_pq",
        "momentum_power",
        "position_power",
    )

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown observable kind {self.kind!r}")

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def hamiltonian(cls):
        return cls("hamiltonian")

    @classmethod
    def hamiltonian_squared(cls):
        return cls("hamiltonian_squared")

    @classmethod
    def coherent(cls, centre):
        return cls("coherent", tuple(float(c) for c in centre))

    @classmethod
    def polynomial_pq(cls, terms):
        return cls("polynomial_pq", tuple((float(c), int(i), int(j)) for c, i, j in terms))

    @classmethod
    def momentum_power(cls, k):
        return cls("momentum_power", (int(k),))

    @classmethod
    def position_power(cls, k):
        return cls("position_power", (int(k),))


def evaluate_observable(obs, model, x, params):
    """O(x) on a batch of phase-space points."""
    x = np.asarray(x, dtype=float)
    if obs.kind == "identity":
        return np.ones(x.shape[:-1])
    if obs.kind == "hamiltonian":
        return model.value(x)
    if obs.kind == "hamiltonian_squared":
        h = model.value(x)
        hess = np.asarray(model.hessian_at(x), dtype=float)
        det = hess[..., 0, 0] * hess[..., 1, 1] - hess[..., 0, 1] * hess[..., 1, 0]
        return h * h - 0.25 * params.hbar**2 * det
    if obs.kind == "coherent":
        return cf.coherent_observable(np.array(obs.payload), x, hbar=params.hbar)
    if obs.kind == "polynomial_pq":
        poly = mdl.PolynomialPQ(terms=obs.payload)
        return poly.value(x)
    if obs.kind == "momentum_power":
        return x[..., 0] ** obs.payload[0]
    if obs.kind == "position_power":
        return x[..., 1] ** obs.payload[0]
    raise ValueError(f"unknown observable kind {obs.kind!r}")


def valid_methods(model):
    """Methods applicable to a model variant."""
    methods = ["classical", "short-time", "metaplectic-local", "double-sc"]
    if isinstance(model, mdl.Quadratic):
        methods.insert(1, "closed")
    if isinstance(model, (mdl.NormalForm, mdl.Kerr)):
        methods.insert(-1, "normal-form")
    return tuple(methods)


def _check_method(model, method):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if method not in valid_methods(model):
        raise ValueError(
            f"method {method!r} is not valid for a {type(model).__name__} model; "
            f"valid methods: {', '.join(valid_methods(model))}"
        )


# ---------------------------------------------------------------------------
# integrand factories: points -> (columns, n_fallback, n_diverged)


def _grid_point_fn(model, params, method, observables, opts):
    def fn(points):
        n_fallback = 0
        if method == "classical":
            w = cf.classical_weight(model, points, params)
        elif method == "closed":
            w = cf.metaplectic_thermal(points, params, model.matrix)
        elif method == "short-time":
            w = cf.short_time_thermal(model, points, params)
        else:  # metaplectic-local
            w, n_fallback = cf.local_metaplectic_values(model, points, params)
        cols = [w] + [w * evaluate_observable(o, model, points, params) for o in observables]
        return np.stack(cols, axis=-1), n_fallback, 0

    return fn


def _midpoint_point_fn(model, params, method, observables, opts, workers=None):
    hbar = params.hbar
    theta = params.theta

    if method == "normal-form":

        def fn(points):
            centres, values = nf.nf_thermal_weyl(model, points, theta, hbar=hbar)
            amp = values * nf.nf_jacobian(model, points, theta)  # |jac|^{1/2} e^{S/hbar}
            cols = [amp] + [
                amp * evaluate_observable(o, model, centres, params) for o in observables
            ]
            return np.stack(cols, axis=-1), 0, 0

        return fn

    def fn(points):
        centres, values, ok, res = sc_weyl_batch(
            model, points, theta, hbar=hbar, opts=opts, workers=workers
        )
        # values already carry |det|^{-1/2}; multiply back to |det|^{+1/2}
        amp = np.where(ok, values * np.abs(res.jacobian_det), 0.0)
        safe_centres = np.where(ok[:, None], centres, 0.0)
        cols = [amp]
        for o in observables:
            cols.append(amp * evaluate_observable(o, model, safe_centres, params))
        return np.stack(cols, axis=-1), 0, int(np.count_nonzero(~ok))

    return fn


# ---------------------------------------------------------------------------
# quadrature driver


@dataclass(frozen=True)
class QuadratureSpec:
    """Midpoint-grid quadrature: bounds (else auto), base count, refinement."""

    bounds: tuple | None = None  # (pmin, pmax, qmin, qmax)
    base_n: int = 33
    max_levels: int = 5
    rtol: float = 1e-7


@dataclass(frozen=True)
class IntegralResult:
    values: np.ndarray
    error: float
    n_points: int
    n_diverged: int
    n_fallback: int
    bounds: tuple
    levels: int
    boundary_fraction: float = 0.0


def _pilot_bounds(point_fn, centre, radii, decades=7, samples=48):
    """Shrink an energy-window box to the integrand's own decay radius."""
    w0 = float(point_fn(centre[None, :])[0][0, 0])
    if not np.isfinite(w0) or w0 <= 0:
        return radii
    target = math.log(w0) - cf.WINDOW_LOG_DROP - 3.0
    out = []
    for axis, r_box in enumerate(radii):
        direction = np.zeros(2)
        direction[axis] = 1.0
        scales = r_box * (10.0 ** (-decades * np.arange(samples) / (samples - 1)))
        pts = np.concatenate(
            [centre + scales[:, None] * direction, centre - scales[:, None] * direction]
        )
        vals = point_fn(pts)[0][:, 0]
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(vals))
        keep = np.concatenate([scales, scales])[logs >= target]
        out.append(min(r_box, 1.3 * float(np.max(keep))) if keep.size else r_box)
    return out


def _trapezoid_level(point_fn, bounds, n, workers):
    pmin, pmax, qmin, qmax = bounds
    p_axis = np.linspace(pmin, pmax, n)
    q_axis = np.linspace(qmin, qmax, n)
    wp = np.full(n, p_axis[1] - p_axis[0])
    wp[0] *= 0.5
    wp[-1] *= 0.5
    wq = np.full(n, q_axis[1] - q_axis[0])
    wq[0] *= 0.5
    wq[-1] *= 0.5
    pp, qq = np.meshgrid(p_axis, q_axis, indexing="ij")
    points = np.stack([pp.ravel(), qq.ravel()], axis=-1)
    w2 = np.outer(wp, wq).ravel()

    def run(start, stop):
        cols, n_fb, n_div = point_fn(points[start:stop])
        return cols, np.array([n_fb]), np.array([n_div])

    cols, n_fb, n_div = chunked_map(run, points.shape[0], workers=workers)
    integrals = np.sum(cols * w2[:, None], axis=0)
    # boundary ring contribution of the weight column
    ring = np.zeros(n * n, dtype=bool).reshape(n, n)
    ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True
    ring = ring.ravel()
    boundary = float(np.sum(np.abs(cols[ring, 0]) * w2[ring]))
    return integrals, boundary, int(np.sum(n_fb)), int(np.sum(n_div)), points.shape[0]


def _integrate(point_fn, model, params, spec, workers=None):
    spec = spec or QuadratureSpec()
    if spec.bounds is not None:
        centre = np.array(
            [0.5 * (spec.bounds[0] + spec.bounds[1]), 0.5 * (spec.bounds[2] + spec.bounds[3])]
        )
        radii = [0.5 * (spec.bounds[1] - spec.bounds[0]), 0.5 * (spec.bounds[3] - spec.bounds[2])]
    else:
        centre, rp, rq = cf.energy_window_box(model, params)
        radii = _pilot_bounds(point_fn, centre, [rp, rq])

    for expand in range(3):
        bounds = (
            float(centre[0] - radii[0]),
            float(centre[0] + radii[0]),
            float(centre[1] - radii[1]),
            float(centre[1] + radii[1]),
        )
        n = spec.base_n
        prev = None
        total_div = total_fb = total_pts = 0
        fraction = 0.0
        for level in range(spec.max_levels):
            integrals, boundary, n_fb, n_div, n_pts = _trapezoid_level(
                point_fn, bounds, n, workers
            )
            total_div += n_div
            total_fb += n_fb
            total_pts += n_pts
            fraction = boundary / max(abs(integrals[0]), 1e-300)
            if fraction > BOUNDARY_FRACTION_LIMIT and expand < 2:
                break  # window too small; double it
            if prev is not None:
                scale = np.maximum(np.abs(integrals), abs(integrals[0]))
                diff = np.abs(integrals - prev)
                if np.all(diff <= spec.rtol * np.maximum(scale, 1e-300)):
                    return IntegralResult(
                        values=integrals,
                        error=float(np.max(diff)),
                        n_points=total_pts,
                        n_diverged=total_div,
                        n_fallback=total_fb,
                        bounds=bounds,
                        levels=level + 1,
                        boundary_fraction=fraction,
                    )
            prev = integrals
            n = 2 * n - 1
        else:
            raise QuadratureError(
                f"quadrature did not converge to rtol {spec.rtol} "
                f"within {spec.max_levels} levels on window {bounds}",
                last_values=(prev.tolist() if prev is not None else None, integrals.tolist()),
            )
        radii = [2.0 * r for r in radii]
    raise QuadratureError("window doubling loop exhausted", last_values=None)


def _point_fn_for(model, params, method, observables, opts, workers=None):
    if method in GRID_METHODS:
        return _grid_point_fn(model, params, method, observables, opts)
    return _midpoint_point_fn(model, params, method, observables, opts, workers=workers)


# ---------------------------------------------------------------------------
# public operations


@dataclass(frozen=True)
class PartitionResult:
    z_tilde: float
    z: float
    error: float
    n_diverged: int
    n_fallback: int
    n_points: int


@dataclass(frozen=True)
class AverageResult:
    value: float
    z_tilde: float
    error: float
    n_diverged: int
    n_fallback: int


def partition_weyl(model, params, method, spec=None, opts=None, workers=None):
    """Phase-space partition function Z-tilde by the chosen method.

    Also reports the trace-normalized Z = (2 pi hbar)^(-N) Z-tilde.
    """
    _check_method(model, method)
    opts = opts or IntegratorOptions()
    point_fn = _point_fn_for(model, params, method, [], opts, workers)
    res = _integrate(point_fn, model, params, spec, workers=workers)
    z_tilde = float(res.values[0])
    return PartitionResult(
        z_tilde=z_tilde,
        z=z_tilde / (2.0 * math.pi * params.hbar) ** model.dof,
        error=res.error,
        n_diverged=res.n_diverged,
        n_fallback=res.n_fallback,
        n_points=res.n_points,
    )


def thermal_average(model, params, method, observable, spec=None, opts=None, workers=None):
    """Thermal average of an observable: (1/Z-tilde) integral of w O."""
    _check_method(model, method)
    opts = opts or IntegratorOptions()
    point_fn = _point_fn_for(model, params, method, [observable], opts, workers)
    res = _integrate(point_fn, model, params, spec, workers=workers)
    z_tilde, numer = float(res.values[0]), float(res.values[1])
    return AverageResult(
        value=numer / z_tilde,
        z_tilde=z_tilde,
        error=res.error / abs(z_tilde),
        n_diverged=res.n_diverged,
        n_fallback=res.n_fallback,
    )


def energy_variance_and_heat_capacity(
    model, params, method, spec=None, opts=None, workers=None, k_b=1.0
):
    """(<H>, var H, C) with C = k_B beta^2 var H.

    The squared-energy observable is the Weyl symbol of H-hat squared
    through O(hbar^2); see :class:`Observable`.
    """
    _check_method(model, method)
    opts = opts or IntegratorOptions()
    observables = [Observable.hamiltonian(), Observable.hamiltonian_squared()]
    point_fn = _point_fn_for(model, params, method, observables, opts, workers)
    res = _integrate(point_fn, model, params, spec, workers=workers)
    z_tilde, first, second = (float(v) for v in res.values)
    mean = first / z_tilde
    variance = second / z_tilde - mean**2
    return mean, variance, k_b * params.beta**2 * variance


def double_beta_partition(model, params, beta1, beta2, form, spec=None, workers=None):
    """Two-temperature partition function splitting the linear exponent part.

    Both local forms factor as w_form(x; beta2) = exp(-beta2 H(x)) * rest, so
    Z(beta1, beta2) = integral exp(-(beta1 - beta2) H) w_form(beta2); at
    beta1 = beta2 this is exactly the corresponding one-temperature integral.
    """
    if form not in ("short-time", "metaplectic"):
        raise ValueError(f"form must be 'short-time' or 'metaplectic', got {form!r}")
    params2 = cf.ThermalParams(beta=beta2, hbar=params.hbar)

    def point_fn(points):
        n_fallback = 0
        if form == "short-time":
            w = cf.short_time_thermal(model, points, params2)
        else:
            w, n_fallback = cf.local_metaplectic_values(model, points, params2)
        h = model.value(points)
        col = w * np.exp(-(beta1 - beta2) * h)
        return col[:, None], n_fallback, 0

    res = _integrate(point_fn, model, params, spec, workers=workers)
    return float(res.values[0])


def lopsided_energy(model, params, form, spec=None, workers=None, step_scale=1e-5):
    """<H> estimate from -d log Z(beta1, beta)/d beta1 at beta1 = beta.

    Central finite difference with step 1e-5 beta.
    """
    beta = params.beta
    delta = step_scale * beta
    z_plus = double_beta_partition(model, params, beta + delta, beta, form, spec, workers)
    z_minus = double_beta_partition(model, params, beta - delta, beta, form, spec, workers)
    return -(math.log(z_plus) - math.log(z_minus)) / (2.0 * delta)


# ---------------------------------------------------------------------------
# fields


def sc_weyl_cloud(
    model,
    params,
    target_radius,
    n_rays=160,
    n_scan=80,
    n_radii=160,
    opts=None,
    workers=None,
):
    """Scattered (centre, value) samples of the double-SC thermal symbol.

    Midpoints are laid on rays; each ray's midpoint radii are chosen so the
    image centres x(X) cover radii up to ``target_radius`` roughly uniformly
    (the image radius grows monotonically along a ray for single-minimum
    models).  Returns (points, values, n_diverged).
    """
    opts = opts or IntegratorOptions()
    theta = params.theta
    angles = np.linspace(0.0, 2.0 * math.pi, n_rays, endpoint=False)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)

    # outer midpoint bound per ray from the energy window
    centre, rp, rq = cf.energy_window_box(model, params)
    r_box = np.sqrt((rp * dirs[:, 0]) ** 2 + (rq * dirs[:, 1]) ** 2)
    r_box = np.minimum(r_box, max(rp, rq))

    # monotone radial map samples: geometric ladder of midpoint radii per ray
    decades = 8.0
    ladder = 10.0 ** (-decades * np.arange(n_scan) / (n_scan - 1))
    t_scan = r_box[:, None] * ladder[None, :]
    pts_scan = t_scan[..., None] * dirs[:, None, :]
    centres, values, ok, _ = sc_weyl_batch(
        model, pts_scan.reshape(-1, 2), theta, hbar=params.hbar, opts=opts, workers=workers
    )
    n_div = int(np.count_nonzero(~ok))
    r_img = np.where(ok, np.linalg.norm(centres, axis=-1), np.nan).reshape(n_rays, n_scan)

    # per-ray inverse of the radial map at uniform target image radii
    targets = np.linspace(0.0, target_radius, n_radii + 1)[1:]
    chosen = np.full((n_rays, n_radii), np.nan)
    for i in range(n_rays):
        good = np.isfinite(r_img[i])
        t_good = t_scan[i][good][::-1]  # ascending midpoint radius
        r_good = r_img[i][good][::-1]
        if t_good.size < 2:
            continue
        r_mono = np.maximum.accumulate(r_good)
        t_aug = np.concatenate([[0.0], t_good])
        r_aug = np.concatenate([[0.0], r_mono])
        reachable = targets <= r_aug[-1]
        chosen[i, reachable] = np.interp(targets[reachable], r_aug, t_aug)

    mask = np.isfinite(chosen)
    midpoints = chosen[mask][:, None] * np.repeat(dirs, n_radii, axis=0)[mask.ravel()]
    midpoints = np.concatenate([[np.zeros(2)], midpoints])
    centres, values, ok, _ = sc_weyl_batch(
        model, midpoints, theta, hbar=params.hbar, opts=opts, workers=workers
    )
    n_div += int(np.count_nonzero(~ok))
    return centres[ok], values[ok], n_div


def thermal_wigner_field(
    model,
    params,
    method,
    grid=None,
    spec=None,
    opts=None,
    workers=None,
    cloud_rays=160,
    cloud_scan=80,
    cloud_radii=160,
):
    """Normalized thermal Wigner function on a rectangular grid.

    Grid methods evaluate the thermal weight pointwise.  The normal-form
    method inverts its radial midpoint map so values land exactly on the
    grid nodes.  The double-SC method produces values at image centres
    x(X) and resamples them to the grid by scattered linear interpolation.
    """
    _check_method(model, method)
    opts = opts or IntegratorOptions()
    if grid is None:
        grid = cf.auto_grid(model, params)
    meta = {}
    if method in GRID_METHODS:
        point_fn = _grid_point_fn(model, params, method, [], opts)
        cols, n_fb, _ = point_fn(grid.points())
        values = cols[:, 0]
        meta["n_fallback"] = n_fb
    elif method == "normal-form":
        points = grid.points()
        radius = np.linalg.norm(points, axis=-1)
        safe = np.maximum(radius, 1e-300)
        t = nf.nf_preimage_radius(model, params.theta, safe)
        midpoints = (t / safe)[:, None] * points
        _, values = nf.nf_thermal_weyl(model, midpoints, params.theta, hbar=params.hbar)
    else:  # double-sc
        corner = max(
            abs(grid.pmin), abs(grid.pmax), abs(grid.qmin), abs(grid.qmax)
        ) * math.sqrt(2.0)
        points_cloud, values_cloud, n_div = sc_weyl_cloud(
            model,
            params,
            target_radius=1.05 * corner,
            n_rays=cloud_rays,
            n_scan=cloud_scan,
            n_radii=cloud_radii,
            opts=opts,
            workers=workers,
        )
        from scipy.interpolate import griddata

        values = griddata(
            points_cloud, values_cloud, grid.points(), method="linear", fill_value=0.0
        )
        meta["n_diverged"] = n_div
        meta["n_cloud"] = int(points_cloud.shape[0])
    field = ThermalField(
        grid=grid,
        values=values,
        method=method,
        beta=params.beta,
        hbar=params.hbar,
        normalized=False,
        meta=meta,
    )
    return field.normalize()
