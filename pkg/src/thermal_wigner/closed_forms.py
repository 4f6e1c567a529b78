"""Closed-form and locally-approximate thermal Weyl functions.

The non-normalized Weyl symbol of exp(-beta H-hat) is exact in closed form
for quadratic Hamiltonians,

    exp(-beta H)(x | M) = sech(Omega theta / 2)
                          * exp[-tanh(Omega theta / 2) (x . M x) / (hbar Omega)],

with theta = hbar * beta and Omega^2 = det M.  For general Hamiltonians two
local approximations are provided: the third-order short-time form and the
local metaplectic form (the quadratic form above built from the local
Hessian, displaced to the centre of curvature and classically attenuated).

Sign convention for the short-time cubic term: continuing the centre action
to imaginary time turns tan into tanh, whose series is u - u^3/3 + ...; the
cubic correction therefore enters the thermal exponent with the opposite
sign to its real-time counterpart:

    log exp(-beta H)(x) = -beta H(x) + (hbar^2 beta^3 / 24) xdot . H_x xdot
                          - log(1 + (hbar beta)^2 det H_x / 8) + O(theta^5),

with xdot = J grad H(x) the real-time velocity.  The harmonic oscillator
reproduces the tanh series of the exact symbol term by term.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import models
from .exceptions import HyperbolicFormError, SingularHessianError, ValidityError
from .fields import GridSpec
from .phase_space import apply_j, as_phase_point

__all__ = [
    "ThermalParams",
    "classical_weight",
    "ho_thermal",
    "metaplectic_thermal",
    "short_time_thermal",
    "short_time_thermal_curvature",
    "local_metaplectic_thermal",
    "local_metaplectic_values",
    "fock_wigner",
    "coherent_observable",
    "auto_grid",
    "energy_window_box",
]

MAX_LAGUERRE_ORDER = 200
#: log-weight drop defining auto-sized windows: beta H <= beta H_min + 40
WINDOW_LOG_DROP = 40.0


@dataclass(frozen=True)
class ThermalParams:
    """Inverse temperature and Planck constant; theta = hbar * beta."""

    beta: float
    hbar: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def theta(self):
        return self.hbar * self.beta


def classical_weight(model, x, params):
    """Classical Boltzmann weight exp(-beta H(x))."""
    return np.exp(-params.beta * models.eval_model(model, x))


def ho_thermal(x, params, omega):
    """Exact thermal Weyl exponential of the isotropic oscillator (N = 1)."""
    x = as_phase_point(x, dof=1)
    u = 0.5 * omega * params.theta
    r2 = np.sum(x * x, axis=-1)
    return np.exp(-np.tanh(u) * r2 / params.hbar) / np.cosh(u)


def _block_pairs(matrix, dof):
    """Split a 2N x 2N matrix into per-mode 2x2 blocks in (p_i, q_i) pairs.

    Returns None unless all coupling is within pairs (i, N+i).
    """
    n = dof
    blocks = []
    mask = np.zeros_like(matrix, dtype=bool)
    for i in range(n):
        idx = np.ix_([i, n + i], [i, n + i])
        blocks.append(matrix[idx])
        mask[idx] = True
    if np.any(np.abs(matrix[~mask]) > 1e-14 * max(1.0, np.max(np.abs(matrix)))):
        return None
    return blocks


def metaplectic_thermal(x, params, hmat):
    """Thermal Weyl symbol generated by the quadratic Hamiltonian x . hmat x / 2.

    Requires det hmat > 0 for N = 1 (elliptic form); the Omega -> 0 limit
    (free particle) is taken by series, recovering exp(-beta H).  For N > 1
    the matrix must be block-diagonal in single-mode (p_i, q_i) blocks, and
    the result is the product over modes.
    """
    hmat = np.asarray(hmat, dtype=float)
    dof = hmat.shape[0] // 2
    x = as_phase_point(x, dof=dof)
    if dof > 1:
        blocks = _block_pairs(hmat, dof)
        if blocks is None:
            raise ValueError(
                "N > 1 metaplectic form needs a matrix block-diagonal in single-mode pairs"
            )
        result = np.ones(x.shape[:-1])
        for i, block in enumerate(blocks):
            xi = x[..., (i, dof + i)]
            result = result * metaplectic_thermal(xi, params, block)
        return result
    det = float(np.linalg.det(hmat))
    if det < 0:
        raise HyperbolicFormError(
            f"quadratic form is hyperbolic (det = {det:.6g}); thermal symbol undefined"
        )
    omega = math.sqrt(det)
    theta = params.theta
    quad = np.einsum("...i,ij,...j->...", x, hmat, x)
    if omega * theta < 1e-6:
        # tanh(Omega theta/2)/Omega -> theta/2: free-particle / flat limit
        return np.exp(-0.5 * theta * quad / params.hbar) / np.cosh(0.5 * omega * theta)
    u = 0.5 * omega * theta
    return np.exp(-np.tanh(u) * quad / (params.hbar * omega)) / np.cosh(u)


def short_time_thermal(model, x, params):
    """Third-order short-time approximation of the thermal Weyl symbol (N = 1).

    Real for elliptic and hyperbolic local Hessians alike.  Raises
    :class:`ValidityError` once the prefactor denominator
    1 + (hbar beta)^2 det H_x / 8 is no longer positive.
    """
    if model.dof != 1:
        raise ValueError("short-time form supports a single degree of freedom")
    x = as_phase_point(x, dof=1)
    theta = params.theta
    h_val = model.value(x)
    grad = model.gradient_at(x)
    hess = np.asarray(model.hessian_at(x), dtype=float)
    det = hess[..., 0, 0] * hess[..., 1, 1] - hess[..., 0, 1] * hess[..., 1, 0]
    denom = 1.0 + theta**2 * det / 8.0
    if np.any(denom <= 0):
        worst = float(np.min(denom))
        par = 0.5 * theta * np.sqrt(np.max(np.abs(det)))
        raise ValidityError(
            f"short-time prefactor denominator {worst:.4g} <= 0 "
            f"(dimensionless parameter hbar*beta*Omega_x/2 = {par:.4g})"
        )
    vel = apply_j(grad)
    cubic = np.einsum("...i,...ij,...j->...", vel, hess, vel)
    exponent = -params.beta * h_val + theta**3 / (24.0 * params.hbar) * cubic
    return np.exp(exponent) / denom


def short_time_thermal_curvature(model, x, params):
    """Centre-of-curvature form of the short-time approximation (N = 1).

    Equivalent to :func:`short_time_thermal` where the local form is
    elliptic; kept for cross-checks, not for production use.
    """
    if model.dof != 1:
        raise ValueError("short-time form supports a single degree of freedom")
    x = as_phase_point(x, dof=1)
    theta = params.theta
    freq = models.local_frequency(model, x)
    if freq.hyperbolic or freq.value == 0:
        raise HyperbolicFormError("curvature form requires an elliptic local Hessian")
    omega = freq.value
    gamma = models.centre_of_curvature(model, x)
    hess = np.asarray(model.hessian_at(x), dtype=float)
    v = x - gamma
    quad = np.einsum("...i,...ij,...j->...", v, hess, v)
    u = 0.5 * theta * omega
    denom = 1.0 + 0.5 * u**2
    exponent = -params.beta * model.value(x) + (u**3 / 3.0) * quad / (params.hbar * omega)
    return np.exp(exponent) / denom


def _local_metaplectic_core(model, x, params):
    """Shared math for the local metaplectic form on a batch of points.

    Returns (values, bad_mask) where bad entries are hyperbolic/singular
    local Hessians (values there are the classical weight).
    """
    x = as_phase_point(x, dof=1)
    theta = params.theta
    h_val = model.value(x)
    grad = model.gradient_at(x)
    hess = np.asarray(model.hessian_at(x), dtype=float)
    det = hess[..., 0, 0] * hess[..., 1, 1] - hess[..., 0, 1] * hess[..., 1, 0]
    norm = np.max(np.abs(hess), axis=(-2, -1))
    gnorm = np.linalg.norm(grad, axis=-1)

    hyperbolic = det < 0
    # singular-but-flat points (degenerate minimum): limit is the classical weight
    flat = (~hyperbolic) & (norm < 1e-12) & (gnorm < 1e-10)
    singular = (~hyperbolic) & (~flat) & (np.abs(det) < 1e-13 * np.maximum(norm, 1.0) ** 2)
    ok = ~(hyperbolic | flat | singular)

    values = np.exp(-params.beta * h_val)  # classical fallback everywhere
    if np.any(ok):
        hs = hess[ok]
        gs = grad[ok]
        omegas = np.sqrt(det[ok])
        # displaced coordinate x - gamma_x = H_x^-1 h_x
        vcent = np.linalg.solve(hs, gs[..., None])[..., 0]
        quad = np.einsum("...i,...ij,...j->...", vcent, hs, vcent)
        delta = params.beta * (h_val[ok] - 0.5 * quad)
        u = 0.5 * theta * omegas
        small = omegas * theta < 1e-6
        tanh_over = np.where(small, 0.5 * theta, np.tanh(u) / np.where(small, 1.0, omegas))
        vals = np.exp(-delta - tanh_over * quad / params.hbar) / np.cosh(u)
        values = values.copy()
        values[ok] = vals
    return values, hyperbolic | singular


def local_metaplectic_thermal(model, x, params):
    """Local metaplectic thermal form: attenuated quadratic symbol at x (N = 1).

    exp(-Delta) * metaplectic(x - gamma_x | H_x) with
    Delta = beta [H(x) - H(x - gamma_x | H_x)].  Requires det H_x > 0;
    hyperbolic or singular local Hessians raise.
    """
    if model.dof != 1:
        raise ValueError("local metaplectic form supports a single degree of freedom")
    xv = as_phase_point(x, dof=1)
    scalar = xv.ndim == 1
    values, bad = _local_metaplectic_core(model, np.atleast_2d(xv), params)
    if np.any(bad):
        hess = np.asarray(model.hessian_at(np.atleast_2d(xv)), dtype=float)
        det = np.linalg.det(hess)
        worst = float(det[bad][0])
        if worst < 0:
            raise HyperbolicFormError(
                f"local Hessian is hyperbolic (det H_x = {worst:.6g}); form requires Omega^2 > 0"
            )
        raise SingularHessianError(
            f"local Hessian is singular (det H_x = {worst:.6g})", det=worst
        )
    return values[0] if scalar else values.reshape(xv.shape[:-1])


def local_metaplectic_values(model, x, params):
    """Batch variant with classical fallback at exceptional points.

    Returns (values, n_fallback); used by grid integrators where isolated
    hyperbolic/singular points must not abort the whole quadrature.
    """
    xv = np.atleast_2d(as_phase_point(x, dof=1))
    values, bad = _local_metaplectic_core(model, xv, params)
    return values, int(np.count_nonzero(bad))


def _laguerre(j, z):
    """Laguerre polynomial L_j by the three-term forward recurrence."""
    z = np.asarray(z, dtype=float)
    prev = np.ones_like(z)
    if j == 0:
        return prev
    curr = 1.0 - z
    for k in range(1, j):
        prev, curr = curr, ((2 * k + 1 - z) * curr - k * prev) / (k + 1)
    return curr


def fock_wigner(j, x, hbar=1.0):
    """Wigner function of the j-th isotropic oscillator eigenstate (N = 1).

    W_j(x) = ((-1)^j / (pi hbar)) exp(-x^2/hbar) L_j(2 x^2 / hbar).
    """
    if j < 0 or int(j) != j:
        raise ValueError("Fock index must be a non-negative integer")
    if j > MAX_LAGUERRE_ORDER:
        raise ValueError(f"Fock index {j} exceeds the round-off bound {MAX_LAGUERRE_ORDER}")
    x = as_phase_point(x, dof=1)
    r2 = np.sum(x * x, axis=-1)
    return ((-1) ** int(j) / (np.pi * hbar)) * np.exp(-r2 / hbar) * _laguerre(int(j), 2 * r2 / hbar)


def coherent_observable(centre, x, hbar=1.0):
    """Weyl symbol 2^N exp(-(x - X)^2 / hbar) of the coherent-state projector.

    Scaled so that its thermal average is the probability of finding the
    system in the coherent state centred at ``centre``.
    """
    centre = as_phase_point(centre)
    x = as_phase_point(x)
    dof = centre.shape[-1] // 2
    d = x - centre
    return 2.0**dof * np.exp(-np.sum(d * d, axis=-1) / hbar)


# ---------------------------------------------------------------------------
# auto-sized windows


def _find_minimum(model, radius=10.0, coarse=161):
    """Coarse grid scan for the Hamiltonian minimum (N = 1), then refine."""
    axis = np.linspace(-radius, radius, coarse)
    pp, qq = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([pp.ravel(), qq.ravel()], axis=-1)
    vals = model.value(pts)
    best = pts[int(np.argmin(vals))]
    span = 2 * radius / (coarse - 1)
    for _ in range(3):
        axis_p = np.linspace(best[0] - span, best[0] + span, 41)
        axis_q = np.linspace(best[1] - span, best[1] + span, 41)
        pp, qq = np.meshgrid(axis_p, axis_q, indexing="ij")
        pts = np.stack([pp.ravel(), qq.ravel()], axis=-1)
        vals = model.value(pts)
        best = pts[int(np.argmin(vals))]
        span = span / 10
    return best, float(model.value(best))


def energy_window_box(model, params, log_drop=WINDOW_LOG_DROP, max_radius=1e4):
    """Half-widths (rp, rq) and centre of the window beta H <= beta H_min + drop.

    The drop is measured along each half-axis through the minimum; a model
    unconfined within ``max_radius`` (no such radius found) raises
    ``ValueError``, which is how an unbounded-below polynomial scan reports.
    """
    centre, hmin = _find_minimum(model)
    target = hmin + log_drop / params.beta
    radii = []
    for direction in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        r = 1.0
        while True:
            plus = model.value(centre + r * direction)
            minus = model.value(centre - r * direction)
            if plus >= target and minus >= target:
                break
            r *= 2.0
            if r > max_radius:
                raise ValueError(
                    "no confining window found: Hamiltonian does not reach "
                    f"H_min + {log_drop}/beta within radius {max_radius}"
                )
        lo, hi = r / 2.0, r
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if model.value(centre + mid * direction) >= target and (
                model.value(centre - mid * direction) >= target
            ):
                hi = mid
            else:
                lo = mid
        radii.append(hi)
    return centre, radii[0], radii[1]


def auto_grid(model, params, n=201):
    """Grid covering the window {x : beta H(x) <= beta H_min + 40}."""
    centre, rp, rq = energy_window_box(model, params)
    return GridSpec(
        pmin=float(centre[0] - rp),
        pmax=float(centre[0] + rp),
        qmin=float(centre[1] - rq),
        qmax=float(centre[1] + rq),
        np_=n,
        nq=n,
    )
