"""Analytic midpoint map, actions and Jacobians for normal-form Hamiltonians.

For H(x) = F(x^2/2) the flow is circular with amplitude-dependent frequency
F'(X^2/2), so the maps and actions of the forward/backward half-trajectory
construction are closed-form.  Everything is parametrized by the trajectory
midpoint X (the centre x(X) is derived, never inverted), in real time t or
thermal time theta:

    x(X, theta)  = cosh(theta F'/2) X
    S_t(x(X))    = [t F' - sin(t F')] X^2/2 - t F(X^2/2)
    S^i_theta    = [theta F' - sinh(theta F')] X^2/2 - theta F(X^2/2)

with all F-derivatives taken at u = X^2/2.  The thermal map has no caustics:
its Jacobian det(d x / d X) is cosh-based and strictly positive.
"""

import numpy as np

from .models import Kerr, NormalForm
from .phase_space import as_phase_point

__all__ = [
    "as_normal_form",
    "nf_midpoint_image",
    "nf_real_action",
    "nf_thermal_action",
    "nf_jacobian",
    "nf_thermal_weyl",
    "nf_preimage_radius",
]


def as_normal_form(model):
    """Return the model if it exposes normal-form structure, else raise."""
    if isinstance(model, (NormalForm, Kerr)):
        return model
    raise TypeError(f"model {type(model).__name__} is not in normal form")


def _u(x):
    return 0.5 * np.sum(x * x, axis=-1)


def nf_midpoint_image(model, midpoint, theta):
    """Centre x(X, theta) = cosh(theta F'(X^2/2)/2) X of the thermal chord."""
    model = as_normal_form(model)
    x = as_phase_point(midpoint, dof=1)
    f1 = model.f_series(_u(x), order=1)
    return np.cosh(0.5 * theta * f1)[..., None] * x


def nf_real_action(model, midpoint, t):
    """Real-time centre action at the image point; odd in t."""
    model = as_normal_form(model)
    x = as_phase_point(midpoint, dof=1)
    u = _u(x)
    f1 = model.f_series(u, order=1)
    return (t * f1 - np.sin(t * f1)) * u - t * model.f_series(u)


def nf_thermal_action(model, midpoint, theta):
    """Thermal action S^i_theta at the image point x(X, theta)."""
    model = as_normal_form(model)
    x = as_phase_point(midpoint, dof=1)
    u = _u(x)
    f1 = model.f_series(u, order=1)
    return (theta * f1 - np.sinh(theta * f1)) * u - theta * model.f_series(u)


def nf_jacobian(model, midpoint, theta):
    """det(d x / d X) of the thermal midpoint map (2 x 2, closed form).

    d x / d X = c I + (theta F''/2) sinh(theta F'/2) X (x) X with
    c = cosh(theta F'/2), so the determinant is
    c (c + (theta F''/2) sinh(theta F'/2) X^2).
    """
    model = as_normal_form(model)
    x = as_phase_point(midpoint, dof=1)
    u = _u(x)
    f1 = model.f_series(u, order=1)
    f2 = model.f_series(u, order=2)
    c = np.cosh(0.5 * theta * f1)
    return c * (c + 0.5 * theta * f2 * np.sinh(0.5 * theta * f1) * 2.0 * u)


def nf_thermal_weyl(model, midpoint, theta, hbar=1.0):
    """Thermal Weyl value at the image centre: (x(X), jac^-1/2 exp(S^i/hbar))."""
    centre = nf_midpoint_image(model, midpoint, theta)
    action = nf_thermal_action(model, midpoint, theta)
    jac = nf_jacobian(model, midpoint, theta)
    value = np.exp(action / hbar - 0.5 * np.log(jac))
    return centre, value


def nf_preimage_radius(model, theta, radius, bracket=None):
    """Midpoint radius t with |x(t * e, theta)| = radius (radial inversion).

    The radial map t -> cosh(theta F'(t^2/2)/2) t is strictly increasing for
    confining normal forms, so the inverse is found by bisection.  ``radius``
    may be an array.
    """
    model = as_normal_form(model)

    def image_radius(t):
        f1 = model.f_series(0.5 * t * t, order=1)
        return np.cosh(0.5 * theta * f1) * t

    radius = np.asarray(radius, dtype=float)
    hi = np.full(radius.shape, 1.0 if bracket is None else bracket)
    for _ in range(200):
        mask = image_radius(hi) < radius
        if not np.any(mask):
            break
        hi = np.where(mask, 2.0 * hi, hi)
    lo = np.zeros_like(hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = image_radius(mid) < radius
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)
