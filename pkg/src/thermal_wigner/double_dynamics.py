"""Numerical integration of the double-phase-space flow.

Thermal mode integrates the real equations

    dx/dtheta' =  dIH/dy,   dy/dtheta' = -dIH/dx,
    IH(x, y)   =  H(x + iJy/2) + H(x - iJy/2),

from (X, 0) over theta' in [0, theta/2], accumulating the action integral
s = int y . dx, the tangent block d(x, y)/dX by the variational equations
(with the analytic Hessian of IH), an energy-conservation diagnostic, and
the sign history of det(dx/dX).  Real-time mode uses the real endpoint pair
x -/+ Jy/2 instead of the complex one.

The accumulated action of a trajectory is

    S = s - (theta/2) IH(X, 0) = s - theta H(X),

and the semiclassical thermal Weyl value at the image centre x(X) is
|det dx/dX|^(-1/2) exp(S / hbar), apart from an overall sign counting the
det crossings (none occur in thermal time for single-minimum models).

All trajectories are independent, so batches of midpoints are integrated by
one vectorised Dormand-Prince 5(4) stepper with per-trajectory adaptive
steps; per-row arithmetic never depends on batch composition, keeping
results identical across chunkings and worker counts.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import models
from .exceptions import DivergenceError, StiffnessError
from .parallel import chunked_map
from .phase_space import apply_j, as_phase_point

__all__ = [
    "IntegratorOptions",
    "DoubleState",
    "DoubleTrajectory",
    "BatchResult",
    "integrate_double",
    "integrate_double_batch",
    "sc_weyl_thermal",
    "sc_weyl_batch",
    "complex_consistency_check",
]

STATUS_OK = 0
STATUS_DIVERGED = 1
STATUS_STIFF = 2

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# b5 - b4 including the FSAL stage (k7 = f at the 5th-order solution)
_ERR = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


@dataclass(frozen=True)
class IntegratorOptions:
    """Adaptive-step options for the double flow."""

    mode: str = "thermal"
    rtol: float = 1e-10
    atol: float = 1e-10
    escape_radius: float = 1e3
    max_steps: int = 200_000

    def __post_init__(self):
        if self.mode not in ("thermal", "real-time"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class DoubleState:
    """Double position x, double momentum y, action integral s, tangent block."""

    x: np.ndarray
    y: np.ndarray
    s: float
    tangent: np.ndarray  # dx/dX, 2x2


@dataclass(frozen=True)
class DoubleTrajectory:
    """Result of one half-interval integration from midpoint X."""

    midpoint: np.ndarray
    theta: float
    mode: str
    state: DoubleState
    action: float
    jacobian_det: float
    energy_drift: float
    sign_crossings: int
    caustic_flag: bool
    n_steps: int
    checkpoints: np.ndarray | None = None  # rows: theta', p, q, y_p, y_q, s, det_T


@dataclass(frozen=True)
class BatchResult:
    x: np.ndarray
    y: np.ndarray
    action: np.ndarray
    jacobian_det: np.ndarray
    energy_drift: np.ndarray
    sign_crossings: np.ndarray
    status: np.ndarray
    n_steps: np.ndarray


def _j_left(m):
    """Left-multiply (..., 2, 2) blocks by J without forming J."""
    return np.stack([-m[..., 1, :], m[..., 0, :]], axis=-2)


def _thermal_rhs(model):
    def rhs(y_state):
        x = y_state[:, 0:2]
        y = y_state[:, 2:4]
        tx = y_state[:, 5:9].reshape(-1, 2, 2)
        ty = y_state[:, 9:13].reshape(-1, 2, 2)
        z = x + 0.5j * apply_j(y)
        grad = model.gradient_at(z)
        hess = model.hessian_at(z)
        dx = apply_j(grad.imag)
        dy = -2.0 * grad.real
        ds = np.sum(y * dx, axis=-1)
        a_re = hess.real
        b_im = hess.imag
        jty = _j_left(ty)
        dtx = _j_left(b_im @ tx) + 0.5 * _j_left(a_re @ jty)
        dty = -2.0 * (a_re @ tx) + b_im @ jty
        out = np.empty_like(y_state)
        out[:, 0:2] = dx
        out[:, 2:4] = dy
        out[:, 4] = ds
        out[:, 5:9] = dtx.reshape(-1, 4)
        out[:, 9:13] = dty.reshape(-1, 4)
        return out

    return rhs


def _realtime_rhs(model):
    def rhs(y_state):
        x = y_state[:, 0:2]
        y = y_state[:, 2:4]
        tx = y_state[:, 5:9].reshape(-1, 2, 2)
        ty = y_state[:, 9:13].reshape(-1, 2, 2)
        half_jy = 0.5 * apply_j(y)
        xp = x - half_jy
        xm = x + half_jy
        gp = model.gradient_at(xp)
        gm = model.gradient_at(xm)
        dx = 0.5 * apply_j(gp - gm)
        dy = -(gp + gm)
        ds = np.sum(y * dx, axis=-1)
        hp = model.hessian_at(xp)
        hm = model.hessian_at(xm)
        hsum = hp + hm
        hdif = hp - hm
        jty = _j_left(ty)
        dtx = 0.5 * _j_left(hdif @ tx) - 0.25 * _j_left(hsum @ jty)
        dty = -(hsum @ tx) + 0.5 * (hdif @ jty)
        out = np.empty_like(y_state)
        out[:, 0:2] = dx
        out[:, 2:4] = dy
        out[:, 4] = ds
        out[:, 5:9] = dtx.reshape(-1, 4)
        out[:, 9:13] = dty.reshape(-1, 4)
        return out

    return rhs


def _det_tangent(y_state):
    return y_state[:, 5] * y_state[:, 8] - y_state[:, 6] * y_state[:, 7]


def _double_energy(model, y_state, mode):
    x = y_state[:, 0:2]
    y = y_state[:, 2:4]
    if mode == "thermal":
        z = x + 0.5j * apply_j(y)
        return 2.0 * np.real(model.value(z))
    half_jy = 0.5 * apply_j(y)
    return model.value(x - half_jy) + model.value(x + half_jy)


def _rk_batch(
    rhs, y0, span, rtol, atol, escape_sq, max_steps, energy_fn, record=False, det_fn=None
):
    """Vectorised adaptive Dormand-Prince over a batch of independent rows.

    Integrates dY/dt = rhs(Y) from t=0 to t=span (span > 0) with per-row
    step control.  Returns (Y_end, status, drift, crossings, n_steps,
    checkpoints) where drift is the max deviation of energy_fn from its
    initial value at accepted steps and crossings counts sign changes of
    det_fn (when given).
    """
    n = y0.shape[0]
    y = y0.copy()
    t = np.zeros(n)
    status = np.full(n, STATUS_OK, dtype=np.int8)
    finished = np.zeros(n, dtype=bool)
    drift = np.zeros(n)
    crossings = np.zeros(n, dtype=np.int64)
    n_steps = np.zeros(n, dtype=np.int64)
    if det_fn is not None:
        det_sign = np.sign(det_fn(y0))
        det_sign[det_sign == 0] = 1.0
    e0 = energy_fn(y0)
    h = np.full(n, span / 64.0)
    h_floor = span * 1e-14
    checkpoints = [[] for _ in range(n)] if record else None
    if record:
        for i in range(n):
            checkpoints[i].append(_checkpoint_row(0.0, y0[i]))

    for _ in range(max_steps):
        act = np.flatnonzero(~finished & (status == STATUS_OK))
        if act.size == 0:
            break
        ya = y[act]
        ha = np.minimum(h[act], span - t[act])
        k = np.empty((7, act.size, y.shape[1]))
        k[0] = rhs(ya)
        for s in range(1, 6):
            incr = np.tensordot(_A[s], k[:s], axes=(0, 0))
            k[s] = rhs(ya + ha[:, None] * incr)
        y5 = ya + ha[:, None] * np.tensordot(_B5, k[:6], axes=(0, 0))
        k[6] = rhs(y5)
        err_vec = ha[:, None] * np.tensordot(_ERR, k, axes=(0, 0))
        scale = atol + rtol * np.maximum(np.abs(ya), np.abs(y5))
        err = np.sqrt(np.mean((err_vec / scale) ** 2, axis=1))

        with np.errstate(divide="ignore"):
            factor = 0.9 * err ** (-0.2)
        factor = np.clip(np.where(np.isfinite(factor), factor, 5.0), 0.2, 5.0)
        ok = (err <= 1.0) & np.all(np.isfinite(y5), axis=1)

        acc = act[ok]
        if acc.size:
            y[acc] = y5[ok]
            t[acc] = t[act[ok]] + ha[ok]
            n_steps[acc] += 1
            # diagnostics on accepted states
            e_now = energy_fn(y5[ok])
            drift[acc] = np.maximum(drift[acc], np.abs(e_now - e0[acc]))
            if det_fn is not None:
                new_sign = np.sign(det_fn(y5[ok]))
                new_sign[new_sign == 0] = det_sign[acc][new_sign == 0]
                flipped = new_sign != det_sign[acc]
                crossings[acc] += flipped
                det_sign[acc] = new_sign
            r2 = np.sum(y5[ok][:, 0:4] ** 2, axis=1)
            esc = r2 > escape_sq
            if np.any(esc):
                status[acc[esc]] = STATUS_DIVERGED
            finished[acc] = finished[acc] | (t[acc] >= span * (1 - 1e-15))
            if record:
                for row, yrow, trow in zip(acc, y5[ok], t[acc]):
                    checkpoints[row].append(_checkpoint_row(trow, yrow))
        bad = act[~ok]
        if bad.size:
            nonfinite = ~np.all(np.isfinite(y5[~ok]), axis=1)
            status[bad[nonfinite]] = STATUS_DIVERGED
        h[act] = ha * factor
        too_small = (h[act] < h_floor) & ~finished[act] & (status[act] == STATUS_OK)
        if np.any(too_small):
            status[act[too_small]] = STATUS_STIFF
    else:
        status[~finished & (status == STATUS_OK)] = STATUS_STIFF

    return y, status, drift, crossings, n_steps, checkpoints


def _checkpoint_row(t, yrow):
    det = yrow[5] * yrow[8] - yrow[6] * yrow[7]
    return (t, yrow[0], yrow[1], yrow[2], yrow[3], yrow[4], det)


def _initial_state(midpoints):
    n = midpoints.shape[0]
    y0 = np.zeros((n, 13))
    y0[:, 0:2] = midpoints
    y0[:, 5] = 1.0  # dx/dX = I
    y0[:, 8] = 1.0
    return y0


def integrate_double_batch(model, midpoints, theta, opts=None, workers=None):
    """Integrate the double flow for a batch of midpoints over [0, theta/2]."""
    opts = opts or IntegratorOptions()
    midpoints = np.atleast_2d(as_phase_point(midpoints, dof=model.dof))
    if model.dof != 1:
        raise ValueError("double dynamics supports a single degree of freedom")
    n = midpoints.shape[0]
    h_x = model.value(midpoints)
    if theta == 0.0:
        return BatchResult(
            x=midpoints.copy(),
            y=np.zeros_like(midpoints),
            action=np.zeros(n),
            jacobian_det=np.ones(n),
            energy_drift=np.zeros(n),
            sign_crossings=np.zeros(n, dtype=np.int64),
            status=np.zeros(n, dtype=np.int8),
            n_steps=np.zeros(n, dtype=np.int64),
        )
    span = abs(theta) / 2.0
    forward = _thermal_rhs(model) if opts.mode == "thermal" else _realtime_rhs(model)
    if theta < 0:
        if opts.mode == "thermal":
            raise ValueError("thermal time must be non-negative")
        rhs = lambda ys: -forward(ys)  # noqa: E731 - time reversal
    else:
        rhs = forward

    def run(start, stop):
        y0 = _initial_state(midpoints[start:stop])
        y_end, status, drift, crossings, n_steps, _ = _rk_batch(
            rhs,
            y0,
            span,
            opts.rtol,
            opts.atol,
            opts.escape_radius**2,
            opts.max_steps,
            lambda ys: _double_energy(model, ys, opts.mode),
            det_fn=_det_tangent,
        )
        return y_end, status, drift, crossings, n_steps

    y_end, status, drift, crossings, n_steps = chunked_map(run, n, workers=workers)
    action = y_end[:, 4] - theta * h_x
    return BatchResult(
        x=y_end[:, 0:2],
        y=y_end[:, 2:4],
        action=action,
        jacobian_det=_det_tangent(y_end),
        energy_drift=drift,
        sign_crossings=crossings,
        status=status,
        n_steps=n_steps,
    )


def integrate_double(model, midpoint, theta, opts=None, record=False):
    """Integrate one double trajectory; raises on divergence or stiffness."""
    opts = opts or IntegratorOptions()
    midpoint = as_phase_point(midpoint, dof=1)
    if theta == 0.0:
        state = DoubleState(x=midpoint.copy(), y=np.zeros(2), s=0.0, tangent=np.eye(2))
        return DoubleTrajectory(
            midpoint=midpoint,
            theta=theta,
            mode=opts.mode,
            state=state,
            action=0.0,
            jacobian_det=1.0,
            energy_drift=0.0,
            sign_crossings=0,
            caustic_flag=False,
            n_steps=0,
        )
    span = abs(theta) / 2.0
    forward = _thermal_rhs(model) if opts.mode == "thermal" else _realtime_rhs(model)
    if theta < 0:
        if opts.mode == "thermal":
            raise ValueError("thermal time must be non-negative")
        rhs = lambda ys: -forward(ys)  # noqa: E731
    else:
        rhs = forward
    y0 = _initial_state(midpoint[None, :])
    y_end, status, drift, crossings, n_steps, checkpoints = _rk_batch(
        rhs,
        y0,
        span,
        opts.rtol,
        opts.atol,
        opts.escape_radius**2,
        opts.max_steps,
        lambda ys: _double_energy(model, ys, opts.mode),
        record=record,
        det_fn=_det_tangent,
    )
    if status[0] == STATUS_DIVERGED:
        raise DivergenceError(
            f"trajectory from X={midpoint.tolist()} escaped radius {opts.escape_radius}"
        )
    if status[0] == STATUS_STIFF:
        raise StiffnessError(f"step size underflow for X={midpoint.tolist()}")
    state = DoubleState(
        x=y_end[0, 0:2],
        y=y_end[0, 2:4],
        s=float(y_end[0, 4]),
        tangent=y_end[0, 5:9].reshape(2, 2),
    )
    return DoubleTrajectory(
        midpoint=midpoint,
        theta=theta,
        mode=opts.mode,
        state=state,
        action=float(y_end[0, 4] - theta * model.value(midpoint)),
        jacobian_det=float(_det_tangent(y_end)[0]),
        energy_drift=float(drift[0]),
        sign_crossings=int(crossings[0]),
        caustic_flag=bool(crossings[0] > 0),
        n_steps=int(n_steps[0]),
        checkpoints=np.array(checkpoints[0]) if record else None,
    )


def sc_weyl_thermal(model, midpoint, theta, hbar=1.0, opts=None):
    """Semiclassical thermal Weyl value at the image centre x(X).

    Returns (centre, value) with value = sign * |det dx/dX|^(-1/2) exp(S/hbar);
    the sign flips once per Jacobian sign crossing.
    """
    opts = opts or IntegratorOptions()
    if opts.mode != "thermal":
        opts = replace(opts, mode="thermal")
    traj = integrate_double(model, midpoint, theta, opts)
    sign = -1.0 if traj.sign_crossings % 2 else 1.0
    value = sign * np.exp(traj.action / hbar - 0.5 * np.log(abs(traj.jacobian_det)))
    return traj.state.x, float(value)


def sc_weyl_batch(model, midpoints, theta, hbar=1.0, opts=None, workers=None):
    """Batched :func:`sc_weyl_thermal`.

    Returns (centres, values, ok) where diverged/stiff rows have ok=False and
    value 0 (they contribute nothing to midpoint integrals).
    """
    opts = opts or IntegratorOptions()
    if opts.mode != "thermal":
        opts = replace(opts, mode="thermal")
    res = integrate_double_batch(model, midpoints, theta, opts, workers=workers)
    ok = res.status == STATUS_OK
    sign = np.where(res.sign_crossings % 2 == 0, 1.0, -1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_amp = res.action / hbar - 0.5 * np.log(np.abs(res.jacobian_det))
        # a thermal weight cannot legitimately blow up: midpoints whose action
        # turned positive sit beyond the manifold-bounded region and are voided
        # like escaped trajectories
        ok = ok & np.isfinite(log_amp) & (log_amp < 50.0)
        values = np.where(ok, sign * np.exp(np.where(ok, log_amp, 0.0)), 0.0)
    return res.x, values, ok, res


def complex_consistency_check(model, midpoint, theta, opts=None):
    """Max deviation between the real double flow and complex Hamilton flow.

    Integrates dz/dtheta' = -i J grad H(z) from z(0) = X jointly with the
    real (x, y) system and returns max over accepted steps of
    |Re z - x| + |(-2 J Im z) - y|.
    """
    opts = opts or IntegratorOptions()
    midpoint = as_phase_point(midpoint, dof=1)
    if theta == 0.0:
        return 0.0
    span = theta / 2.0

    def rhs(ys):
        # layout: Re z (2), Im z (2), x (2), y (2)
        z = ys[:, 0:2] + 1j * ys[:, 2:4]
        gz = model.gradient_at(z)
        dz = -1j * apply_j(gz)
        x = ys[:, 4:6]
        y = ys[:, 6:8]
        zr = x + 0.5j * apply_j(y)
        gr = model.gradient_at(zr)
        out = np.empty_like(ys)
        out[:, 0:2] = dz.real
        out[:, 2:4] = dz.imag
        out[:, 4:6] = apply_j(gr.imag)
        out[:, 6:8] = -2.0 * gr.real
        return out

    deviation = [0.0]
    y0 = np.zeros((1, 8))
    y0[0, 0:2] = midpoint
    y0[0, 4:6] = midpoint

    def monitor(ys):
        x = ys[:, 4:6]
        y = ys[:, 6:8]
        im_z = ys[:, 2:4]
        dev = np.linalg.norm(ys[:, 0:2] - x, axis=1) + np.linalg.norm(
            -2.0 * apply_j(im_z) - y, axis=1
        )
        deviation[0] = max(deviation[0], float(np.max(dev)))
        return np.zeros(ys.shape[0])

    _, status, _, _, _, _ = _rk_batch(
        rhs,
        y0,
        span,
        opts.rtol,
        opts.atol,
        opts.escape_radius**2,
        opts.max_steps,
        monitor,
    )
    if status[0] == STATUS_DIVERGED:
        raise DivergenceError("consistency-check trajectory escaped")
    if status[0] == STATUS_STIFF:
        raise StiffnessError("consistency-check step size underflow")
    return deviation[0]
