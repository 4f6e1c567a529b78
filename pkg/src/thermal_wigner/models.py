"""Hamiltonian model registry: evaluation, analytic derivatives, local geometry.

Four polynomial model families are supported:

* ``Quadratic``   -- H(x) = x . M x / 2 for a symmetric 2N x 2N matrix M
* ``NormalForm``  -- H(x) = F(u), u = x^2/2, F a polynomial with F(0) = 0
* ``Kerr``        -- H(x) = [omega * u]^2, the square of the isotropic oscillator
* ``PolynomialPQ``-- H(p, q) = sum of c * p^i q^j monomials (one degree of freedom)

All models are polynomial in the coordinates, so the complex-argument
evaluation is the exact analytic extension and every derivative is exact
(term-wise); nothing here uses finite differences.  Evaluation functions are
vectorised over leading axes: ``x`` may be shaped (..., 2N).
"""

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import SingularHessianError
from .phase_space import apply_j, as_phase_point

__all__ = [
    "Quadratic",
    "NormalForm",
    "Kerr",
    "PolynomialPQ",
    "LocalFrequency",
    "LocalQuadraticData",
    "eval_model",
    "eval_complex",
    "gradient",
    "hessian",
    "local_frequency",
    "centre_of_curvature",
    "local_quadratic_data",
    "double_hamiltonian",
    "quadratic_form",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "save_model",
]


def _coerce(x, dof):
    """Accept real or complex input of shape (..., 2N); no copy when possible."""
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.complexfloating):
        x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2 * dof:
        raise ValueError(f"expected {2 * dof} coordinates, got {x.shape[-1]}")
    return x


@dataclass(frozen=True, eq=False)
class Quadratic:
    """Homogeneous quadratic Hamiltonian H(x) = x . M x / 2."""

    matrix: np.ndarray
    dof: int = 1

    def __eq__(self, other):
        return isinstance(other, Quadratic) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (2 * self.dof, 2 * self.dof):
            raise ValueError(f"matrix shape {m.shape} does not match dof={self.dof}")
        if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise ValueError("quadratic matrix must be symmetric to 1e-12")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def value(self, x):
        x = _coerce(x, self.dof)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.matrix, x)

    def gradient_at(self, x):
        x = _coerce(x, self.dof)
        return x @ self.matrix

    def hessian_at(self, x):
        x = _coerce(x, self.dof)
        h = np.broadcast_to(self.matrix, x.shape[:-1] + self.matrix.shape)
        if np.issubdtype(x.dtype, np.complexfloating):
            return h.astype(complex)
        return h

    def key(self):
        return ("quadratic", self.dof, self.matrix.tobytes())


@dataclass(frozen=True)
class NormalForm:
    """H(x) = F(x^2 / 2) with F(u) = c_1 u + c_2 u^2 + ... (coeffs = (c_1, c_2, ...)).

    The leading coefficient is the small-oscillation frequency; it may vanish
    only when a higher coefficient is positive (Kerr-like degenerate minimum).
    """

    coeffs: tuple
    dof: int = 1

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if self.dof != 1:
            raise ValueError("normal-form models support a single degree of freedom")
        if not coeffs:
            raise ValueError("normal form needs at least one coefficient")
        if coeffs[0] < 0 or (coeffs[0] == 0 and not any(c > 0 for c in coeffs[1:])):
            raise ValueError(
                "leading frequency must be > 0, or 0 with a positive higher coefficient"
            )
        object.__setattr__(self, "coeffs", coeffs)

    def f_series(self, u, order=0):
        """F(u) (order 0) or its derivative of the given order, by Horner."""
        result = np.zeros_like(u)
        for k in range(len(self.coeffs), 0, -1):
            # term c_k u^k differentiated `order` times
            fall = 1.0
            for d in range(order):
                fall *= k - d
            if fall == 0.0:
                continue
            power = k - order
            result = result + self.coeffs[k - 1] * fall * u**power
        return result

    def value(self, x):
        x = _coerce(x, 1)
        u = 0.5 * np.sum(x * x, axis=-1)
        return self.f_series(u)

    def gradient_at(self, x):
        x = _coerce(x, 1)
        u = 0.5 * np.sum(x * x, axis=-1)
        return self.f_series(u, order=1)[..., None] * x

    def hessian_at(self, x):
        x = _coerce(x, 1)
        u = 0.5 * np.sum(x * x, axis=-1)
        f1 = self.f_series(u, order=1)
        f2 = self.f_series(u, order=2)
        eye = np.eye(2, dtype=x.dtype)
        return f1[..., None, None] * eye + f2[..., None, None] * (
            x[..., :, None] * x[..., None, :]
        )

    def key(self):
        return ("normal_form", self.dof, self.coeffs)


@dataclass(frozen=True)
class Kerr:
    """Kerr Hamiltonian H(x) = [ (omega/2)(p^2 + q^2) ]^2."""

    omega: float
    dof: int = 1

    def __post_init__(self):
        if self.dof != 1:
            raise ValueError("the Kerr model is a single degree of freedom")
        if not self.omega > 0:
            raise ValueError("Kerr frequency must be positive")
        object.__setattr__(self, "omega", float(self.omega))
        # F(u) = omega^2 u^2: shares all normal-form code paths
        object.__setattr__(self, "_nf", NormalForm(coeffs=(0.0, self.omega**2)))

    def value(self, x):
        return self._nf.value(x)

    def gradient_at(self, x):
        return self._nf.gradient_at(x)

    def hessian_at(self, x):
        return self._nf.hessian_at(x)

    def f_series(self, u, order=0):
        return self._nf.f_series(u, order=order)

    @property
    def coeffs(self):
        return self._nf.coeffs

    def key(self):
        return ("kerr", self.dof, self.omega)


@dataclass(frozen=True)
class PolynomialPQ:
    """H(p, q) = sum over terms (c, i, j) of c * p^i q^j, one degree of freedom."""

    terms: tuple
    dof: int = 1

    def __post_init__(self):
        if self.dof != 1:
            raise ValueError("polynomial p-q models support a single degree of freedom")
        clean = []
        for term in self.terms:
            c, i, j = term
            i, j = int(i), int(j)
            if i < 0 or j < 0 or i != term[1] or j != term[2]:
                raise ValueError(f"exponents must be non-negative integers, got {term}")
            if not np.isfinite(c):
                raise ValueError(f"non-finite coefficient in term {term}")
            clean.append((float(c), i, j))
        if not clean:
            raise ValueError("polynomial model needs at least one term")
        object.__setattr__(self, "terms", tuple(clean))

    def _powers(self, v, kmax):
        out = [np.ones_like(v)]
        for _ in range(kmax):
            out.append(out[-1] * v)
        return out

    def value(self, x):
        x = _coerce(x, 1)
        p, q = x[..., 0], x[..., 1]
        pk = self._powers(p, max(i for _, i, _ in self.terms))
        qk = self._powers(q, max(j for _, _, j in self.terms))
        total = np.zeros_like(p)
        for c, i, j in self.terms:
            total = total + c * pk[i] * qk[j]
        return total

    def gradient_at(self, x):
        x = _coerce(x, 1)
        p, q = x[..., 0], x[..., 1]
        pk = self._powers(p, max(i for _, i, _ in self.terms))
        qk = self._powers(q, max(j for _, _, j in self.terms))
        gp = np.zeros_like(p)
        gq = np.zeros_like(q)
        for c, i, j in self.terms:
            if i > 0:
                gp = gp + c * i * pk[i - 1] * qk[j]
            if j > 0:
                gq = gq + c * j * pk[i] * qk[j - 1]
        return np.stack([gp, gq], axis=-1)

    def hessian_at(self, x):
        x = _coerce(x, 1)
        p, q = x[..., 0], x[..., 1]
        pk = self._powers(p, max(i for _, i, _ in self.terms))
        qk = self._powers(q, max(j for _, _, j in self.terms))
        hpp = np.zeros_like(p)
        hpq = np.zeros_like(p)
        hqq = np.zeros_like(p)
        for c, i, j in self.terms:
            if i > 1:
                hpp = hpp + c * i * (i - 1) * pk[i - 2] * qk[j]
            if i > 0 and j > 0:
                hpq = hpq + c * i * j * pk[i - 1] * qk[j - 1]
            if j > 1:
                hqq = hqq + c * j * (j - 1) * pk[i] * qk[j - 2]
        h = np.empty(p.shape + (2, 2), dtype=p.dtype)
        h[..., 0, 0] = hpp
        h[..., 0, 1] = hpq
        h[..., 1, 0] = hpq
        h[..., 1, 1] = hqq
        return h

    def key(self):
        return ("polynomial_pq", self.dof, self.terms)


# ---------------------------------------------------------------------------
# module-level operations


def eval_model(model, x):
    """H(x) at a real phase-space point (batched)."""
    x = as_phase_point(x, dof=model.dof)
    return model.value(x)


def eval_complex(model, z):
    """Analytic extension of H at a complex point; equals eval on real input."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != 2 * model.dof:
        raise ValueError(f"expected {2 * model.dof} coordinates, got {z.shape[-1]}")
    return model.value(z)


def gradient(model, x):
    """Exact gradient dH/dx (term-wise analytic, real or complex input)."""
    return model.gradient_at(x)


def hessian(model, x):
    """Exact Hessian d2H/dx2 (term-wise analytic, real or complex input)."""
    return model.hessian_at(x)


@dataclass(frozen=True)
class LocalFrequency:
    """Local frequency Omega_x = sqrt(det H_x), or det H_x with a hyperbolic flag."""

    value: float
    hyperbolic: bool


def local_frequency(model, x):
    """Local frequency of the quadratic approximation at ``x`` (N = 1 only).

    Returns ``LocalFrequency(sqrt(det H_x), False)`` for an elliptic local
    Hessian, or ``LocalFrequency(det H_x, True)`` when det H_x < 0.
    """
    if model.dof != 1:
        raise ValueError("local_frequency supports a single degree of freedom")
    h = model.hessian_at(as_phase_point(x, dof=1))
    det = float(np.linalg.det(h))
    if det >= 0:
        return LocalFrequency(value=float(np.sqrt(det)), hyperbolic=False)
    return LocalFrequency(value=det, hyperbolic=True)


def centre_of_curvature(model, x):
    """Local centre of curvature gamma_x = x - H_x^-1 h_x.

    Raises :class:`SingularHessianError` (carrying det H_x) when the local
    Hessian is not invertible.
    """
    x = as_phase_point(x, dof=model.dof)
    h = np.asarray(model.hessian_at(x), dtype=float)
    g = model.gradient_at(x)
    det = np.linalg.det(h)
    if np.any(np.abs(det) < 1e-13):
        raise SingularHessianError(
            f"local Hessian is singular (det H_x = {np.min(np.abs(det)):.3e})",
            det=det if np.ndim(det) else float(det),
        )
    cond = np.linalg.cond(h)
    sol = np.linalg.solve(h, g[..., None])[..., 0]
    gamma = x - sol
    if np.max(cond) > 1e12:
        raise SingularHessianError(
            f"local Hessian numerically singular (cond = {np.max(cond):.3e})",
            det=det if np.ndim(det) else float(det),
        )
    return gamma


@dataclass(frozen=True)
class LocalQuadraticData:
    """Gradient, Hessian, local frequency and centre of curvature at a point."""

    gradient: np.ndarray
    hessian: np.ndarray
    frequency: LocalFrequency
    gamma: np.ndarray


def local_quadratic_data(model, x):
    """Bundle the local inhomogeneous quadratic approximation data at ``x``."""
    return LocalQuadraticData(
        gradient=model.gradient_at(as_phase_point(x, dof=model.dof)),
        hessian=np.asarray(model.hessian_at(x), dtype=float),
        frequency=local_frequency(model, x),
        gamma=centre_of_curvature(model, x),
    )


def quadratic_form(v, matrix):
    """Homogeneous quadratic form v . M v / 2 (batched over v)."""
    v = np.asarray(v)
    return 0.5 * np.einsum("...i,...ij,...j->...", v, np.asarray(matrix), v)


def double_hamiltonian(model, x, y):
    """Real double Hamiltonian IH(x, y) = H(x + iJy/2) + H(x - iJy/2).

    Generator of the real thermal-time flow in double phase space; equals
    2 H(x) exactly at y = 0.
    """
    x = as_phase_point(x, dof=model.dof)
    y = np.asarray(y, dtype=float)
    if y.shape != x.shape:
        raise ValueError("x and y must have the same shape")
    if not np.any(y):
        return 2.0 * model.value(x)
    z = x + 0.5j * apply_j(y)
    return 2.0 * np.real(model.value(z))


# ---------------------------------------------------------------------------
# model files

_VARIANTS = {"quadratic", "normal_form", "kerr", "polynomial_pq"}


def model_from_dict(data):
    """Build a model from its JSON dictionary form."""
    kind = data.get("type")
    if kind not in _VARIANTS:
        raise ValueError(f"unknown model type {kind!r}; expected one of {sorted(_VARIANTS)}")
    dof = int(data.get("dof", 1))
    if kind == "quadratic":
        flat = np.asarray(data["matrix"], dtype=float)
        return Quadratic(matrix=flat.reshape(2 * dof, 2 * dof), dof=dof)
    if kind == "normal_form":
        return NormalForm(coeffs=tuple(data["coeffs"]), dof=dof)
    if kind == "kerr":
        return Kerr(omega=float(data["omega"]), dof=dof)
    return PolynomialPQ(terms=tuple((c, i, j) for c, i, j in data["terms"]), dof=dof)


def model_to_dict(model):
    """Inverse of :func:`model_from_dict`."""
    if isinstance(model, Quadratic):
        return {"type": "quadratic", "dof": model.dof, "matrix": model.matrix.ravel().tolist()}
    if isinstance(model, Kerr):
        return {"type": "kerr", "dof": model.dof, "omega": model.omega}
    if isinstance(model, NormalForm):
        return {"type": "normal_form", "dof": model.dof, "coeffs": list(model.coeffs)}
    if isinstance(model, PolynomialPQ):
        return {"type": "polynomial_pq", "dof": model.dof, "terms": [list(t) for t in model.terms]}
    raise TypeError(f"not a model: {model!r}")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")
