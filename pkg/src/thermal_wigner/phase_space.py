"""Phase-space primitives: symplectic form, chord/centre geometry, Cayley map.

A phase-space point for N degrees of freedom is a length-2N vector ordered
``x = (p_1 .. p_N, q_1 .. q_N)``.  With that ordering the symplectic matrix
is the block matrix

    J = [[0, -I], [I, 0]],      J (p, q) = (-q, p),

and the wedge product of two vectors is ``a ^ b = (J a) . b``.  All
functions accept batches: arrays whose last axis is the 2N coordinate axis.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import CausticError

__all__ = [
    "as_phase_point",
    "symplectic_matrix",
    "apply_j",
    "symplectic_form",
    "ChordCentrePair",
    "cayley_monodromy",
    "symplectic_defect",
    "assert_symplectic",
]

#: default absolute tolerance for symplectic identities
DEFAULT_TOL = 1e-10


def as_phase_point(x, dof=None):
    """Validate and return ``x`` as a float array of shape (..., 2N).

    Raises ``ValueError`` for odd lengths, non-finite entries, or a
    mismatch with an expected number of degrees of freedom.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] % 2 != 0 or x.shape[-1] < 2:
        raise ValueError(f"phase-space point must have even length >= 2, got shape {x.shape}")
    if dof is not None and x.shape[-1] != 2 * dof:
        raise ValueError(f"expected 2N = {2 * dof} coordinates, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("phase-space point has non-finite entries")
    return x


@lru_cache(maxsize=None)
def _j_matrix(two_n):
    n = two_n // 2
    j = np.zeros((two_n, two_n))
    j[:n, n:] = -np.eye(n)
    j[n:, :n] = np.eye(n)
    j.setflags(write=False)
    return j


def symplectic_matrix(dof):
    """The 2N x 2N symplectic matrix J in (p, q) block form."""
    return _j_matrix(2 * dof)


def apply_j(v):
    """Apply J to the last axis of ``v`` without forming the matrix."""
    v = np.asarray(v)
    n = v.shape[-1] // 2
    return np.concatenate([-v[..., n:], v[..., :n]], axis=-1)


def symplectic_form(a, b):
    """Wedge product a ^ b = (J a) . b.

    Antisymmetric bilinear form; batched over leading axes.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    if a.shape[-1] % 2 != 0:
        raise ValueError("phase-space vectors must have even length")
    return np.sum(apply_j(a) * b, axis=-1)


@dataclass(frozen=True)
class ChordCentrePair:
    """A trajectory chord ``xi`` together with its centre ``x``.

    The endpoints are x +/- xi/2; re-forming (centre, chord) from them is
    the identity.
    """

    centre: np.ndarray
    chord: np.ndarray

    def __post_init__(self):
        centre = as_phase_point(self.centre)
        chord = as_phase_point(self.chord)
        if centre.shape != chord.shape:
            raise ValueError("centre and chord must have the same shape")
        object.__setattr__(self, "centre", centre)
        object.__setattr__(self, "chord", chord)

    @classmethod
    def from_endpoints(cls, x_plus, x_minus):
        x_plus = as_phase_point(x_plus)
        x_minus = as_phase_point(x_minus)
        return cls(centre=0.5 * (x_plus + x_minus), chord=x_plus - x_minus)

    def endpoints(self):
        """Return (x_plus, x_minus) = (x + xi/2, x - xi/2)."""
        half = 0.5 * self.chord
        return self.centre + half, self.centre - half


def symplectic_defect(m):
    """Max-norm deviation of ``m`` from symplecticity: |M^T J M - J|."""
    m = np.asarray(m, dtype=float)
    j = _j_matrix(m.shape[-1])
    return float(np.max(np.abs(m.T @ j @ m - j)))


def assert_symplectic(m, tol=DEFAULT_TOL):
    """Raise ``ValueError`` unless M^T J M = J and det M = 1 within ``tol``."""
    defect = symplectic_defect(m)
    det = float(np.linalg.det(np.asarray(m, dtype=float)))
    if defect > tol or abs(det - 1.0) > tol:
        raise ValueError(
            f"matrix is not symplectic: |M^T J M - J| = {defect:.3e}, det M = {det:.15g}"
        )


def cayley_monodromy(b, tol=DEFAULT_TOL):
    """Monodromy matrix from the Cayley parametrization M = (I + JB)^-1 (I - JB).

    ``b`` is the symmetric Cayley matrix (half the Hessian of the centre
    action).  Singular I + JB signals a caustic and raises
    :class:`CausticError`.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] % 2 != 0:
        raise ValueError(f"Cayley matrix must be square with even size, got {b.shape}")
    if np.max(np.abs(b - b.T)) > 1e-12 * max(1.0, np.max(np.abs(b))):
        raise ValueError("Cayley matrix must be symmetric")
    two_n = b.shape[0]
    jb = _j_matrix(two_n) @ b
    lhs = np.eye(two_n) + jb
    det = np.linalg.det(lhs)
    if abs(det) < 1e-13:
        raise CausticError(f"I + JB is singular (det = {det:.3e}): caustic")
    m = np.linalg.solve(lhs, np.eye(two_n) - jb)
    assert_symplectic(m, tol=tol)
    return m
