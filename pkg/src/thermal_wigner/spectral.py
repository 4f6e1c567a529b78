"""Exact quantum ground truth by finite oscillator-basis diagonalization.

One-degree-of-freedom polynomial Hamiltonians are assembled from ladder
operator representations of p and q in the eigenbasis of
p^2/2 + omega_b^2 q^2/2 (the basis frequency omega_b is a squeeze knob;
omega_b = 1 is the isotropic Fock basis).  Mixed p-q monomials are Weyl
symmetrized on assembly (McCoy),

    W(p^i q^j) = 2^(-j) sum_r C(j, r) q^r p^i q^(j-r),

so the operator's Weyl symbol matches the classical polynomial by
construction.  Matrices are diagonalized by cyclic Jacobi rotations;
complex Hermitian matrices (odd powers of p) go through the standard real
embedding [[R, -A], [A, R]].

The Kerr model bypasses matrix assembly: its quantum Hamiltonian is taken
as the square of the oscillator Hamiltonian, E_j = [hbar omega (j+1/2)]^2
with Fock eigenvectors (exact).  Note the Weyl symbol of that operator
differs from the classical square at O(hbar^2).

Wigner functions of eigenstates and of the thermal mixture are computed by
direct chord quadrature of Hermite-function wavefunctions, one code path
for every model.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BasisSizeError, ResolutionError, TruncationError
from .fields import ThermalField, grid_integral
from .models import Kerr, PolynomialPQ, Quadratic

__all__ = [
    "SpectralDecomposition",
    "jacobi_eigh",
    "ladder_matrices",
    "weyl_monomial_operator",
    "model_operator",
    "diagonalize",
    "hermite_functions",
    "wavefunctions",
    "spectral_partition",
    "spectral_average",
    "spectral_heat_capacity",
    "pure_state_wigner",
    "spectral_thermal_wigner",
    "wigner_point_values",
    "spectral_weyl_exponential",
]

MAX_BASIS = 2000
TAIL_FRACTION = 0.2
TAIL_WEIGHT_LIMIT = 1e-8
TRUNCATION_SAFETY = 40.0


# ---------------------------------------------------------------------------
# eigensolver


def jacobi_eigh(matrix, tol=1e-13, max_sweeps=60):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi.

    Cyclic-by-row sweeps with the usual small-rotation threshold; returns
    (eigenvalues ascending, orthonormal eigenvector columns).
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if np.max(np.abs(a - a.T)) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise ValueError("matrix must be symmetric")
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    eps = np.finfo(float).eps
    for sweep in range(max_sweeps):
        off = math.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        thresh = 0.2 * off / (n * n) if sweep < 3 else 0.0
        for p in range(n - 1):
            row_p = a[p]
            for q in range(p + 1, n):
                apq = row_p[q]
                abs_apq = abs(apq)
                if abs_apq <= thresh:
                    continue
                diag_scale = abs(a[p, p]) + abs(a[q, q])
                if abs_apq < eps * diag_scale:
                    a[p, q] = a[q, p] = 0.0
                    continue
                diff = a[q, q] - a[p, p]
                if abs_apq * 1e12 < abs(diff):
                    t = apq / diff
                else:
                    phi = 0.5 * diff / apq
                    t = np.sign(phi) / (abs(phi) + math.sqrt(1.0 + phi * phi))
                    if phi == 0.0:
                        t = 1.0
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
                row_p = a[p]
        else:
            continue
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _hermitian_eigh(hmat, tol=1e-13):
    """Eigenpairs of a Hermitian matrix via Jacobi on the real embedding."""
    r = hmat.real
    a = hmat.imag
    scale = max(1.0, np.max(np.abs(hmat)))
    if np.max(np.abs(a)) < 1e-13 * scale:
        return jacobi_eigh(r, tol=tol)
    m = np.block([[r, -a], [a, r]])
    w2, v2 = jacobi_eigh(m, tol=tol)
    n = hmat.shape[0]
    idx = np.arange(0, 2 * n, 2)  # doubled spectrum: keep one of each pair
    w = w2[idx]
    vecs = v2[:n, idx] + 1j * v2[n:, idx]
    norms = np.linalg.norm(vecs, axis=0)
    vecs = vecs / norms
    # canonical phase: largest component real positive
    lead = np.argmax(np.abs(vecs), axis=0)
    phases = vecs[lead, np.arange(vecs.shape[1])]
    vecs = vecs * np.conj(phases / np.abs(phases))
    # re-orthogonalize inside (numerically) degenerate clusters
    for start in range(len(w)):
        if start > 0 and abs(w[start] - w[start - 1]) < 1e-9 * max(1.0, abs(w[start])):
            prev = vecs[:, start - 1]
            cur = vecs[:, start] - prev * (prev.conj() @ vecs[:, start])
            vecs[:, start] = cur / np.linalg.norm(cur)
    return w, vecs


# ---------------------------------------------------------------------------
# operator assembly


def ladder_matrices(basis_size, hbar=1.0, omega_b=1.0):
    """Matrices of q and p in the omega_b oscillator basis (p is complex)."""
    n = np.arange(1, basis_size)
    root = np.sqrt(n.astype(float))
    q = np.zeros((basis_size, basis_size), dtype=complex)
    q[n - 1, n] = root  # annihilation part
    q[n, n - 1] = root  # creation part
    q *= math.sqrt(hbar / (2.0 * omega_b))
    p = np.zeros((basis_size, basis_size), dtype=complex)
    p[n - 1, n] = -1j * root
    p[n, n - 1] = 1j * root
    p *= math.sqrt(hbar * omega_b / 2.0)
    return q, p


def weyl_monomial_operator(i, j, qmat, pmat):
    """Weyl-symmetrized operator of the monomial p^i q^j (McCoy's formula)."""
    n = qmat.shape[0]
    p_pow = np.eye(n, dtype=complex)
    for _ in range(i):
        p_pow = p_pow @ pmat
    q_pows = [np.eye(n, dtype=complex)]
    for _ in range(j):
        q_pows.append(q_pows[-1] @ qmat)
    total = np.zeros((n, n), dtype=complex)
    for r in range(j + 1):
        total += math.comb(j, r) * (q_pows[r] @ p_pow @ q_pows[j - r])
    return total / 2.0**j


def _model_terms(model):
    if isinstance(model, PolynomialPQ):
        return model.terms
    if isinstance(model, Quadratic):
        if model.dof != 1:
            raise ValueError("spectral oracle supports a single degree of freedom")
        m = model.matrix
        return ((0.5 * m[0, 0], 2, 0), (m[0, 1], 1, 1), (0.5 * m[1, 1], 0, 2))
    raise TypeError(f"cannot assemble an operator for {type(model).__name__}")


def model_operator(model, basis_size, hbar=1.0, omega_b=1.0):
    """Hermitian matrix of the Weyl quantization of the model Hamiltonian."""
    qmat, pmat = ladder_matrices(basis_size, hbar=hbar, omega_b=omega_b)
    h = np.zeros((basis_size, basis_size), dtype=complex)
    for c, i, j in _model_terms(model):
        if c != 0.0:
            h += c * weyl_monomial_operator(i, j, qmat, pmat)
    defect = np.max(np.abs(h - h.conj().T))
    if defect > 1e-12 * max(1.0, np.max(np.abs(h))):
        raise AssertionError(f"assembled operator not Hermitian: defect {defect:.3e}")
    return 0.5 * (h + h.conj().T)


# ---------------------------------------------------------------------------
# decomposition


@dataclass(frozen=True)
class SpectralDecomposition:
    """Converged eigenvalues and oscillator-basis eigenvector coefficients."""

    basis_size: int
    hbar: float
    omega_b: float
    energies: np.ndarray  # (n_levels,), non-decreasing
    coefficients: np.ndarray  # (basis_size, n_levels)

    @property
    def n_levels(self):
        return len(self.energies)


_DECOMP_CACHE = {}


def diagonalize(model, basis_size, hbar=1.0, omega_b=1.0, n_report=None, cache=True):
    """Diagonalize a model in the oscillator basis; exact rule for Kerr.

    Reports the lowest ``n_report`` levels (default basis_size // 4), each
    required to pass the basis-tail test: the last 20% of basis states must
    carry under 1e-8 of every reported eigenvector's weight, else
    :class:`BasisSizeError` suggests a larger basis.
    """
    if model.dof != 1:
        raise ValueError("spectral oracle supports a single degree of freedom")
    if basis_size > MAX_BASIS:
        raise ValueError(f"basis_size {basis_size} exceeds the {MAX_BASIS} cap")
    if n_report is None:
        n_report = max(1, basis_size // 4)
    key = (model.key(), basis_size, float(hbar), float(omega_b), n_report)
    if cache and key in _DECOMP_CACHE:
        return _DECOMP_CACHE[key]

    if isinstance(model, Kerr):
        if omega_b != 1.0:
            raise ValueError("the exact Kerr rule requires the isotropic basis omega_b = 1")
        j = np.arange(n_report)
        energies = (hbar * model.omega * (j + 0.5)) ** 2
        coeffs = np.zeros((basis_size, n_report))
        coeffs[j, j] = 1.0
    else:
        h = model_operator(model, basis_size, hbar=hbar, omega_b=omega_b)
        w, v = _hermitian_eigh(h) if np.max(np.abs(h.imag)) > 0 else jacobi_eigh(h.real)
        energies = np.asarray(w[:n_report], dtype=float)
        coeffs = np.asarray(v[:, :n_report])
        tail = int(math.ceil(TAIL_FRACTION * basis_size))
        tail_mass = np.sum(np.abs(coeffs[basis_size - tail :, :]) ** 2, axis=0)
        if np.any(tail_mass >= TAIL_WEIGHT_LIMIT):
            worst = int(np.argmax(tail_mass))
            raise BasisSizeError(
                f"basis too small: level {worst} keeps {tail_mass[worst]:.2e} of its "
                f"weight in the top {tail} basis states",
                suggested_size=2 * basis_size,
            )
    decomp = SpectralDecomposition(
        basis_size=basis_size,
        hbar=float(hbar),
        omega_b=float(omega_b),
        energies=energies,
        coefficients=coeffs,
    )
    if cache:
        _DECOMP_CACHE[key] = decomp
    return decomp


# ---------------------------------------------------------------------------
# spectral sums


def _truncation_guard(decomp, beta, enforce=True):
    be = beta * float(decomp.energies[-1])
    if enforce and be <= TRUNCATION_SAFETY:
        raise TruncationError(
            f"unsafe truncation: beta * E_max = {be:.3g} <= {TRUNCATION_SAFETY}; "
            "increase the basis or the number of reported levels"
        )


def spectral_partition(decomp, beta, enforce_truncation=True):
    """Partition function sum over converged levels."""
    _truncation_guard(decomp, beta, enforce_truncation)
    return float(np.sum(np.exp(-beta * decomp.energies)))


def spectral_average(decomp, beta, observable="H", enforce_truncation=True):
    """Thermal average of H or H^2 from the exact spectrum."""
    _truncation_guard(decomp, beta, enforce_truncation)
    w = np.exp(-beta * (decomp.energies - decomp.energies[0]))
    z = np.sum(w)
    if observable == "H":
        return float(np.sum(decomp.energies * w) / z)
    if observable == "H2":
        return float(np.sum(decomp.energies**2 * w) / z)
    raise ValueError("spectral averages support observable 'H' or 'H2'")


def spectral_heat_capacity(decomp, beta, k_b=1.0, enforce_truncation=True):
    """Heat capacity k_B beta^2 (<H^2> - <H>^2) from the exact spectrum."""
    mean = spectral_average(decomp, beta, "H", enforce_truncation)
    second = spectral_average(decomp, beta, "H2", enforce_truncation)
    return k_b * beta**2 * (second - mean**2)


# ---------------------------------------------------------------------------
# wavefunctions and Wigner transforms


def hermite_functions(q, n_max, hbar=1.0, omega_b=1.0):
    """Hermite functions phi_0 .. phi_{n_max-1} on points q, shape (len(q), n_max)."""
    q = np.asarray(q, dtype=float)
    u = q * math.sqrt(omega_b / hbar)
    out = np.empty((q.size, n_max))
    out[:, 0] = (omega_b / (math.pi * hbar)) ** 0.25 * np.exp(-0.5 * u * u)
    if n_max > 1:
        out[:, 1] = math.sqrt(2.0) * u * out[:, 0]
    for n in range(1, n_max - 1):
        out[:, n + 1] = math.sqrt(2.0 / (n + 1)) * u * out[:, n] - math.sqrt(
            n / (n + 1)
        ) * out[:, n - 1]
    return out


def wavefunctions(decomp, q):
    """Position wavefunctions of the reported eigenstates, shape (len(q), n_levels)."""
    phi = hermite_functions(q, decomp.basis_size, hbar=decomp.hbar, omega_b=decomp.omega_b)
    return phi @ decomp.coefficients


def _significant_basis_order(decomp, level_mask=None):
    coeffs = decomp.coefficients if level_mask is None else decomp.coefficients[:, level_mask]
    mass = np.max(np.abs(coeffs) ** 2, axis=1)
    keep = np.flatnonzero(mass > 1e-16)
    return int(keep[-1]) + 1 if keep.size else 1


def _support_radius(decomp, n_eff):
    width = math.sqrt(decomp.hbar / decomp.omega_b)
    return math.sqrt(decomp.hbar * (2 * n_eff + 1) / decomp.omega_b) + 5.0 * width


def _chord_axis(q_lo, q_hi, nq, support, p_max, hbar):
    """Uniform axis containing the nq field points and covering the support.

    Returns (axis, field_index, refine) with spacing dq_f / refine chosen to
    resolve wavefunction oscillations up to momentum p_max.
    """
    dq_f = (q_hi - q_lo) / (nq - 1)
    needed = math.pi * hbar / (4.0 * max(p_max, 1e-12))
    refine = max(1, int(math.ceil(dq_f / needed)))
    dq = dq_f / refine
    k_lo = int(math.ceil((q_lo + support) / dq))  # points below q_lo
    k_hi = int(math.ceil((support - q_hi) / dq))
    k_lo = max(k_lo, 0)
    k_hi = max(k_hi, 0)
    n_ext = k_lo + (nq - 1) * refine + k_hi + 1
    axis = q_lo + (np.arange(n_ext) - k_lo) * dq
    field_index = k_lo + np.arange(nq) * refine
    return axis, field_index, dq


def _wigner_from_density(rho, axis_dq, field_index, p_values, hbar):
    """Wigner transform of a position density matrix at the field q rows.

    rho is (n_ext, n_ext) on the uniform axis; the chord variable runs over
    s = 2 dq k so q +/- s/2 stays on the axis.
    """
    n_ext = rho.shape[0]
    pad = n_ext
    padded = np.zeros((n_ext + 2 * pad, n_ext + 2 * pad), dtype=rho.dtype)
    padded[pad : pad + n_ext, pad : pad + n_ext] = rho
    k = np.arange(-n_ext, n_ext + 1)
    rows = field_index[:, None] + pad
    r = padded[rows + k[None, :], rows - k[None, :]]
    phase = np.exp(-2j * axis_dq * np.outer(k, p_values) / hbar)
    w = (2.0 * axis_dq / (2.0 * math.pi * hbar)) * (r @ phase)
    return np.real(w)


def pure_state_wigner(decomp, level, grid):
    """Wigner function of one reported eigenstate sampled on ``grid``."""
    if not 0 <= level < decomp.n_levels:
        raise ValueError(f"level {level} not in the reported range")
    n_eff = _significant_basis_order(decomp)
    support = _support_radius(decomp, n_eff)
    p_max = math.sqrt(decomp.hbar * decomp.omega_b * (2 * n_eff + 1))
    axis, field_index, dq = _chord_axis(
        grid.qmin, grid.qmax, grid.nq, support, p_max, decomp.hbar
    )
    psi = wavefunctions(decomp, axis)[:, level]
    rho = np.outer(psi, np.conj(psi))
    w = _wigner_from_density(rho, dq, field_index, grid.p_axis(), decomp.hbar)
    return w.T  # (np, nq): transform gives (nq rows, np cols)


def spectral_thermal_wigner(decomp, beta, grid, enforce_truncation=True):
    """Normalized thermal Wigner function on ``grid`` from the spectral sum."""
    _truncation_guard(decomp, beta, enforce_truncation)
    w_rel = np.exp(-beta * (decomp.energies - decomp.energies[0]))
    w_rel = w_rel / np.sum(w_rel)
    keep = w_rel > 1e-18
    n_eff = _significant_basis_order(decomp, level_mask=keep)
    support = _support_radius(decomp, n_eff)
    p_max = math.sqrt(decomp.hbar * decomp.omega_b * (2 * n_eff + 1))
    axis, field_index, dq = _chord_axis(
        grid.qmin, grid.qmax, grid.nq, support, p_max, decomp.hbar
    )
    psi = wavefunctions(decomp, axis)[:, keep]
    rho = (psi * w_rel[keep]) @ np.conj(psi).T
    values = _wigner_from_density(rho, dq, field_index, grid.p_axis(), decomp.hbar).T
    total = grid_integral(grid, values)
    if abs(total - 1.0) > 1e-2:
        raise ResolutionError(
            f"grid too coarse for the spectral Wigner sum: integral {total:.5f}"
        )
    return ThermalField(
        grid=grid,
        values=values / total,
        method="spectral",
        beta=beta,
        hbar=decomp.hbar,
        normalized=True,
        meta={"basis_size": decomp.basis_size, "n_levels": int(decomp.n_levels)},
    )


def wigner_point_values(decomp, points, n_chord=2400):
    """W_j at arbitrary phase-space points, shape (n_points, n_levels).

    Single-point chord quadrature; used for point-wise oracle comparisons.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n_eff = _significant_basis_order(decomp)
    support = _support_radius(decomp, n_eff)
    out = np.empty((points.shape[0], decomp.n_levels))
    for row, (p, q) in enumerate(points):
        s_max = 2.0 * (support + abs(q))
        s = np.linspace(-s_max, s_max, n_chord)
        psi_plus = wavefunctions(decomp, q + 0.5 * s)
        psi_minus = wavefunctions(decomp, q - 0.5 * s)
        integrand = psi_plus * np.conj(psi_minus) * np.exp(-1j * p * s / decomp.hbar)[:, None]
        vals = np.trapezoid(integrand, s, axis=0) if hasattr(np, "trapezoid") else np.trapz(
            integrand, s, axis=0
        )
        out[row] = np.real(vals) / (2.0 * math.pi * decomp.hbar)
    return out


def spectral_weyl_exponential(decomp, beta, points, enforce_truncation=True):
    """Non-normalized thermal Weyl symbol (2 pi hbar)^N sum_j e^{-beta E_j} W_j."""
    _truncation_guard(decomp, beta, enforce_truncation)
    w_j = wigner_point_values(decomp, points)
    weights = np.exp(-beta * decomp.energies)
    return (2.0 * math.pi * decomp.hbar) * (w_j @ weights)
