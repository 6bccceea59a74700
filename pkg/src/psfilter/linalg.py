"""Small dense-matrix helpers used throughout: validation, roots, projections.

All operators are plain ``numpy`` complex arrays; these helpers centralize the
tolerance conventions so every module agrees on what counts as Hermitian,
positive, or trace-one.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10


def as_complex_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    return m


def as_state_vector(v, tol: float = HERMITIAN_TOL) -> np.ndarray:
    psi = np.asarray(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(psi)):
        raise InvalidInputError("state vector has non-finite entries")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > max(tol, 1e-12):
        raise InvalidInputError(f"state vector is not normalized: |psi| = {norm!r}")
    return psi


def hermiticity_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    a = as_complex_matrix(a)
    defect = hermiticity_defect(a)
    if defect > tol:
        raise InvalidInputError(f"{name} is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    return a


def check_density_matrix(rho, herm_tol: float = HERMITIAN_TOL, psd_tol: float = PSD_TOL,
                         trace_tol: float = TRACE_TOL) -> np.ndarray:
    rho = check_hermitian(rho, herm_tol, name="density matrix")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise InvalidInputError(f"density matrix trace {tr!r} != 1")
    lo = float(np.min(np.linalg.eigvalsh(rho)))
    if lo < -psd_tol:
        raise InvalidInputError(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


def check_povm_element(f, tol: float = PSD_TOL, name: str = "POVM element") -> np.ndarray:
    """Require 0 <= F <= 1 up to ``tol`` on the spectrum."""
    f = check_hermitian(f, max(tol, HERMITIAN_TOL), name=name)
    w = np.linalg.eigvalsh(f)
    if w[0] < -tol or w[-1] > 1.0 + tol:
        raise InvalidInputError(
            f"{name} spectrum [{w[0]:.6g}, {w[-1]:.6g}] is outside [0, 1]")
    return f


def hermitian_sqrt(f: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Unique PSD square root of a PSD Hermitian matrix.

    Eigenvalues in [-tol, 0) are clipped to zero; more negative ones raise.
    """
    f = check_hermitian(f, max(tol, HERMITIAN_TOL), name="matrix for sqrt")
    w, v = np.linalg.eigh(f)
    if w[0] < -tol:
        raise InvalidInputError(f"matrix is not PSD (eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def projector(columns: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of ``columns`` (assumed orthonormal)."""
    return columns @ columns.conj().T


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def outer(u: np.ndarray, v: np.ndarray | None = None) -> np.ndarray:
    """|u><v| (|u><u| when v is omitted)."""
    if v is None:
        v = u
    return np.outer(u, v.conj())


def random_haar_state(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (z + z.conj().T) / 2.0
    # normalize to unit spectral norm so finite-difference steps stay well scaled
    nrm = np.linalg.norm(h, 2)
    if nrm > 0:
        h = h / nrm
    return scale * h


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
