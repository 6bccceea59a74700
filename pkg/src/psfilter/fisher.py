"""Quantum and classical Fisher information.

The mixed-state QFIM is computed in the eigenbasis of rho,

    I_ij = 2 sum_{n,m} <n|d_j rho|m><m|d_i rho|n> / (lambda_n + lambda_m),

restricted to eigenvalue pairs above a relative cutoff.  Pure postselected
states get the direct inner-product form, which serves as an independent
cross-check of the eigenbasis path.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, PostselectionError, SingularQFIMError
from .linalg import check_hermitian

DEFAULT_EIG_CUTOFF = 1e-12
PROB_FLOOR = 1e-14


def _eigbasis_weights(rho: np.ndarray, eig_cutoff: float):
    w, v = np.linalg.eigh(rho)
    scale = max(float(w[-1]), 0.0)
    pair_sum = w[:, None] + w[None, :]
    mask = pair_sum > eig_cutoff * scale if scale > 0 else np.zeros_like(pair_sum, dtype=bool)
    if not np.any(mask):
        raise InvalidInputError("all eigenvalue pairs fall below the QFIM cutoff")
    weights = np.zeros_like(pair_sum)
    weights[mask] = 2.0 / pair_sum[mask]
    return w, v, weights


def qfim_mixed(rho: np.ndarray, drhos, eig_cutoff: float = DEFAULT_EIG_CUTOFF) -> np.ndarray:
    """QFIM of a (generally mixed) state from its eigendecomposition.

    ``drhos`` are the Hermitian parameter derivatives of rho, supplied
    explicitly so analytic and finite-difference pipelines share this path.
    """
    rho = check_hermitian(rho, tol=1e-10, name="rho")
    ds = [check_hermitian(dr, tol=1e-8, name="drho") for dr in drhos]
    _, v, weights = _eigbasis_weights(rho, eig_cutoff)
    a = [v.conj().T @ dr @ v for dr in ds]
    m = len(ds)
    out = np.empty((m, m), dtype=float)
    for i in range(m):
        for j in range(i, m):
            val = np.sum(weights * a[j] * a[i].T).real
            out[i, j] = val
            out[j, i] = val
    return (out + out.T) / 2.0


def sld(rho: np.ndarray, drho: np.ndarray, eig_cutoff: float = DEFAULT_EIG_CUTOFF) -> np.ndarray:
    """Symmetric logarithmic derivative: (1/2)(L rho + rho L) = drho on supp(rho).

    Matrix elements in the eigenbasis are 2 <n|drho|m>/(lambda_n + lambda_m),
    zeroed where the eigenvalue pair falls below the cutoff.
    """
    rho = check_hermitian(rho, tol=1e-10, name="rho")
    drho = check_hermitian(drho, tol=1e-8, name="drho")
    _, v, weights = _eigbasis_weights(rho, eig_cutoff)
    lam = weights * (v.conj().T @ drho @ v)
    out = v @ lam @ v.conj().T
    return (out + out.conj().T) / 2.0


def qfim_pure(psi: np.ndarray, dpsis) -> np.ndarray:
    """Pure-state QFIM: 4 Re[<d_i|d_j> - <d_i|psi><psi|d_j>]."""
    d = np.column_stack([np.asarray(dp, dtype=complex).reshape(-1) for dp in dpsis])
    g = d.conj().T @ d
    v = psi.conj() @ d
    out = 4.0 * (g - np.outer(v.conj(), v)).real
    return (out + out.T) / 2.0


def qfim_pure_postselected(psi: np.ndarray, dpsis, f: np.ndarray) -> np.ndarray:
    """QFIM of the conditional pure state after passing the filter F.

    I_ij = 4 Re[ <d_i|F|d_j>/P - <d_i|F|psi><psi|F|d_j>/P^2 ],  P = <psi|F|psi>.
    """
    f = check_hermitian(f, tol=1e-10, name="filter")
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    d = np.column_stack([np.asarray(dp, dtype=complex).reshape(-1) for dp in dpsis])
    p = float((psi.conj() @ f @ psi).real)
    if p < PROB_FLOOR:
        raise PostselectionError(f"postselection probability {p:.3e} is degenerate")
    fd = f @ d
    g = d.conj().T @ fd
    v = psi.conj() @ fd
    out = 4.0 * (g / p - np.outer(v.conj(), v) / p**2).real
    return (out + out.T) / 2.0


def qfim_reduced(rho_u: np.ndarray, drho_u: np.ndarray,
                 eig_cutoff: float = DEFAULT_EIG_CUTOFF) -> float:
    """Single-parameter QFI of rho' / Tr[rho'] computed on the unnormalized pair.

    With L' solving (1/2){L', rho'} = drho',

        I = ( Tr[drho' L'] - (Tr drho')^2 / P ) / P,   P = Tr[rho'],

    which equals the QFI of the normalized state.
    """
    rho_u = check_hermitian(rho_u, tol=1e-10, name="rho'")
    drho_u = check_hermitian(drho_u, tol=1e-8, name="drho'")
    p = float(np.trace(rho_u).real)
    if p <= PROB_FLOOR:
        raise InvalidInputError(f"unnormalized state has vanishing trace {p:.3e}")
    lam = sld(rho_u, drho_u, eig_cutoff)
    info = float(np.trace(drho_u @ lam).real)
    correction = float(np.trace(drho_u).real) ** 2 / p
    return (info - correction) / p


def classical_fim(povm, rho: np.ndarray, drhos, prob_floor: float = PROB_FLOOR,
                  completeness_tol: float = 1e-10) -> np.ndarray:
    """Fisher information of the outcome distribution p(k) = Tr[F_k rho]."""
    rho = check_hermitian(rho, tol=1e-10, name="rho")
    elements = [check_hermitian(f, tol=1e-10, name="POVM element") for f in povm]
    total = sum(elements)
    if np.max(np.abs(total - np.eye(rho.shape[0]))) > completeness_tol:
        raise InvalidInputError("POVM elements do not sum to the identity")
    for f in elements:
        if np.min(np.linalg.eigvalsh(f)) < -1e-10:
            raise InvalidInputError("POVM element is not PSD")
    m = len(drhos)
    out = np.zeros((m, m), dtype=float)
    for f in elements:
        p = float(np.trace(f @ rho).real)
        if p <= prob_floor:
            continue
        dp = np.array([float(np.trace(f @ dr).real) for dr in drhos])
        out += np.outer(dp, dp) / p
    return (out + out.T) / 2.0


def crb(qfim: np.ndarray, singular_tol: float = 1e-12) -> np.ndarray:
    """Inverse QFIM (the covariance lower bound for one probe copy).

    A singular QFIM raises SingularQFIMError carrying the null-space basis of
    unidentifiable parameter directions; for N copies divide the bound by N.
    """
    qfim = np.asarray(qfim, dtype=float)
    w, v = np.linalg.eigh((qfim + qfim.T) / 2.0)
    if w[0] <= singular_tol:
        null = v[:, w <= singular_tol]
        raise SingularQFIMError(
            f"QFIM is singular (min eigenvalue {w[0]:.3e}); "
            f"{null.shape[1]} parameter combination(s) not identifiable", null)
    return (v / w) @ v.T
