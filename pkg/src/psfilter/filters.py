"""Constructors for the postselection filter families.

A filter is a POVM element F with 0 <= F <= 1 together with a Kraus factor K
satisfying F = K^dag K.  Constructors canonicalize K to the Hermitian square
root of F unless the family itself specifies a factorization; the left unitary
freedom in K never changes postselection probabilities or Fisher information.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import UsefulSubspace, decode_complex_matrix, encode_complex_matrix
from .errors import InvalidFilterError, InvalidInputError
from .linalg import check_density_matrix, hermitian_sqrt, outer

FILTER_SPECTRUM_TOL = 1e-10


@dataclass(frozen=True)
class Filter:
    """POVM element F and a Kraus factor K with F = K^dag K."""

    f: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex)
        k = np.asarray(self.k, dtype=complex)
        w = np.linalg.eigvalsh((f + f.conj().T) / 2.0)
        if w[0] < -FILTER_SPECTRUM_TOL or w[-1] > 1.0 + FILTER_SPECTRUM_TOL:
            raise InvalidFilterError(
                f"filter spectrum [{w[0]:.6g}, {w[-1]:.6g}] outside [0, 1]")
        if np.max(np.abs(k.conj().T @ k - f)) > FILTER_SPECTRUM_TOL:
            raise InvalidFilterError("Kraus factor does not reproduce F = K^dag K")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "k", k)

    @property
    def dimension(self) -> int:
        return self.f.shape[0]


def _filter_from_povm(f: np.ndarray) -> Filter:
    f = (np.asarray(f, dtype=complex) + np.asarray(f, dtype=complex).conj().T) / 2.0
    return Filter(f=f, k=hermitian_sqrt(f, tol=FILTER_SPECTRUM_TOL))


@dataclass(frozen=True)
class DiagonalFilterParams:
    """Eigenvalues of the diagonal family: p on the state, B on the rest of the
    useful subspace, D on its complement."""

    p_theta: float
    b: float
    d: float

    def __post_init__(self):
        for name, val in (("p_theta", self.p_theta), ("b", self.b), ("d", self.d)):
            if not 0.0 <= val <= 1.0:
                raise InvalidInputError(f"{name} must be in [0, 1], got {val!r}")


@dataclass(frozen=True)
class QubitFilterParams:
    """Qubit Kraus factorization K = diag(a, b) @ W with W in SU(2)."""

    a: float
    b: float
    gamma: complex
    beta: complex

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0 and 0.0 <= self.b <= 1.0):
            raise InvalidInputError("singular values must lie in [0, 1]")
        norm = abs(self.gamma) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise InvalidInputError(f"|gamma|^2 + |beta|^2 = {norm!r} != 1")


def jal_filter(rho0: np.ndarray, t2: float) -> Filter:
    """F = (t^2 - 1) rho0 + 1: transmits the expected state with probability t^2
    and anything orthogonal to it with probability 1."""
    if not 0.0 <= t2 <= 1.0:
        raise InvalidInputError(f"t^2 must be in [0, 1], got {t2!r}")
    rho0 = check_density_matrix(rho0)
    d = rho0.shape[0]
    return _filter_from_povm((t2 - 1.0) * rho0 + np.eye(d, dtype=complex))


def diagonal_family_filter(psi: np.ndarray, subspace: UsefulSubspace,
                           params: DiagonalFilterParams) -> Filter:
    """F = (p - B)|psi><psi| + B Pi_u + D Pi_n."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    f = ((params.p_theta - params.b) * outer(psi)
         + params.b * subspace.pi_u + params.d * subspace.pi_n)
    return _filter_from_povm(f)


def optimal_noiseless_filter(psi: np.ndarray, subspace: UsefulSubspace, p_ps: float,
                             c_block: np.ndarray | None = None,
                             d_block: np.ndarray | None = None) -> Filter:
    """General lossless-compression filter at postselection probability p_ps.

    In the adapted basis (psi first, then the rest of the useful subspace, then
    its complement) the useful block is diag(p_ps, 1, ..., 1); ``c_block``
    (u x (d-u)) and ``d_block`` ((d-u) x (d-u)) fill the remaining blocks and
    default to 0 and the identity.  Assemblies leaving [0, 1] are rejected.
    """
    if not 0.0 < p_ps <= 1.0:
        raise InvalidInputError(f"p_ps must be in (0, 1], got {p_ps!r}")
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    d, u = subspace.d, subspace.u
    n = d - u
    c_block = np.zeros((u, n), dtype=complex) if c_block is None else np.asarray(c_block, dtype=complex)
    d_block = np.eye(n, dtype=complex) if d_block is None else np.asarray(d_block, dtype=complex)
    if c_block.shape != (u, n) or d_block.shape != (n, n):
        raise InvalidInputError(
            f"block shapes {c_block.shape}/{d_block.shape} do not match (u={u}, d={d})")
    if np.max(np.abs(subspace.basis[:, 0] - psi)) > 1e-10:
        raise InvalidInputError("subspace basis must start with the supplied state")
    fa = np.zeros((d, d), dtype=complex)
    fa[:u, :u] = np.eye(u)
    fa[0, 0] = p_ps
    fa[:u, u:] = c_block
    fa[u:, :u] = c_block.conj().T
    fa[u:, u:] = d_block
    w = np.column_stack([subspace.basis, subspace.basis_perp])
    return _filter_from_povm(w @ fa @ w.conj().T)


def qubit_filter(params: QubitFilterParams) -> Filter:
    """K = diag(a, b) @ W with W = [[gamma, -beta*], [beta, gamma*]]; F = W^dag D^2 W."""
    dmat = np.diag([params.a, params.b]).astype(complex)
    w = np.array([[params.gamma, -np.conj(params.beta)],
                  [params.beta, np.conj(params.gamma)]], dtype=complex)
    k = dmat @ w
    return Filter(f=k.conj().T @ k, k=k)


def offdiag_qutrit_filter(t: float, b: float) -> Filter:
    """Qutrit Kraus coupling the no-information direction into the state direction.

    K = [[t, 0, b], [0, 1, 0], [0, 0, 0]] in the (state, derivative, rest)
    basis; F = K^dag K has eigenvalues {0, 1, t^2 + b^2}, so validity requires
    0 <= b <= sqrt(1 - t^2).
    """
    if not 0.0 <= t <= 1.0:
        raise InvalidInputError(f"t must be in [0, 1], got {t!r}")
    bmax = np.sqrt(max(0.0, 1.0 - t * t))
    if not 0.0 <= b <= bmax + 1e-12:
        raise InvalidInputError(f"off-diagonal term {b!r} outside [0, {bmax!r}]")
    k = np.array([[t, 0.0, b], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]], dtype=complex)
    return Filter(f=k.conj().T @ k, k=k)


def naive_filter(d: int, p_max: float) -> Filter:
    """Blind attenuation F = P_max * identity: keeps a constant fraction of states."""
    if not 0.0 <= p_max <= 1.0:
        raise InvalidInputError(f"P_max must be in [0, 1], got {p_max!r}")
    eye = np.eye(d, dtype=complex)
    return Filter(f=p_max * eye, k=np.sqrt(p_max) * eye)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def filter_to_dict(flt: Filter) -> dict:
    return {"F": encode_complex_matrix(flt.f), "K": encode_complex_matrix(flt.k)}


def filter_from_dict(data: dict) -> Filter:
    try:
        f = decode_complex_matrix(data["F"])
        k = decode_complex_matrix(data["K"])
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"bad filter payload: {exc}") from exc
    return Filter(f=f, k=k)


def save_filter(flt: Filter, path) -> None:
    Path(path).write_text(json.dumps(filter_to_dict(flt), indent=2, sort_keys=True))


def load_filter(path) -> Filter:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read filter file {path}: {exc}") from exc
    return filter_from_dict(data)
