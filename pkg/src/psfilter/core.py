"""Pure-state parameterized models, derivative machinery, and noise/postselection channels.

A model is a d-dimensional pure-state family theta -> U(theta)|psi0> with
U(theta) = exp(-i sum_k theta_k G_k) for Hermitian generators G_k.  Everything
downstream (Fisher information, filters, amplification) consumes the state and
its parameter derivatives produced here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, PostselectionError
from .linalg import (
    as_complex_matrix,
    as_state_vector,
    check_hermitian,
    check_povm_element,
    outer,
    random_haar_state,
    random_hermitian,
)

DEFAULT_FD_STEP = 1e-5
DEFAULT_RANK_TOL = 1e-10
PROB_FLOOR = 1e-14
COMMUTATOR_TOL = 1e-12


@dataclass(frozen=True)
class ParameterizedModel:
    """Pure-state family |psi_theta> = exp(-i sum_k theta_k G_k) |psi0>."""

    psi0: np.ndarray
    generators: tuple[np.ndarray, ...]

    def __post_init__(self):
        psi0 = as_state_vector(self.psi0)
        gens = tuple(check_hermitian(g, name="generator") for g in self.generators)
        if not gens:
            raise InvalidInputError("model needs at least one generator")
        for g in gens:
            if g.shape[0] != psi0.size:
                raise InvalidInputError(
                    f"generator shape {g.shape} does not match state dimension {psi0.size}")
        object.__setattr__(self, "psi0", psi0)
        object.__setattr__(self, "generators", gens)

    @property
    def dimension(self) -> int:
        return self.psi0.size

    @property
    def n_parameters(self) -> int:
        return len(self.generators)

    def generators_commute(self, tol: float = COMMUTATOR_TOL) -> bool:
        gs = self.generators
        for i in range(len(gs)):
            for j in range(i + 1, len(gs)):
                comm = gs[i] @ gs[j] - gs[j] @ gs[i]
                if np.max(np.abs(comm)) > tol:
                    return False
        return True


@dataclass(frozen=True)
class DerivativeDecomposition:
    """Split of |d psi> into i*x |psi> + alpha |perp>, with x real and alpha >= 0.

    ``null_perp`` marks derivatives parallel to |psi> (alpha below the floor);
    ``perp_state`` is None in that case.
    """

    x: float
    alpha: complex
    perp_state: np.ndarray | None
    null_perp: bool


@dataclass(frozen=True)
class UsefulSubspace:
    """Span of the state and its parameter derivatives.

    ``basis`` has the state itself as its first column; ``basis_perp`` spans the
    orthogonal complement.  ``pi_u + pi_n = identity``.
    """

    u: int
    basis: np.ndarray
    basis_perp: np.ndarray
    pi_u: np.ndarray
    pi_n: np.ndarray

    @property
    def d(self) -> int:
        return self.basis.shape[0]


def _theta_array(model: ParameterizedModel, theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float).reshape(-1)
    if th.size != model.n_parameters:
        raise InvalidInputError(
            f"theta has {th.size} entries, model has {model.n_parameters} parameters")
    if not np.all(np.isfinite(th)):
        raise InvalidInputError("theta has non-finite entries")
    return th


def evolution_operator(model: ParameterizedModel, theta) -> np.ndarray:
    """U(theta) via Hermitian eigendecomposition of sum_k theta_k G_k."""
    th = _theta_array(model, theta)
    h = np.zeros((model.dimension, model.dimension), dtype=complex)
    for t, g in zip(th, model.generators):
        h += t * g
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def evolve(model: ParameterizedModel, theta) -> np.ndarray:
    """Return U(theta)|psi0>, renormalized to kill rounding drift."""
    psi = evolution_operator(model, theta) @ model.psi0
    return psi / np.linalg.norm(psi)


def pure_density(psi: np.ndarray) -> np.ndarray:
    return outer(psi)


def model_density(model: ParameterizedModel, theta) -> np.ndarray:
    return pure_density(evolve(model, theta))


def _align_phase(reference: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Multiply psi by the phase making <reference|psi> real positive."""
    ov = np.vdot(reference, psi)
    if abs(ov) < 1e-300:
        return psi
    return psi * (abs(ov) / ov)


def derivative_state(model: ParameterizedModel, theta, j: int,
                     mode: str = "central", h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Parameter derivative |d_j psi_theta> (j is a 0-based parameter index).

    ``central`` differences the phase-aligned states at theta +/- h e_j, which
    pins the gauge so that <psi|d psi> = 0.  ``analytic`` returns the exact
    -i G_j U(theta)|psi0> and is only valid when the generators commute.
    """
    th = _theta_array(model, theta)
    if not 0 <= j < model.n_parameters:
        raise InvalidInputError(f"parameter index {j} out of range")
    if mode == "analytic":
        if not model.generators_commute():
            raise InvalidInputError(
                "analytic derivatives require commuting generators; use mode='central'")
        dpsi = -1j * (model.generators[j] @ evolve(model, th))
    elif mode == "central":
        if h <= 0:
            raise InvalidInputError(f"step must be positive, got {h!r}")
        psi = evolve(model, th)
        step = np.zeros_like(th)
        step[j] = h
        plus = _align_phase(psi, evolve(model, th + step))
        minus = _align_phase(psi, evolve(model, th - step))
        dpsi = (plus - minus) / (2.0 * h)
    else:
        raise InvalidInputError(f"unknown derivative mode {mode!r}")
    if not np.all(np.isfinite(dpsi)):
        raise InvalidInputError("derivative is non-finite")
    return dpsi


def derivative_states(model: ParameterizedModel, theta,
                      mode: str = "central", h: float = DEFAULT_FD_STEP) -> list[np.ndarray]:
    return [derivative_state(model, theta, j, mode=mode, h=h)
            for j in range(model.n_parameters)]


def decompose_derivative(psi: np.ndarray, dpsi: np.ndarray,
                         null_tol: float = 1e-14) -> DerivativeDecomposition:
    """Split a derivative vector as i*x|psi> + alpha|perp> with x real, alpha >= 0."""
    psi = as_state_vector(psi)
    dpsi = np.asarray(dpsi, dtype=complex).reshape(-1)
    ov = np.vdot(psi, dpsi)
    if abs(ov.real) > 1e-10:
        raise InvalidInputError(
            f"Re<psi|dpsi> = {ov.real:.3e}; not a norm-preserving derivative")
    x = float(ov.imag)
    residual = dpsi - ov * psi
    alpha = float(np.linalg.norm(residual))
    if alpha < null_tol:
        return DerivativeDecomposition(x=x, alpha=0.0 + 0.0j, perp_state=None, null_perp=True)
    return DerivativeDecomposition(x=x, alpha=complex(alpha),
                                   perp_state=residual / alpha, null_perp=False)


def useful_subspace(psi: np.ndarray, dpsis, rank_tol: float = DEFAULT_RANK_TOL) -> UsefulSubspace:
    """Orthonormal basis of span{psi, d_1 psi, ..., d_M psi}, psi first.

    The derivative residuals (after projecting out psi) are orthogonalized via
    SVD; directions with singular value below ``rank_tol`` times the largest
    singular value of the full input collection are discarded.
    """
    if rank_tol <= 0:
        raise InvalidInputError("rank_tol must be positive")
    psi = as_state_vector(psi)
    dlist = [np.asarray(dp, dtype=complex).reshape(-1) for dp in dpsis]
    if not dlist:
        raise InvalidInputError("useful_subspace needs at least one derivative vector")
    d = psi.size
    stack = np.column_stack([psi] + dlist)
    scale = np.linalg.svd(stack, compute_uv=False)[0]
    residuals = np.column_stack(dlist) - np.outer(psi, psi.conj() @ np.column_stack(dlist))
    uu, ss, _ = np.linalg.svd(residuals, full_matrices=False)
    keep = ss > rank_tol * scale
    basis = np.column_stack([psi, uu[:, keep]]) if np.any(keep) else psi.reshape(-1, 1)
    u = basis.shape[1]
    pi_u = basis @ basis.conj().T
    pi_n = np.eye(d, dtype=complex) - pi_u
    # complement basis from the full SVD of pi_n (deterministic ordering)
    if u < d:
        wn, vn = np.linalg.eigh(pi_n)
        basis_perp = vn[:, wn > 0.5][:, ::-1]
    else:
        basis_perp = np.zeros((d, 0), dtype=complex)
    return UsefulSubspace(u=u, basis=basis, basis_perp=basis_perp, pi_u=pi_u, pi_n=pi_n)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

def depolarize(rho: np.ndarray, eps: float) -> np.ndarray:
    """(1 - eps) rho + (eps/d) identity."""
    rho = as_complex_matrix(rho)
    if not 0.0 <= eps <= 1.0:
        raise InvalidInputError(f"noise strength must be in [0, 1], got {eps!r}")
    d = rho.shape[0]
    return (1.0 - eps) * rho + (eps / d) * np.trace(rho).real * np.eye(d, dtype=complex)


def postselect(rho: np.ndarray, kraus: np.ndarray,
               prob_floor: float = PROB_FLOOR) -> tuple[np.ndarray, float]:
    """Filter rho through the POVM element F = K^dag K, keeping the pass branch.

    Returns (K rho K^dag / p, p) with p = Tr[F rho].  A pass probability below
    ``prob_floor`` raises PostselectionError: the conditional state (and any
    Fisher information computed from it) is undefined there.
    """
    rho = as_complex_matrix(rho)
    kraus = as_complex_matrix(kraus)
    f = check_povm_element(kraus.conj().T @ kraus, name="filter F = K^dag K")
    prob = float(np.trace(f @ rho).real)
    if prob < prob_floor:
        raise PostselectionError(f"postselection probability {prob:.3e} is degenerate")
    out = kraus @ rho @ kraus.conj().T / prob
    return (out + out.conj().T) / 2.0, prob


def noise_before_ps_state(model: ParameterizedModel, theta, kraus: np.ndarray,
                          eps: float) -> tuple[np.ndarray, float]:
    """Depolarize the encoded state, then postselect.

    The pass probability is (1-eps) Tr[F rho_theta] + (eps/d) Tr[F].
    """
    rho = model_density(model, theta)
    return postselect(depolarize(rho, eps), kraus)


def noise_after_ps_state(model: ParameterizedModel, theta, kraus: np.ndarray,
                         eps: float) -> tuple[np.ndarray, float]:
    """Postselect the encoded state, then depolarize the surviving branch.

    The reported probability is the postselection probability of the noiseless
    input; the noise channel acts on the conditional state afterwards.
    """
    rho = model_density(model, theta)
    ps, prob = postselect(rho, kraus)
    return depolarize(ps, eps), prob


# ---------------------------------------------------------------------------
# model serialization:  complex scalars <-> [re, im], matrices row-major
# ---------------------------------------------------------------------------

def encode_complex_vector(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).reshape(-1)]


def encode_complex_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [encode_complex_vector(row) for row in m]


def decode_complex_vector(data) -> np.ndarray:
    try:
        return np.array([complex(re, im) for re, im in data], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad complex vector: {exc}") from exc


def decode_complex_matrix(data) -> np.ndarray:
    try:
        return np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad complex matrix: {exc}") from exc


def model_to_dict(model: ParameterizedModel) -> dict:
    return {
        "d": model.dimension,
        "M": model.n_parameters,
        "psi0": encode_complex_vector(model.psi0),
        "generators": [encode_complex_matrix(g) for g in model.generators],
    }


def model_from_dict(data: dict) -> ParameterizedModel:
    try:
        d = int(data["d"])
        m = int(data["M"])
        psi0 = decode_complex_vector(data["psi0"])
        gens = [decode_complex_matrix(g) for g in data["generators"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad model payload: {exc}") from exc
    if psi0.size != d or len(gens) != m:
        raise InvalidInputError("model payload is inconsistent with its declared d/M")
    return ParameterizedModel(psi0=psi0, generators=tuple(gens))


def save_model(model: ParameterizedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2, sort_keys=True))


def load_model(path) -> ParameterizedModel:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read model file {path}: {exc}") from exc
    return model_from_dict(data)


def random_model(rng: np.random.Generator, d: int, n_parameters: int) -> ParameterizedModel:
    """Haar-random initial state with independent unit-norm Hermitian generators."""
    gens = tuple(random_hermitian(rng, d) for _ in range(n_parameters))
    return ParameterizedModel(psi0=random_haar_state(rng, d), generators=gens)
