"""Regime optimizers for the diagonal filter family under pre-filter noise.

Two regimes: maximize the information amplification when post-processing cost
dominates (``optimize_pp``), or maximize the compression efficiency subject to
a pass-probability cap when detector saturation dominates (``optimize_ds``).
Both have closed-form solutions; grid-search oracles and a randomized filter
search certify them numerically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .analysis import (
    NoiseGeometry,
    amplification_t_closed,
    family_from_state,
    t_pp_squared,
)
from .core import UsefulSubspace
from .errors import DegenerateRegimeError, InvalidInputError
from .filters import DiagonalFilterParams, Filter, diagonal_family_filter
from .fisher import qfim_mixed, qfim_pure, qfim_pure_postselected
from .linalg import hermitian_sqrt, outer


class FilterCategory(enum.Enum):
    ALL_SIGNAL = "all-signal"
    COMPRESSING = "compressing"
    DISCARDING = "discarding"


@dataclass(frozen=True)
class RegimeSolution:
    """Optimal diagonal-family point (D = 0) for one regime.

    Invariants: t2 * B = p (for B > 0) and P_ps = b p + c B.  ``degenerate``
    names a flagged edge case (no orthogonal information, zero filter) instead
    of returning NaNs.
    """

    p_theta: float
    b: float
    t2: float
    category: FilterCategory
    predicted_amplification: float
    predicted_efficiency: float
    p_ps: float
    degenerate: str | None = None


def optimize_pp(geom: NoiseGeometry) -> RegimeSolution:
    """Post-processing regime: t^2 = t_pp^2, then push the pass probability up
    by setting p = min(1, t_pp^2), B = min(1, 1/t_pp^2)."""
    if geom.eps == 0.0:
        raise DegenerateRegimeError(
            "noiseless amplification is unbounded as t -> 0; no finite optimum")
    tpp2 = t_pp_squared(geom)
    if tpp2 == 0.0:
        return RegimeSolution(p_theta=0.0, b=1.0, t2=0.0,
                              category=FilterCategory.COMPRESSING,
                              predicted_amplification=0.0, predicted_efficiency=0.0,
                              p_ps=geom.c, degenerate="no orthogonal information directions")
    p = min(1.0, tpp2)
    b = min(1.0, 1.0 / tpp2)
    amp = amplification_t_closed(geom, tpp2)
    p_ps = geom.b * p + geom.c * b
    return RegimeSolution(p_theta=p, b=b, t2=tpp2, category=FilterCategory.COMPRESSING,
                          predicted_amplification=amp, predicted_efficiency=amp * p_ps,
                          p_ps=p_ps)


def optimize_ds(geom: NoiseGeometry, p_max: float) -> RegimeSolution:
    """Detector-saturation regime: maximize eta subject to b p + c B <= P_max.

    The optimum sits at (1, 1) when that is feasible, otherwise on the
    constraint line at the admissible t^2 closest to t_pp^2.
    """
    if not 0.0 <= p_max <= 1.0:
        raise InvalidInputError(f"P_max must be in [0, 1], got {p_max!r}")
    b, c = geom.b, geom.c
    if p_max == 0.0:
        return RegimeSolution(p_theta=0.0, b=0.0, t2=0.0,
                              category=FilterCategory.DISCARDING,
                              predicted_amplification=0.0, predicted_efficiency=0.0,
                              p_ps=0.0, degenerate="zero filter: P_max = 0")
    if p_max >= b + c:
        amp = amplification_t_closed(geom, 1.0)
        return RegimeSolution(p_theta=1.0, b=1.0, t2=1.0,
                              category=FilterCategory.ALL_SIGNAL,
                              predicted_amplification=amp,
                              predicted_efficiency=amp * (b + c), p_ps=b + c)
    tpp2 = t_pp_squared(geom)
    if tpp2 <= 1.0:
        lo = (p_max - c) / b
        t2 = max(tpp2, lo)
        clamped = lo > tpp2
    else:
        hi = c / (p_max - b) if p_max > b else np.inf
        t2 = min(tpp2, hi)
        clamped = hi < tpp2
    if t2 == 0.0:
        # only reachable when u = 1 (t_pp = 0) and the boundary value is <= 0
        return RegimeSolution(p_theta=0.0, b=1.0, t2=0.0,
                              category=FilterCategory.DISCARDING,
                              predicted_amplification=0.0, predicted_efficiency=0.0,
                              p_ps=c, degenerate="no orthogonal information directions")
    p = p_max / (b + c / t2)
    bb = p_max / (b * t2 + c)
    amp = amplification_t_closed(geom, t2)
    category = FilterCategory.COMPRESSING if clamped else FilterCategory.DISCARDING
    return RegimeSolution(p_theta=p, b=bb, t2=t2, category=category,
                          predicted_amplification=amp, predicted_efficiency=amp * p_max,
                          p_ps=b * p + c * bb)


def p_star(geom: NoiseGeometry) -> float:
    """Largest P_max whose optimal filter still sits at t^2 = t_pp^2 (the kink
    of the optimum path)."""
    if geom.eps == 0.0:
        raise DegenerateRegimeError("p_star undefined at eps = 0")
    tpp2 = t_pp_squared(geom)
    if tpp2 <= 1.0:
        return geom.b * tpp2 + geom.c
    return geom.b + geom.c / tpp2


def optimum_path(geom: NoiseGeometry, n_points: int) -> list[tuple[float, float, float]]:
    """(P_max, p, B) samples of the optimum as P_max runs from 1 to 0."""
    if n_points < 2:
        raise InvalidInputError("need at least two path points")
    out = []
    for p_max in np.linspace(1.0, 0.0, n_points):
        sol = optimize_ds(geom, float(p_max))
        out.append((float(p_max), sol.p_theta, sol.b))
    return out


# ---------------------------------------------------------------------------
# grid-search oracles
# ---------------------------------------------------------------------------

def grid_max_amplification(geom: NoiseGeometry, n: int = 2000) -> float:
    """Brute-force maximum of A(p, B) for the D = 0 family on an n x n grid."""
    p = np.linspace(0.0, 1.0, n + 1)[1:, None]  # p = 0 carries no signal
    bb = np.linspace(0.0, 1.0, n + 1)[None, 1:]
    amp = (geom.b + geom.g) * p * bb / ((geom.b * p + geom.c * bb)
                                        * (geom.b * p + geom.g * bb))
    return float(np.max(amp))


def grid_max_efficiency(geom: NoiseGeometry, p_max: float, n: int = 2000) -> float:
    """Constrained grid-search oracle: max eta over the n x n (p, B) grid points
    obeying b p + c B <= P_max.

    eta is nondecreasing in p at fixed B, so the column maximum sits at the
    largest feasible p; on a uniform grid that index has a closed form, making
    this an exact evaluation of the fully masked grid scan.
    """
    b, c, g = geom.b, geom.c, geom.g
    grid = np.linspace(0.0, 1.0, n)
    h = grid[1] - grid[0]
    budget = p_max - c * grid  # remaining allowance for b*p, per B column
    idx = np.clip(np.floor(budget / (b * h) + 1e-12).astype(int), 0, n - 1)
    over = b * grid[idx] > budget + 1e-15
    idx[over] -= 1
    ok = (budget >= -1e-15) & (idx >= 0)
    if not np.any(ok):
        return 0.0
    pv = grid[idx[ok]]
    bv = grid[ok]
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = (b + g) * pv * bv / (b * pv + g * bv)
    eta = np.where((pv > 0) & (bv > 0), eta, 0.0)
    return float(np.max(eta))


def grid_max_efficiency_direct(geom: NoiseGeometry, p_max: float, n: int = 300) -> float:
    """Plain masked scan over the full (p, B) grid; cross-checks the column oracle."""
    b, c, g = geom.b, geom.c, geom.g
    grid = np.linspace(0.0, 1.0, n)
    pp, bg = np.meshgrid(grid, grid, indexing="ij")
    feasible = b * pp + c * bg <= p_max + 1e-15
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = (b + g) * pp * bg / (b * pp + g * bg)
    eta = np.where((pp > 0) & (bg > 0) & feasible, eta, 0.0)
    return float(np.max(eta))


# ---------------------------------------------------------------------------
# randomized filter search (lower-bound certifier)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    best_filter: Filter
    best_amplification: float
    n_evaluated: int


def _clip_unit_interval(f: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((f + f.conj().T) / 2.0)
    return (v * np.clip(w, 0.0, 1.0)) @ v.conj().T


def _project_to_probability(f: np.ndarray, state: np.ndarray, target: float) -> np.ndarray:
    """Adjust F so Tr[F state] = target while keeping 0 <= F <= 1.

    Shrinking rescales; growing blends toward the identity (whose pass
    probability is 1 for any unit-trace state).
    """
    val = float(np.trace(f @ state).real)
    d = f.shape[0]
    if val <= 0.0:
        return target * np.eye(d, dtype=complex)
    if val >= target:
        return (target / val) * f
    mu = (1.0 - target) / (1.0 - val)
    return mu * f + (1.0 - mu) * np.eye(d, dtype=complex)


def _clip_singular_values(k: np.ndarray) -> np.ndarray:
    u, s, vh = np.linalg.svd(k)
    return (u * np.clip(s, 0.0, 1.0)) @ vh


def _project_kraus_to_probability(k: np.ndarray, prob_state: np.ndarray,
                                  target: float) -> np.ndarray:
    """Rescale or blend a Kraus factor so Tr[K^dag K prob_state] = target."""
    val = float(np.trace(k.conj().T @ k @ prob_state).real)
    d = k.shape[0]
    if val <= 0.0:
        return np.sqrt(target) * np.eye(d, dtype=complex)
    if val >= target:
        return np.sqrt(target / val) * k
    lo, hi = 0.0, 1.0  # blend toward the identity, whose pass probability is 1
    eye = np.eye(d, dtype=complex)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cand = (1.0 - mid) * k + mid * eye
        if float(np.trace(cand.conj().T @ cand @ prob_state).real) < target:
            lo = mid
        else:
            hi = mid
    return (1.0 - hi) * k + hi * eye


def brute_force_filter_search(psi: np.ndarray, dpsis, p_target: float,
                              eps: float = 0.0, restarts: int = 25, iters: int = 400,
                              seed: int = 0, noise_term: str = "kraus") -> SearchResult:
    """Randomized multi-start local search over valid filters at a fixed pass
    probability; returns the best amplification found.

    This is a lower-bound certifier: closed forms must match or exceed its
    output, never the reverse.  ``noise_term`` selects how the depolarizing
    floor enters when eps > 0: "kraus" composes the channels (floor K 1 K^dag,
    so only F = K^dag K matters and the search walks Hermitian POVM elements),
    while "povm" weights the floor by F itself with the signal still passing
    through K (the qutrit mixing example's convention); there the state depends
    on the Kraus factor, so the search walks general complex K with
    K^dag K <= 1.  Deterministic per seed; restarts use child seeds.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    d = psi.size
    if d > 4:
        raise InvalidInputError("search is cost-bounded to d <= 4")
    if noise_term not in ("kraus", "povm"):
        raise InvalidInputError(f"unknown noise_term {noise_term!r}")
    dpsis = [np.asarray(dp, dtype=complex).reshape(-1) for dp in dpsis]
    rho = outer(psi)
    if eps > 0.0:
        prob_state = (1.0 - eps) * rho + (eps / d) * np.eye(d, dtype=complex)
        baseline = family_from_state(psi, dpsis, eps=eps, order="before").qfim()
    else:
        prob_state = rho
        baseline = qfim_pure(psi, dpsis)
    base_diag = np.diag(baseline)
    pure_drhos = [outer(dp, psi) + outer(psi, dp) for dp in dpsis]
    kraus_space = eps > 0.0 and noise_term == "povm"

    def amplification(cand: np.ndarray) -> float:
        if eps == 0.0:
            after = qfim_pure_postselected(psi, dpsis, cand)
            return float(np.max(np.diag(after) / base_diag))
        if kraus_space:
            k = cand
            floor = k.conj().T @ k
        else:
            k = hermitian_sqrt(cand, tol=1e-8)
            floor = k @ k.conj().T
        rho_u = (1.0 - eps) * (k @ rho @ k.conj().T) + (eps / d) * floor
        p = float(np.trace(rho_u).real)
        if p < 1e-12:
            return -np.inf
        state = rho_u / p
        drhos = []
        for dpure in pure_drhos:
            kd = (1.0 - eps) * (k @ dpure @ k.conj().T)
            drhos.append(kd / p - (float(np.trace(kd).real) / p) * state)
        after = qfim_mixed(state, drhos)
        return float(np.max(np.diag(after) / base_diag))

    def random_candidate(rng):
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        if kraus_space:
            return _project_kraus_to_probability(
                _clip_singular_values(z / np.sqrt(d)), prob_state, p_target)
        return _project_to_probability(_clip_unit_interval(z @ z.conj().T / d),
                                       prob_state, p_target)

    def perturb(cand, step, rng):
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        if kraus_space:
            return _project_kraus_to_probability(
                _clip_singular_values(cand + step * z), prob_state, p_target)
        return _project_to_probability(_clip_unit_interval(cand + step * (z + z.conj().T) / 2.0),
                                       prob_state, p_target)

    master = np.random.default_rng(seed)
    child_seeds = master.integers(0, 2**63 - 1, size=restarts)
    best_cand = None
    best_amp = -np.inf
    evaluated = 0
    for cs in child_seeds:
        rng = np.random.default_rng(int(cs))
        cand = random_candidate(rng)
        amp = amplification(cand)
        evaluated += 1
        step = 0.3
        for _ in range(iters - 1):
            trial = perturb(cand, step, rng)
            trial_amp = amplification(trial)
            evaluated += 1
            if trial_amp > amp:
                cand, amp = trial, trial_amp
                step = min(0.3, step * 1.2)
            else:
                step = max(1e-4, step * 0.97)
        if amp > best_amp:
            best_amp, best_cand = amp, cand
    if kraus_space:
        flt = Filter(f=best_cand.conj().T @ best_cand, k=best_cand)
    else:
        flt = Filter(f=best_cand, k=hermitian_sqrt(best_cand, tol=1e-8))
    return SearchResult(best_filter=flt, best_amplification=best_amp, n_evaluated=evaluated)


def solution_filter(geom: NoiseGeometry, sol: RegimeSolution, psi: np.ndarray,
                    subspace: UsefulSubspace) -> Filter:
    """Materialize a RegimeSolution as a concrete diagonal-family filter (D = 0)."""
    params = DiagonalFilterParams(p_theta=sol.p_theta, b=sol.b, d=0.0)
    return diagonal_family_filter(psi, subspace, params)
