"""Closed-form amplification/efficiency expressions and their numerical cross-checks.

Amplification compares the QFIM after a filtering process to the QFIM before
it, entrywise; when the entrywise ratios agree the process scales all
information uniformly and the scalar amplification (and efficiency
eta = pass_probability * amplification) is well defined.

The closed forms cover the diagonal filter family
F = (p - B)|psi><psi| + B Pi_u + D Pi_n under depolarizing noise of strength
eps acting before the filter, written in the shorthand

    b = 1 - eps + eps/d,   c = (eps/d)(u - 1),   g = eps/d.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import core
from .core import ParameterizedModel, UsefulSubspace
from .errors import DegenerateRegimeError, InvalidInputError
from .fisher import qfim_mixed, qfim_pure, qfim_reduced
from .filters import DiagonalFilterParams, Filter, jal_filter
from .linalg import outer, random_unitary

DEFAULT_UNIFORM_TOL = 1e-6


# ---------------------------------------------------------------------------
# noise geometry and closed forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseGeometry:
    """Problem geometry: noise strength eps, dimension d, useful dimension u."""

    eps: float
    d: int
    u: int

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise InvalidInputError(f"eps must be in [0, 1], got {self.eps!r}")
        if self.d < 2:
            raise InvalidInputError(f"dimension must be >= 2, got {self.d!r}")
        if not 1 <= self.u <= self.d:
            raise InvalidInputError(f"useful dimension {self.u!r} outside [1, {self.d}]")

    @property
    def b(self) -> float:
        return 1.0 - self.eps + self.eps / self.d

    @property
    def c(self) -> float:
        return self.eps / self.d * (self.u - 1)

    @property
    def g(self) -> float:
        return self.eps / self.d


@dataclass(frozen=True)
class RatioReport:
    """Entrywise QFIM ratios after/before, with a uniformity verdict."""

    ratios: np.ndarray
    mean_ratio: float
    spread: float
    uniform: bool
    n_excluded: int

    @property
    def amplification(self) -> float:
        if not self.uniform:
            raise InvalidInputError(
                f"entrywise ratios are not uniform (spread {self.spread:.3e}); "
                "no scalar amplification exists")
        return self.mean_ratio


@dataclass(frozen=True)
class AmplificationReport:
    amplification: float
    efficiency: float
    postselect_prob: float
    uniform_flag: bool
    spread: float


def amplification_numeric(qfim_after: np.ndarray, qfim_before: np.ndarray,
                          uniform_tol: float = DEFAULT_UNIFORM_TOL) -> RatioReport:
    """Entrywise ratio of two QFIMs; entries with negligible baseline are skipped."""
    after = np.asarray(qfim_after, dtype=float)
    before = np.asarray(qfim_before, dtype=float)
    if after.shape != before.shape:
        raise InvalidInputError("QFIM shapes differ")
    scale = float(np.max(np.abs(before)))
    if scale <= 0.0:
        raise InvalidInputError("baseline QFIM vanishes; amplification undefined")
    mask = np.abs(before) > 1e-12 * scale
    ratios = after[mask] / before[mask]
    mean = float(np.mean(ratios))
    spread = float((np.max(ratios) - np.min(ratios)) / max(abs(mean), 1e-300))
    return RatioReport(ratios=ratios, mean_ratio=mean, spread=spread,
                       uniform=spread <= uniform_tol,
                       n_excluded=int(np.size(before) - np.size(ratios)))


def make_report(ratio: RatioReport, prob: float) -> AmplificationReport:
    return AmplificationReport(amplification=ratio.mean_ratio,
                               efficiency=ratio.mean_ratio * prob,
                               postselect_prob=prob,
                               uniform_flag=ratio.uniform,
                               spread=ratio.spread)


def noisy_pass_probability(geom: NoiseGeometry, params: DiagonalFilterParams) -> float:
    """Pass probability of the diagonal family on the depolarized state."""
    return (geom.b * params.p_theta + geom.c * params.b
            + geom.g * params.d * (geom.d - geom.u))


def amplification_noisy_closed(geom: NoiseGeometry, params: DiagonalFilterParams) -> float:
    """Uniform QFIM amplification of the diagonal family, noise before filtering:

    A = (b+g) p B / ( P_pass * (b p + g B) ).
    """
    if params.b <= 0.0:
        raise InvalidInputError("B must be positive for a finite amplification")
    p_pass = noisy_pass_probability(geom, params)
    return (geom.b + geom.g) * params.p_theta * params.b / (
        p_pass * (geom.b * params.p_theta + geom.g * params.b))


def efficiency_noisy_closed(geom: NoiseGeometry, params: DiagonalFilterParams) -> float:
    """eta = P_pass * A = (b+g) p B / (b p + g B); independent of D."""
    if params.b <= 0.0:
        raise InvalidInputError("B must be positive for a finite efficiency")
    return (geom.b + geom.g) * params.p_theta * params.b / (
        geom.b * params.p_theta + geom.g * params.b)


def amplification_t_closed(geom: NoiseGeometry, t2) -> float | np.ndarray:
    """Amplification of the D = 0 family as a function of t^2 = p/B:

    A(t^2) = (b+g) t^2 / ((b t^2 + c)(b t^2 + g)).
    """
    t2 = np.asarray(t2, dtype=float)
    if np.any(t2 <= 0.0):
        raise InvalidInputError("t^2 must be positive")
    b, c, g = geom.b, geom.c, geom.g
    out = (b + g) * t2 / ((b * t2 + c) * (b * t2 + g))
    return float(out) if out.ndim == 0 else out


def t_pp_squared(geom: NoiseGeometry) -> float:
    """Transmission ratio maximizing A(t^2): t_pp^2 = sqrt(u-1) eps / (d(1-eps) + eps).

    Returns 0 at eps = 0 (amplification unbounded there) and at u = 1 (no
    orthogonal information direction); both degeneracies are flagged by the
    optimizers.
    """
    return np.sqrt(geom.u - 1) * geom.eps / (geom.d * (1.0 - geom.eps) + geom.eps)


def max_amplification(geom: NoiseGeometry) -> float:
    """Peak of A(t^2) over t: (b+g) / (b (sqrt(c) + sqrt(g))^2).

    For u = 1 this is the supremum in the t -> 0 limit.  Raises at eps = 0,
    where the amplification is unbounded.
    """
    if geom.eps == 0.0:
        raise DegenerateRegimeError("amplification is unbounded without noise")
    b, c, g = geom.b, geom.c, geom.g
    return (b + g) / (b * (np.sqrt(c) + np.sqrt(g)) ** 2)


def noisy_information_prefactor(eps: float, d: int) -> float:
    """QFIM shrinkage of a depolarized pure state: (1-eps)^2 / (1-eps + 2 eps/d)."""
    return (1.0 - eps) ** 2 / (1.0 - eps + 2.0 * eps / d)


def max_amplification_vs_noiseless(geom: NoiseGeometry) -> float:
    """Peak amplification measured against the noiseless (pre-channel) state."""
    if geom.eps == 1.0:
        return 0.0
    return max_amplification(geom) * noisy_information_prefactor(geom.eps, geom.d)


def max_amplification_limit(eps: float) -> float:
    """Large-d limit (u comparable to d) of the peak amplification: 1/eps."""
    if not 0.0 < eps <= 1.0:
        raise InvalidInputError(f"limit requires eps in (0, 1], got {eps!r}")
    return 1.0 / eps


# ---------------------------------------------------------------------------
# state families (value + analytic parameter derivatives) for QFIM oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateFamily:
    """A density-matrix family evaluated at one point: value, derivatives, pass prob."""

    rho: np.ndarray
    drhos: tuple[np.ndarray, ...]
    prob: float

    def qfim(self, eig_cutoff: float = 1e-12) -> np.ndarray:
        return qfim_mixed(self.rho, self.drhos, eig_cutoff)


def _pure_drhos(psi: np.ndarray, dpsis) -> list[np.ndarray]:
    return [outer(dp, psi) + outer(psi, dp) for dp in dpsis]


def family_from_state(psi: np.ndarray, dpsis, flt: Filter | None = None,
                      eps: float = 0.0, order: str = "none") -> StateFamily:
    """Assemble the measured state family from a pure state and its derivatives.

    ``order`` places the depolarizing channel relative to the filter:
    "before" filters the noisy state, "after" depolarizes the conditional
    state, "none" applies no noise.  Without a filter the orders coincide.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    dpsis = [np.asarray(dp, dtype=complex).reshape(-1) for dp in dpsis]
    if order not in ("none", "before", "after"):
        raise InvalidInputError(f"unknown channel order {order!r}")
    rho = outer(psi)
    drhos = _pure_drhos(psi, dpsis)
    if flt is None:
        if order == "none" or eps == 0.0:
            return StateFamily(rho=rho, drhos=tuple(drhos), prob=1.0)
        return StateFamily(rho=core.depolarize(rho, eps),
                           drhos=tuple((1.0 - eps) * dr for dr in drhos), prob=1.0)
    k, f = flt.k, flt.f
    if order == "before" and eps > 0.0:
        noisy = core.depolarize(rho, eps)
        state, prob = core.postselect(noisy, k)
        dprob = [(1.0 - eps) * 2.0 * (psi.conj() @ f @ dp).real for dp in dpsis]
        dstate = [(1.0 - eps) * (k @ dr @ k.conj().T) / prob - (dpj / prob) * state
                  for dr, dpj in zip(drhos, dprob)]
        return StateFamily(rho=state, drhos=tuple(dstate), prob=prob)
    state, prob = core.postselect(rho, k)
    dprob = [2.0 * (psi.conj() @ f @ dp).real for dp in dpsis]
    dstate = [(k @ dr @ k.conj().T) / prob - (dpj / prob) * state
              for dr, dpj in zip(drhos, dprob)]
    if order == "after" and eps > 0.0:
        return StateFamily(rho=core.depolarize(state, eps),
                           drhos=tuple((1.0 - eps) * dr for dr in dstate), prob=prob)
    return StateFamily(rho=state, drhos=tuple(dstate), prob=prob)


def family_from_model(model: ParameterizedModel, theta, flt: Filter | None = None,
                      eps: float = 0.0, order: str = "none",
                      deriv_mode: str = "central", h: float = core.DEFAULT_FD_STEP) -> StateFamily:
    psi = core.evolve(model, theta)
    dpsis = core.derivative_states(model, theta, mode=deriv_mode, h=h)
    return family_from_state(psi, dpsis, flt=flt, eps=eps, order=order)


def family_fd(model: ParameterizedModel, theta, flt: Filter | None = None,
              eps: float = 0.0, order: str = "none", h: float = 1e-5) -> StateFamily:
    """Finite-difference oracle for the same family: differences the normalized
    density matrices directly, so it is independent of the analytic derivative
    assembly (and of any state-vector phase convention)."""
    theta = np.asarray(theta, dtype=float).reshape(-1)

    def state_at(th):
        rho = core.model_density(model, th)
        if flt is None:
            return core.depolarize(rho, eps) if eps > 0.0 else rho, 1.0
        if order == "before" and eps > 0.0:
            return core.postselect(core.depolarize(rho, eps), flt.k)
        state, prob = core.postselect(rho, flt.k)
        if order == "after" and eps > 0.0:
            state = core.depolarize(state, eps)
        return state, prob

    rho0, prob = state_at(theta)
    drhos = []
    for j in range(theta.size):
        step = np.zeros_like(theta)
        step[j] = h
        drhos.append((state_at(theta + step)[0] - state_at(theta - step)[0]) / (2.0 * h))
    return StateFamily(rho=rho0, drhos=tuple(drhos), prob=prob)


def ordered_map(fn, items, jobs: int | None = None) -> list:
    """Map preserving input order; ``jobs`` > 1 fans out over threads.

    The reduction order is fixed by the input order, so results are identical
    for any worker count.
    """
    if not jobs or jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# perturbation sweeps: estimate-vs-truth mismatch delta = theta - theta0
# ---------------------------------------------------------------------------

def _power_law_exponent(s: np.ndarray, y: np.ndarray, floor: float = 1e-13) -> float:
    keep = np.abs(y) > floor
    if np.count_nonzero(keep) < 3:
        return np.inf  # residual below noise floor everywhere: order exceeds resolution
    coeffs = np.polyfit(np.log(s[keep]), np.log(np.abs(y[keep])), 1)
    return float(coeffs[0])


@dataclass(frozen=True)
class ExpansionReport:
    scales: np.ndarray
    values: np.ndarray
    quad_coefficient_fit: float
    quad_coefficient_expected: float
    residual_exponent: float


def ps_prob_expansion_check(model: ParameterizedModel, theta0, delta_hat, t2: float,
                            scales=None, jobs: int | None = None) -> ExpansionReport:
    """Sweep the pass probability of a filter built at theta0 against the true
    parameters theta0 + s * delta_hat.

    P(s) - t^2 should be s^2 (1 - t^2) dhat^T I dhat plus a cubic-or-higher
    remainder; the report carries the fitted quadratic coefficient (Richardson
    extrapolation from the two smallest scales) and the log-log exponent of the
    residual after removing the expected quadratic term.
    """
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    dhat = np.asarray(delta_hat, dtype=float).reshape(-1)
    if scales is None:
        scales = np.logspace(-3, -1, 9)
    scales = np.asarray(scales, dtype=float)
    psi0 = core.evolve(model, theta0)
    dpsis = core.derivative_states(model, theta0)
    info = qfim_pure(psi0, dpsis)
    quad_expected = float((1.0 - t2) * dhat @ info @ dhat)
    if quad_expected <= 1e-12:
        raise InvalidInputError("model carries no information along delta_hat")
    flt = jal_filter(outer(psi0), t2)

    def prob_at(s):
        psi = core.evolve(model, theta0 + s * dhat)
        return float((psi.conj() @ flt.f @ psi).real)

    probs = np.array(ordered_map(prob_at, list(scales), jobs=jobs))
    y = probs - t2
    order = np.argsort(scales)
    s1, s2 = scales[order[0]], scales[order[1]]
    f1, f2 = y[order[0]] / s1**2, y[order[1]] / s2**2
    quad_fit = float(f1 + (f1 - f2) * s1 / (s2 - s1))
    residual = y - quad_expected * scales**2
    return ExpansionReport(scales=scales, values=probs,
                           quad_coefficient_fit=quad_fit,
                           quad_coefficient_expected=quad_expected,
                           residual_exponent=_power_law_exponent(scales, residual))


@dataclass(frozen=True)
class BoundReport:
    measured: float
    bound: float
    margin: float


def amplification_bound_check(model: ParameterizedModel, theta0, delta, t2: float) -> BoundReport:
    """Second-order bound on the amplification of a filter built at theta0 and
    applied at theta0 + delta:

    A <= (1/t^2) [1 - ((1 - t^2)/t^2) delta^T I delta]  (up to cubic terms).
    """
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    delta = np.asarray(delta, dtype=float).reshape(-1)
    psi0 = core.evolve(model, theta0)
    flt = jal_filter(outer(psi0), t2)
    theta = theta0 + delta
    psi = core.evolve(model, theta)
    dpsis = core.derivative_states(model, theta)
    from .fisher import qfim_pure_postselected
    after = qfim_pure_postselected(psi, dpsis, flt.f)
    before = qfim_pure(psi, dpsis)
    measured = float(np.max(np.diag(after) / np.diag(before)))
    penalty = float(delta @ before @ delta)
    bound = (1.0 / t2) * (1.0 - (1.0 - t2) / t2 * penalty)
    return BoundReport(measured=measured, bound=bound, margin=bound - measured)


@dataclass(frozen=True)
class LosslessnessReport:
    ratio_deviation: float
    prefactor_measured: float
    prefactor_expected: float


def noise_after_losslessness_check(model: ParameterizedModel, theta, t2: float,
                                   eps: float) -> LosslessnessReport:
    """With noise after filtering, the QFIM ratio to the unfiltered noisy state
    is 1/t^2 entrywise, and the noisy/noiseless QFIM ratio is the depolarized
    pure-state prefactor."""
    psi = core.evolve(model, theta)
    dpsis = core.derivative_states(model, theta)
    flt = jal_filter(outer(psi), t2)
    after = family_from_state(psi, dpsis, flt=flt, eps=eps, order="after").qfim()
    noisy = family_from_state(psi, dpsis, eps=eps, order="before").qfim()
    clean = qfim_pure(psi, dpsis)
    ratios = amplification_numeric(after, noisy)
    deviation = float(np.max(np.abs(ratios.ratios - 1.0 / t2)))
    pref = amplification_numeric(noisy, clean)
    return LosslessnessReport(ratio_deviation=deviation,
                              prefactor_measured=pref.mean_ratio,
                              prefactor_expected=noisy_information_prefactor(eps, psi.size))


@dataclass(frozen=True)
class InvarianceReport:
    max_first_order: float
    eigenvalue_exponent: float


def first_order_invariance_check(model: ParameterizedModel, theta0, t2: float, eps: float,
                                 step: float = 1e-4) -> InvarianceReport:
    """Noisy amplification of a filter built at theta0 has no first-order
    response to the estimate error: each d(ratio)/d(delta_i) vanishes at
    delta = 0, and the state eigenvalues shift only at second order."""
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    psi0 = core.evolve(model, theta0)
    flt = jal_filter(outer(psi0), t2)

    def ratios_at(theta):
        psi = core.evolve(model, theta)
        dpsis = core.derivative_states(model, theta)
        after = family_from_state(psi, dpsis, flt=flt, eps=eps, order="before").qfim()
        before = family_from_state(psi, dpsis, eps=eps, order="before").qfim()
        scale = np.max(np.abs(before))
        mask = np.abs(before) > 1e-12 * scale
        out = np.zeros_like(before)
        out[mask] = after[mask] / before[mask]
        return out

    max_deriv = 0.0
    for i in range(theta0.size):
        dv = np.zeros_like(theta0)
        dv[i] = step
        deriv = (ratios_at(theta0 + dv) - ratios_at(theta0 - dv)) / (2.0 * step)
        max_deriv = max(max_deriv, float(np.max(np.abs(deriv))))

    rng = np.random.default_rng(7)
    dhat = rng.standard_normal(theta0.size)
    dhat /= np.linalg.norm(dhat)
    scales = np.logspace(-3.5, -1.5, 7)
    base = np.sort(np.linalg.eigvalsh(
        family_from_model(model, theta0, flt=flt, eps=eps, order="before").rho))
    shifts = []
    for s in scales:
        lam = np.sort(np.linalg.eigvalsh(
            family_from_model(model, theta0 + s * dhat, flt=flt, eps=eps, order="before").rho))
        shifts.append(np.max(np.abs(lam - base)))
    exponent = _power_law_exponent(scales, np.asarray(shifts))
    return InvarianceReport(max_first_order=max_deriv, eigenvalue_exponent=exponent)


# ---------------------------------------------------------------------------
# qutrit mixing example (u = 2, d = 3, eps = 1/2)
# ---------------------------------------------------------------------------
# The half-strength depolarizing noise is absorbed into the unnormalized state,
# i.e. rho' carries twice the physical weight; rates below are quoted in that
# scaled convention throughout, which leaves the diagonal/off-diagonal
# comparison unchanged.

def qutrit_diag_rate(t2: float, alpha_sq: float) -> float:
    """Information rate of the diagonal qutrit filter diag(t, 1, r): independent of r."""
    return 12.0 * alpha_sq * t2 / (1.0 + 4.0 * t2)


def qutrit_offdiag_rate(t2: float, b: float, alpha_sq: float) -> float:
    """Information rate when the no-information direction is mixed into the
    state direction with weight b; strictly increasing in |b|."""
    b2 = b * b
    return 12.0 * alpha_sq * (1.0 + b2) * t2 / (1.0 + b2 + (4.0 + 3.0 * b2) * t2)


def qutrit_mixing_pair(t2: float, b: float, alpha: complex,
                       x: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized (rho', drho') for the off-diagonal qutrit example.

    rho' is the filtered signal branch K|psi><psi|K^dag plus the filter-weighted
    noise floor F/3, with K = [[t,0,b],[0,1,0],[0,0,0]] in the (state,
    derivative, rest) basis and |dpsi> = i x |psi> + alpha |perp>.
    """
    t = np.sqrt(t2)
    k = np.array([[t, 0.0, b], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]], dtype=complex)
    psi = np.array([1.0, 0.0, 0.0], dtype=complex)
    dpsi = np.array([1j * x, alpha, 0.0], dtype=complex)
    rho_u = outer(k @ psi) + (k.conj().T @ k) / 3.0
    dkpsi = k @ dpsi
    drho_u = outer(dkpsi, k @ psi) + outer(k @ psi, dkpsi)
    return rho_u, drho_u


def qutrit_diag_pair(t2: float, r: float, alpha: complex,
                     x: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized (rho', drho') for the diagonal qutrit filter diag(t, 1, r)."""
    t = np.sqrt(t2)
    k = np.diag([t, 1.0, r]).astype(complex)
    psi = np.array([1.0, 0.0, 0.0], dtype=complex)
    dpsi = np.array([1j * x, alpha, 0.0], dtype=complex)
    rho_u = outer(k @ psi) + (k @ k) / 3.0
    dkpsi = k @ dpsi
    drho_u = outer(dkpsi, k @ psi) + outer(k @ psi, dkpsi)
    return rho_u, drho_u


def qutrit_rate_numeric(rho_u: np.ndarray, drho_u: np.ndarray) -> float:
    """Oracle rate Tr[rho'] * QFI(normalized) via the reduced-SLD path."""
    p = float(np.trace(rho_u).real)
    return p * qfim_reduced(rho_u, drho_u)


# ---------------------------------------------------------------------------
# synthetic families with a prescribed useful-subspace dimension
# ---------------------------------------------------------------------------

def synthetic_family(rng: np.random.Generator, d: int, u: int,
                     n_parameters: int | None = None):
    """Random (psi, dpsis, subspace) whose useful subspace has dimension u.

    The derivatives are drawn directly (i x_j |psi> + combination of u-1 fixed
    orthonormal directions) rather than from a unitary model, so any u <= d is
    reachable; needs n_parameters >= u - 1.
    """
    if n_parameters is None:
        n_parameters = max(2, u - 1)
    if u > d or (u - 1) > n_parameters:
        raise InvalidInputError(f"cannot realize u={u} with d={d}, M={n_parameters}")
    q = random_unitary(rng, d)
    psi = q[:, 0]
    dpsis = []
    for _ in range(n_parameters):
        x = rng.uniform(-1.0, 1.0)
        dp = 1j * x * psi
        if u > 1:
            coeff = rng.standard_normal(u - 1) + 1j * rng.standard_normal(u - 1)
            dp = dp + q[:, 1:u] @ coeff
        dpsis.append(dp)
    if u > 1:
        # full useful rank needs the coefficient stack to span all u-1 directions
        stack = q[:, 1:u].conj().T @ np.column_stack(dpsis)
        if np.linalg.matrix_rank(stack, tol=1e-8) < u - 1:
            return synthetic_family(rng, d, u, n_parameters)
    subspace = core.useful_subspace(psi, dpsis)
    return psi, dpsis, subspace
