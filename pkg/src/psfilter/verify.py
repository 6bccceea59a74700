"""Named invariant suites with machine-readable reports.

Each check yields {"name", "passed", "measured", "tolerance"}; a suite report
aggregates them with the seed so reruns are reproducible.  These back the
``psfilter verify`` command; the pytest acceptance suite runs the same physics
at full size.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from . import analysis, core, filters, optimize
from .analysis import NoiseGeometry
from .fisher import qfim_pure, qfim_pure_postselected

SUITE_NAMES = ("noiseless", "noise-after", "noise-before", "perturbation", "optimality")


def _check(name: str, measured: float, tolerance: float, larger_ok: bool = False) -> dict:
    measured = float(measured)
    passed = measured >= tolerance if larger_ok else measured <= tolerance
    return {"name": name, "measured": measured, "tolerance": float(tolerance),
            "passed": bool(passed)}


def suite_noiseless(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    worst_eta = 0.0
    for _ in range(6):
        d = int(rng.integers(2, 7))
        m = int(rng.integers(1, 4))
        model = core.random_model(rng, d, m)
        theta = rng.uniform(-1, 1, m)
        psi = core.evolve(model, theta)
        dpsis = core.derivative_states(model, theta)
        before = qfim_pure(psi, dpsis)
        for t2 in (0.01, 0.1, 0.5):
            flt = filters.jal_filter(core.pure_density(psi), t2)
            after = qfim_pure_postselected(psi, dpsis, flt.f)
            report = analysis.amplification_numeric(after, before)
            worst_eta = max(worst_eta, abs(report.mean_ratio * t2 - 1.0))
    checks.append(_check("jal_efficiency_eta_equals_1", worst_eta, 1e-8))

    # general lossless family: arbitrary admissible off-blocks behave identically
    worst = 0.0
    for _ in range(4):
        psi, dpsis, sub = analysis.synthetic_family(rng, d=4, u=2)
        p_ps = float(rng.uniform(0.1, 0.9))
        c = 0.2 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        dblock = np.diag(rng.uniform(0.3, 0.9, 2)).astype(complex)
        flt = filters.optimal_noiseless_filter(psi, sub, p_ps, c, dblock)
        after = qfim_pure_postselected(psi, dpsis, flt.f)
        ratio = analysis.amplification_numeric(after, qfim_pure(psi, dpsis))
        worst = max(worst, abs(ratio.mean_ratio * p_ps - 1.0))
    checks.append(_check("optimal_form_lossless_any_blocks", worst, 1e-8))

    model = core.random_model(rng, 3, 1)
    theta = rng.uniform(-1, 1, 1)
    psi = core.evolve(model, theta)
    dpsis = core.derivative_states(model, theta)
    result = optimize.brute_force_filter_search(psi, dpsis, p_target=0.25,
                                                restarts=6, iters=120, seed=seed)
    checks.append(_check("search_never_beats_1_over_P",
                         result.best_amplification - 1.0 / 0.25, 1e-4))
    return checks


def suite_noise_after(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    worst_ratio = 0.0
    worst_pref = 0.0
    for d in (2, 4, 8):
        model = core.random_model(rng, d, 2)
        theta = rng.uniform(-1, 1, 2)
        for eps in (0.1, 0.5, 0.9):
            rep = analysis.noise_after_losslessness_check(model, theta, t2=0.25, eps=eps)
            worst_ratio = max(worst_ratio, rep.ratio_deviation)
            worst_pref = max(worst_pref, abs(rep.prefactor_measured - rep.prefactor_expected))
    checks.append(_check("qfim_ratio_equals_inverse_t2", worst_ratio, 1e-8))
    checks.append(_check("noisy_prefactor_matches", worst_pref, 1e-8))
    return checks


def suite_noise_before(seed: int, n_instances: int = 40) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    worst_amp = 0.0
    worst_spread = 0.0
    for _ in range(n_instances):
        d = int(rng.integers(2, 9))
        # u = 1 families carry no parameter information: no ratio to compare
        u = int(rng.integers(2, d + 1))
        psi, dpsis, sub = analysis.synthetic_family(rng, d, u)
        eps = float(rng.uniform(0.05, 0.95))
        params = filters.DiagonalFilterParams(p_theta=float(rng.uniform(0.05, 1.0)),
                                              b=float(rng.uniform(0.05, 1.0)),
                                              d=float(rng.uniform(0.0, 1.0)))
        geom = NoiseGeometry(eps=eps, d=d, u=sub.u)
        flt = filters.diagonal_family_filter(psi, sub, params)
        after = analysis.family_from_state(psi, dpsis, flt=flt, eps=eps, order="before")
        before = analysis.family_from_state(psi, dpsis, eps=eps, order="before")
        ratio = analysis.amplification_numeric(after.qfim(), before.qfim())
        closed = analysis.amplification_noisy_closed(geom, params)
        worst_amp = max(worst_amp, abs(ratio.mean_ratio - closed) / max(1.0, closed))
        worst_spread = max(worst_spread, ratio.spread)
    checks.append(_check("closed_form_amplification_matches_qfim", worst_amp, 1e-8))
    checks.append(_check("entrywise_scaling_uniform", worst_spread, 1e-8))

    model = core.random_model(rng, 3, 1)
    theta = rng.uniform(-1, 1, 1)
    psi0 = core.evolve(model, theta)
    sub = core.useful_subspace(psi0, core.derivative_states(model, theta))
    flt = filters.diagonal_family_filter(
        psi0, sub, filters.DiagonalFilterParams(0.3, 0.9, 0.5))
    before_state, _ = core.noise_before_ps_state(model, theta, flt.k, 0.4)
    after_state, _ = core.noise_after_ps_state(model, theta, flt.k, 0.4)
    gap = float(np.max(np.abs(before_state - after_state)))
    checks.append(_check("channel_order_matters_for_nontrivial_K", gap, 1e-6, larger_ok=True))
    ident = filters.naive_filter(3, 0.7)
    b1, _ = core.noise_before_ps_state(model, theta, ident.k, 0.4)
    a1, _ = core.noise_after_ps_state(model, theta, ident.k, 0.4)
    checks.append(_check("channel_orders_coincide_for_identity_K",
                         float(np.max(np.abs(b1 - a1))), 1e-12))
    return checks


def suite_perturbation(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    pauli_y = np.array([[0, -1j], [1j, 0]]) / 2.0
    model = core.ParameterizedModel(psi0=np.array([1.0, 0.0]), generators=(pauli_y,))
    rep = analysis.ps_prob_expansion_check(model, [0.3], [1.0], t2=0.25)
    rel = abs(rep.quad_coefficient_fit - rep.quad_coefficient_expected) / rep.quad_coefficient_expected
    checks.append(_check("pass_prob_quadratic_coefficient_1pct", rel, 0.01))
    checks.append(_check("pass_prob_residual_exponent", rep.residual_exponent, 3.0 - 0.2,
                         larger_ok=True))
    checks.append(_check("pass_prob_quadratic_positive", rep.quad_coefficient_fit, 0.0,
                         larger_ok=True))

    bound = analysis.amplification_bound_check(model, [0.3], [0.01], t2=0.25)
    checks.append(_check("second_order_amplification_bound", bound.margin, -1e-6,
                         larger_ok=True))

    inv = analysis.first_order_invariance_check(model, [0.3], t2=1.0 / 3.0, eps=0.5)
    checks.append(_check("noisy_amplification_first_order_flat", inv.max_first_order, 1e-6))
    checks.append(_check("eigenvalue_shift_second_order", inv.eigenvalue_exponent,
                         2.0 - 0.2, larger_ok=True))

    gen = core.random_model(rng, 4, 2)
    rep2 = analysis.ps_prob_expansion_check(gen, rng.uniform(-1, 1, 2),
                                            rng.standard_normal(2), t2=0.5)
    checks.append(_check("pass_prob_residual_exponent_random_model",
                         rep2.residual_exponent, 3.0 - 0.2, larger_ok=True))
    return checks


def suite_optimality(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    worst_pp = 0.0
    for _ in range(10):
        d = int(rng.integers(2, 13))
        geom = NoiseGeometry(eps=float(rng.uniform(0.05, 0.98)), d=d,
                             u=int(rng.integers(2, d + 1)))
        sol = optimize.optimize_pp(geom)
        res = minimize_scalar(lambda s: -analysis.amplification_t_closed(geom, s),
                              bounds=(1e-9, max(10.0, 100.0 * sol.t2)), method="bounded",
                              options={"xatol": 1e-13})
        worst_pp = max(worst_pp, abs(-res.fun - sol.predicted_amplification))
    checks.append(_check("pp_matches_golden_section", worst_pp, 1e-10))

    worst_ds = 0.0
    for _ in range(10):
        d = int(rng.integers(2, 13))
        geom = NoiseGeometry(eps=float(rng.uniform(0.0, 1.0)), d=d,
                             u=int(rng.integers(1, d + 1)))
        p_max = float(rng.uniform(0.02, 1.0))
        sol = optimize.optimize_ds(geom, p_max)
        oracle = optimize.grid_max_efficiency(geom, p_max, n=2000)
        worst_ds = max(worst_ds, abs(sol.predicted_efficiency - oracle))
    checks.append(_check("ds_matches_constrained_grid", worst_ds, 1e-3))

    # qubit family: random Kraus factorizations never beat the diagonal optimum
    worst_gap = -np.inf
    for eps in (0.1, 0.5, 0.9):
        geom = NoiseGeometry(eps=eps, d=2, u=2)
        opt = analysis.max_amplification(geom)
        n = 20000
        a2 = rng.uniform(0.0, 1.0, n)
        b2 = rng.uniform(0.0, 1.0, n)
        gamma2 = rng.uniform(0.0, 1.0, n)
        pass_prob = 0.5 * ((a2 + b2) * eps
                           + 2.0 * (1.0 - eps) * (a2 * gamma2 + b2 * (1.0 - gamma2)))
        amp = np.where(pass_prob > 1e-12, a2 * b2 / pass_prob**2, 0.0)
        worst_gap = max(worst_gap, float(np.max(amp) - opt))
    checks.append(_check("qubit_family_never_beats_diagonal_optimum", worst_gap, 1e-4))

    # qutrit mixing example: closed forms vs the reduced-QFI oracle, and the
    # off-diagonal filter strictly beating every diagonal one
    t2, alpha = 0.25, 0.5
    bmax = np.sqrt(1.0 - t2)
    rate_diag = analysis.qutrit_diag_rate(t2, alpha**2)
    rate_off = analysis.qutrit_offdiag_rate(t2, bmax, alpha**2)
    odev = abs(rate_off - analysis.qutrit_rate_numeric(
        *analysis.qutrit_mixing_pair(t2, bmax, alpha, x=0.2)))
    ddev = abs(rate_diag - analysis.qutrit_rate_numeric(
        *analysis.qutrit_diag_pair(t2, 0.6, alpha, x=0.2)))
    checks.append(_check("qutrit_offdiag_rate_matches_oracle", odev, 1e-8))
    checks.append(_check("qutrit_diag_rate_matches_oracle", ddev, 1e-8))
    checks.append(_check("qutrit_offdiag_beats_diagonal", rate_off - rate_diag, 0.0,
                         larger_ok=True))
    bgrid = np.linspace(0.0, bmax, 100)
    rates = analysis.qutrit_offdiag_rate(t2, bgrid, alpha**2)
    checks.append(_check("qutrit_rate_monotone_in_mixing",
                         float(np.min(np.diff(rates))), 0.0, larger_ok=True))
    return checks


_SUITES = {
    "noiseless": suite_noiseless,
    "noise-after": suite_noise_after,
    "noise-before": suite_noise_before,
    "perturbation": suite_perturbation,
    "optimality": suite_optimality,
}


def run_suites(which: str = "all", seed: int = 0) -> dict:
    names = SUITE_NAMES if which == "all" else (which,)
    suites = []
    for name in names:
        if name not in _SUITES:
            raise ValueError(f"unknown suite {name!r}; expected 'all' or one of {SUITE_NAMES}")
        checks = _SUITES[name](seed)
        suites.append({"suite": name, "checks": checks,
                       "passed": all(c["passed"] for c in checks)})
    return {"seed": seed, "suites": suites,
            "all_passed": all(s["passed"] for s in suites)}
