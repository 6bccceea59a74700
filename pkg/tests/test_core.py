import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from psfilter import core
from psfilter.core import (
    ParameterizedModel,
    decompose_derivative,
    depolarize,
    derivative_state,
    derivative_states,
    evolve,
    load_model,
    model_density,
    noise_after_ps_state,
    noise_before_ps_state,
    postselect,
    pure_density,
    random_model,
    save_model,
    useful_subspace,
)
from psfilter.errors import InvalidInputError, PostselectionError
from psfilter.filters import jal_filter
from psfilter.linalg import check_density_matrix


class TestEvolve:
    def test_zero_parameters_is_identity(self, phase_model):
        assert_allclose(evolve(phase_model, [0.0]), phase_model.psi0, atol=1e-14)

    def test_phase_pi_flips_sign(self, phase_model):
        psi = evolve(phase_model, [np.pi])
        target = np.array([1.0, -1.0]) / np.sqrt(2)
        # compare up to a global phase
        overlap = abs(np.vdot(target, psi))
        assert overlap == pytest.approx(1.0, abs=1e-12)

    def test_rotation_model_matches_eigendecomposition_oracle(self, qubit_rotation_model):
        # independent matrix-exponential route: diagonalize the generator directly
        for theta in (0.0, 0.4, 1.3, np.pi):
            psi = evolve(qubit_rotation_model, [theta])
            expected = np.array([np.cos(theta / 2.0), np.sin(theta / 2.0)])
            assert_allclose(psi, expected, atol=1e-12)

    def test_unitarity_random_models(self, rng):
        for _ in range(5):
            model = random_model(rng, int(rng.integers(2, 7)), 2)
            theta = rng.uniform(-2, 2, 2)
            u = core.evolution_operator(model, theta)
            assert_allclose(u @ u.conj().T, np.eye(model.dimension), atol=1e-10)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(InvalidInputError):
            ParameterizedModel(psi0=np.array([1.0, 0.0]),
                               generators=(np.eye(3, dtype=complex),))

    def test_bad_theta_length(self, phase_model):
        with pytest.raises(InvalidInputError):
            evolve(phase_model, [0.1, 0.2])


class TestDerivativeState:
    def test_phase_model_analytic(self, phase_model):
        dpsi = derivative_state(phase_model, [0.0], 0, mode="analytic")
        assert_allclose(dpsi, -1j * np.array([0.0, 1.0 / np.sqrt(2)]), atol=1e-12)

    def test_central_matches_analytic_up_to_gauge(self, phase_model):
        # the aligned difference quotient pins the <psi|dpsi> = 0 gauge, so
        # compare the projections orthogonal to psi
        psi = evolve(phase_model, [0.7])
        exact = derivative_state(phase_model, [0.7], 0, mode="analytic")
        fd = derivative_state(phase_model, [0.7], 0, mode="central", h=1e-5)
        proj = lambda v: v - np.vdot(psi, v) * psi
        assert_allclose(proj(fd), proj(exact), atol=1e-8)
        assert abs(np.vdot(psi, fd)) < 1e-8

    def test_richardson_second_order(self, qubit_rotation_model):
        exact = derivative_state(qubit_rotation_model, [0.5], 0, mode="analytic")
        err = []
        for h in (1e-2, 5e-3):
            fd = derivative_state(qubit_rotation_model, [0.5], 0, mode="central", h=h)
            err.append(np.linalg.norm(fd - exact))
        assert err[1] < err[0] / 3.0  # O(h^2) would give a factor of 4

    def test_constant_generator_gives_zero(self):
        model = ParameterizedModel(psi0=np.array([1.0, 0.0]),
                                   generators=(np.zeros((2, 2), dtype=complex),))
        assert_allclose(derivative_state(model, [0.3], 0), 0.0, atol=1e-12)

    def test_noncommuting_analytic_rejected(self, rng):
        model = random_model(rng, 3, 2)
        assert not model.generators_commute()
        with pytest.raises(InvalidInputError):
            derivative_state(model, [0.1, 0.2], 0, mode="analytic")

    def test_bad_step_raises(self, phase_model):
        with pytest.raises(InvalidInputError):
            derivative_state(phase_model, [0.0], 0, h=0.0)


class TestDecomposeDerivative:
    def test_parallel_derivative_null_perp(self, rng):
        psi = core.random_model(rng, 4, 1).psi0
        dec = decompose_derivative(psi, 2j * psi)
        assert dec.null_perp
        assert dec.x == pytest.approx(2.0, abs=1e-12)
        assert dec.alpha == 0

    def test_rotation_model_halfway(self, qubit_rotation_model):
        dec = decompose_derivative(np.array([1.0, 0.0]), np.array([0.0, 0.5]))
        assert dec.x == pytest.approx(0.0, abs=1e-12)
        assert abs(dec.alpha) == pytest.approx(0.5, abs=1e-12)
        assert_allclose(dec.perp_state, [0.0, 1.0], atol=1e-12)

    def test_mixed_components(self, rng):
        psi = core.random_model(rng, 5, 1).psi0
        z = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        perp = z - np.vdot(psi, z) * psi
        perp /= np.linalg.norm(perp)
        dec = decompose_derivative(psi, 1j * psi + perp)
        assert dec.x == pytest.approx(1.0, abs=1e-10)
        assert abs(dec.alpha) == pytest.approx(1.0, abs=1e-10)

    def test_reconstruction(self, rng):
        for _ in range(10):
            model = random_model(rng, 4, 1)
            theta = rng.uniform(-1, 1, 1)
            psi = evolve(model, theta)
            dpsi = derivative_state(model, theta, 0)
            dec = decompose_derivative(psi, dpsi)
            rebuilt = 1j * dec.x * psi + dec.alpha * (
                dec.perp_state if dec.perp_state is not None else 0.0)
            assert np.linalg.norm(rebuilt - dpsi) <= 1e-10

    def test_norm_violating_derivative_rejected(self):
        with pytest.raises(InvalidInputError):
            decompose_derivative(np.array([1.0, 0.0]), np.array([1.0, 0.0]))


class TestUsefulSubspace:
    def test_parallel_derivative_is_one_dimensional(self, rng):
        psi = random_model(rng, 4, 1).psi0
        sub = useful_subspace(psi, [1.7j * psi])
        assert sub.u == 1

    def test_qubit_fills_space(self, qubit_rotation_model):
        psi = evolve(qubit_rotation_model, [0.4])
        dpsi = derivative_state(qubit_rotation_model, [0.4], 0)
        sub = useful_subspace(psi, [dpsi])
        assert sub.u == 2

    def test_qutrit_with_unused_direction(self):
        # single rotation generator embedded in d = 3: one direction never used
        gy = np.zeros((3, 3), dtype=complex)
        gy[0, 1], gy[1, 0] = -0.5j, 0.5j
        model = ParameterizedModel(psi0=np.array([1.0, 0.0, 0.0]), generators=(gy,))
        psi = evolve(model, [0.3])
        dpsi = derivative_state(model, [0.3], 0)
        sub = useful_subspace(psi, [dpsi])
        assert sub.u == 2
        rest = np.array([0.0, 0.0, 1.0])
        assert_allclose(sub.pi_n, np.outer(rest, rest), atol=1e-10)

    def test_projector_reproduces_inputs(self, rng):
        for _ in range(5):
            d, m = int(rng.integers(2, 7)), int(rng.integers(1, 4))
            model = random_model(rng, d, m)
            theta = rng.uniform(-1, 1, m)
            psi = evolve(model, theta)
            dpsis = derivative_states(model, theta)
            sub = useful_subspace(psi, dpsis)
            for v in [psi, *dpsis]:
                assert np.linalg.norm(sub.pi_u @ v - v) <= 1e-8

    def test_projector_algebra(self, rng):
        model = random_model(rng, 5, 2)
        theta = rng.uniform(-1, 1, 2)
        psi = evolve(model, theta)
        sub = useful_subspace(psi, derivative_states(model, theta))
        assert_allclose(sub.pi_u @ sub.pi_u, sub.pi_u, atol=1e-10)
        assert_allclose(sub.pi_u, sub.pi_u.conj().T, atol=1e-12)
        assert_allclose(sub.pi_u + sub.pi_n, np.eye(5), atol=1e-12)
        assert np.trace(sub.pi_u).real == pytest.approx(sub.u, abs=1e-10)
        assert_allclose(sub.basis[:, 0], psi, atol=1e-12)


class TestChannels:
    def test_depolarize_endpoints(self, rng):
        rho = model_density(random_model(rng, 3, 1), [0.2])
        assert_allclose(depolarize(rho, 0.0), rho, atol=1e-15)
        assert_allclose(depolarize(rho, 1.0), np.eye(3) / 3.0, atol=1e-15)

    def test_depolarize_pure_qubit_half(self):
        rho = np.diag([1.0, 0.0]).astype(complex)
        assert_allclose(depolarize(rho, 0.5), np.diag([0.75, 0.25]), atol=1e-15)

    def test_depolarize_bad_eps(self):
        with pytest.raises(InvalidInputError):
            depolarize(np.eye(2) / 2.0, 1.5)

    def test_postselect_identity(self, rng):
        rho = model_density(random_model(rng, 3, 1), [0.4])
        out, prob = postselect(rho, np.eye(3, dtype=complex))
        assert prob == pytest.approx(1.0, abs=1e-12)
        assert_allclose(out, rho, atol=1e-12)

    def test_postselect_projector_on_mixed(self):
        k = np.diag([1.0, 0.0]).astype(complex)
        out, prob = postselect(np.eye(2, dtype=complex) / 2.0, k)
        assert prob == pytest.approx(0.5, abs=1e-14)
        assert_allclose(out, np.diag([1.0, 0.0]), atol=1e-14)

    def test_jal_pass_probability_is_t2(self, rng):
        model = random_model(rng, 4, 2)
        theta = rng.uniform(-1, 1, 2)
        rho = model_density(model, theta)
        flt = jal_filter(rho, 0.25)
        _, prob = postselect(rho, flt.k)
        assert prob == pytest.approx(0.25, abs=1e-12)

    def test_postselect_degenerate_raises(self):
        psi = np.array([1.0, 0.0])
        k = np.diag([0.0, 1.0]).astype(complex)
        with pytest.raises(PostselectionError):
            postselect(pure_density(psi), k)

    def test_postselect_invalid_povm_raises(self):
        with pytest.raises(InvalidInputError):
            postselect(np.eye(2, dtype=complex) / 2.0, 2.0 * np.eye(2, dtype=complex))

    def test_noise_before_reduces_to_postselect_at_zero_noise(self, rng):
        model = random_model(rng, 3, 1)
        flt = jal_filter(model_density(model, [0.3]), 0.5)
        s1, p1 = noise_before_ps_state(model, [0.3], flt.k, 0.0)
        s2, p2 = postselect(model_density(model, [0.3]), flt.k)
        assert_allclose(s1, s2, atol=1e-12)
        assert p1 == pytest.approx(p2, abs=1e-12)

    def test_noise_before_identity_kraus_is_depolarize(self, rng):
        model = random_model(rng, 3, 1)
        s, p = noise_before_ps_state(model, [0.3], np.eye(3, dtype=complex), 0.4)
        assert p == pytest.approx(1.0, abs=1e-12)
        assert_allclose(s, depolarize(model_density(model, [0.3]), 0.4), atol=1e-12)

    def test_noise_before_jal_probability_worked_value(self, qubit_rotation_model):
        rho = model_density(qubit_rotation_model, [0.3])
        flt = jal_filter(rho, 0.25)
        _, p = noise_before_ps_state(qubit_rotation_model, [0.3], flt.k, 0.5)
        # (1-eps) t^2 + (eps/d) Tr F = 0.5*0.25 + 0.25*1.25
        assert p == pytest.approx(0.4375, abs=1e-12)

    def test_noise_after_equals_postselect_then_depolarize(self, rng):
        model = random_model(rng, 3, 1)
        flt = jal_filter(model_density(model, [0.1]), 0.3)
        s, p = noise_after_ps_state(model, [0.1], flt.k, 0.6)
        ps, p2 = postselect(model_density(model, [0.1]), flt.k)
        assert p == pytest.approx(p2, abs=1e-14)
        assert_allclose(s, depolarize(ps, 0.6), atol=1e-12)

    def test_order_matters_for_nontrivial_kraus(self, rng):
        for _ in range(5):
            model = random_model(rng, 4, 2)
            theta = rng.uniform(-1, 1, 2)
            psi = evolve(model, theta)
            sub = useful_subspace(psi, derivative_states(model, theta))
            from psfilter.filters import DiagonalFilterParams, diagonal_family_filter
            flt = diagonal_family_filter(psi, sub, DiagonalFilterParams(0.3, 0.8, 0.2))
            before, _ = noise_before_ps_state(model, theta, flt.k, 0.5)
            after, _ = noise_after_ps_state(model, theta, flt.k, 0.5)
            assert np.max(np.abs(before - after)) > 1e-6

    def test_orders_coincide_for_scaled_identity(self, rng):
        model = random_model(rng, 3, 1)
        k = np.sqrt(0.7) * np.eye(3, dtype=complex)
        s1, _ = noise_before_ps_state(model, [0.2], k, 0.5)
        s2, _ = noise_after_ps_state(model, [0.2], k, 0.5)
        assert_allclose(s1, s2, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 8),
           eps=st.floats(0.0, 1.0))
    def test_channel_outputs_are_density_matrices(self, seed, d, eps):
        gen = np.random.default_rng(seed)
        model = random_model(gen, d, 1)
        theta = gen.uniform(-2, 2, 1)
        rho = depolarize(model_density(model, theta), eps)
        check_density_matrix(rho)
        flt = jal_filter(model_density(model, theta), float(gen.uniform(0.05, 1.0)))
        out, prob = postselect(rho, flt.k)
        check_density_matrix(out)
        assert -1e-12 <= prob <= 1.0 + 1e-12

    def test_postselect_probability_range_randomized(self, rng):
        # random valid filters on random states: pass probability stays in [0, 1]
        from psfilter.linalg import hermitian_sqrt
        from psfilter.optimize import _clip_unit_interval
        for _ in range(1000):
            d = int(rng.integers(2, 9))
            rho = model_density(random_model(rng, d, 1), rng.uniform(-1, 1, 1))
            z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            f = _clip_unit_interval(z @ z.conj().T / d)
            k = hermitian_sqrt(f)
            try:
                _, prob = postselect(rho, k)
            except PostselectionError:
                continue
            assert -1e-12 <= prob <= 1.0 + 1e-12


class TestModelSerialization:
    def test_round_trip(self, rng, tmp_path):
        model = random_model(rng, 3, 2)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert_allclose(loaded.psi0, model.psi0, atol=0)
        for a, b in zip(loaded.generators, model.generators):
            assert_allclose(a, b, atol=0)

    def test_schema_shape(self, rng, tmp_path):
        model = random_model(rng, 2, 1)
        path = tmp_path / "model.json"
        save_model(model, path)
        data = json.loads(path.read_text())
        assert data["d"] == 2 and data["M"] == 1
        assert len(data["psi0"]) == 2 and len(data["psi0"][0]) == 2
        assert len(data["generators"][0]) == 2

    def test_malformed_payload_raises(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\"d\": 2}")
        with pytest.raises(InvalidInputError):
            load_model(path)
