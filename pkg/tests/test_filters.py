import numpy as np
import pytest
from numpy.testing import assert_allclose

from psfilter import analysis, core
from psfilter.errors import InvalidFilterError, InvalidInputError
from psfilter.filters import (
    DiagonalFilterParams,
    Filter,
    QubitFilterParams,
    diagonal_family_filter,
    filter_from_dict,
    filter_to_dict,
    jal_filter,
    load_filter,
    naive_filter,
    offdiag_qutrit_filter,
    optimal_noiseless_filter,
    qubit_filter,
    save_filter,
)
from psfilter.fisher import qfim_pure, qfim_pure_postselected
from psfilter.linalg import outer


def _random_state_and_subspace(rng, d, u):
    return analysis.synthetic_family(rng, d, u)


class TestJalFilter:
    def test_t2_one_is_identity(self, rng):
        rho = core.model_density(core.random_model(rng, 3, 1), [0.3])
        assert_allclose(jal_filter(rho, 1.0).f, np.eye(3), atol=1e-12)

    def test_t2_zero_is_orthogonal_projector(self, rng):
        rho = core.model_density(core.random_model(rng, 3, 1), [0.3])
        flt = jal_filter(rho, 0.0)
        assert_allclose(flt.f, np.eye(3) - rho, atol=1e-12)

    def test_spectrum_pure_qutrit(self, rng):
        rho = core.model_density(core.random_model(rng, 3, 1), [0.5])
        flt = jal_filter(rho, 0.25)
        assert_allclose(np.linalg.eigvalsh(flt.f), [0.25, 1.0, 1.0], atol=1e-12)

    def test_invalid_t2(self, rng):
        rho = core.model_density(core.random_model(rng, 2, 1), [0.0])
        with pytest.raises(InvalidInputError):
            jal_filter(rho, 1.5)

    def test_equals_diagonal_family_when_subspace_fills_space(self, qubit_rotation_model):
        psi = core.evolve(qubit_rotation_model, [0.4])
        sub = core.useful_subspace(psi, core.derivative_states(qubit_rotation_model, [0.4]))
        assert sub.u == 2
        flt_jal = jal_filter(outer(psi), 0.3)
        flt_diag = diagonal_family_filter(psi, sub, DiagonalFilterParams(0.3, 1.0, 1.0))
        assert_allclose(flt_jal.f, flt_diag.f, atol=1e-12)


class TestDiagonalFamily:
    def test_all_ones_is_identity(self, rng):
        psi, _, sub = _random_state_and_subspace(rng, 4, 2)
        flt = diagonal_family_filter(psi, sub, DiagonalFilterParams(1.0, 1.0, 1.0))
        assert_allclose(flt.f, np.eye(4), atol=1e-12)

    def test_eigenvalue_multiplicities(self, rng):
        psi, _, sub = _random_state_and_subspace(rng, 5, 3)
        params = DiagonalFilterParams(0.2, 0.6, 0.9)
        flt = diagonal_family_filter(psi, sub, params)
        w = np.sort(np.linalg.eigvalsh(flt.f))
        expected = np.sort([0.2] + [0.6] * 2 + [0.9] * 2)
        assert_allclose(w, expected, atol=1e-10)

    def test_state_is_eigenvector(self, rng):
        psi, _, sub = _random_state_and_subspace(rng, 4, 3)
        flt = diagonal_family_filter(psi, sub, DiagonalFilterParams(0.37, 0.8, 0.0))
        assert_allclose(flt.f @ psi, 0.37 * psi, atol=1e-10)

    def test_param_range_validation(self):
        with pytest.raises(InvalidInputError):
            DiagonalFilterParams(1.2, 0.5, 0.5)


class TestOptimalNoiselessFilter:
    def test_default_blocks_reduce_to_jal(self, rng):
        psi, _, sub = _random_state_and_subspace(rng, 4, 2)
        flt = optimal_noiseless_filter(psi, sub, 0.3)
        expected = jal_filter(outer(psi), 0.3)
        assert_allclose(flt.f, expected.f, atol=1e-10)

    def test_zero_blocks(self, rng):
        psi, _, sub = _random_state_and_subspace(rng, 4, 2)
        flt = optimal_noiseless_filter(psi, sub, 0.3,
                                       c_block=np.zeros((2, 2)),
                                       d_block=np.zeros((2, 2)))
        expected = (0.3 - 1.0) * outer(psi) + sub.pi_u
        assert_allclose(flt.f, expected, atol=1e-10)

    def test_any_admissible_blocks_are_lossless(self, rng):
        for _ in range(6):
            psi, dpsis, sub = _random_state_and_subspace(rng, 4, 2)
            p_ps = float(rng.uniform(0.1, 0.9))
            c = 0.15 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
            d_block = np.diag(rng.uniform(0.3, 0.9, 2)).astype(complex)
            flt = optimal_noiseless_filter(psi, sub, p_ps, c, d_block)
            after = qfim_pure_postselected(psi, dpsis, flt.f)
            before = qfim_pure(psi, dpsis)
            ratios = analysis.amplification_numeric(after, before)
            assert ratios.uniform
            assert ratios.mean_ratio * p_ps == pytest.approx(1.0, abs=1e-8)

    def test_inadmissible_blocks_rejected(self, rng):
        psi, _, sub = _random_state_and_subspace(rng, 4, 2)
        with pytest.raises(InvalidFilterError):
            optimal_noiseless_filter(psi, sub, 0.3,
                                     c_block=3.0 * np.ones((2, 2)),
                                     d_block=np.eye(2))

    def test_block_shape_validation(self, rng):
        psi, _, sub = _random_state_and_subspace(rng, 4, 2)
        with pytest.raises(InvalidInputError):
            optimal_noiseless_filter(psi, sub, 0.3, c_block=np.zeros((1, 1)),
                                     d_block=np.eye(2))


class TestPerturbedFiltersLoseInformation:
    def test_damped_orthogonal_transmission_is_suboptimal(self, rng):
        # lowering the orthogonal-subspace transmission below 1 strictly
        # reduces the amplification at fixed pass probability
        for d in (3, 4):
            psi, dpsis, sub = _random_state_and_subspace(rng, d, 2)
            p_ps = 0.25
            before = qfim_pure(psi, dpsis)
            opt = optimal_noiseless_filter(psi, sub, p_ps)
            best = analysis.amplification_numeric(
                qfim_pure_postselected(psi, dpsis, opt.f), before).mean_ratio
            for _ in range(40):
                bsub = float(rng.uniform(0.2, 0.95))
                params = DiagonalFilterParams(p_ps, bsub, 1.0)
                flt = diagonal_family_filter(psi, sub, params)
                got = analysis.amplification_numeric(
                    qfim_pure_postselected(psi, dpsis, flt.f), before)
                assert np.max(got.ratios) < best - 1e-6

    def test_coherent_leak_is_suboptimal(self, rng):
        # any coupling between the state and its orthogonal directions (a
        # nonzero cross matrix element) strictly reduces the amplification
        psi, dpsis, sub = _random_state_and_subspace(rng, 3, 2)
        p_ps = 0.25
        before = qfim_pure(psi, dpsis)
        basis = np.column_stack([sub.basis, sub.basis_perp])
        for _ in range(40):
            fa = np.eye(3, dtype=complex)
            fa[0, 0] = p_ps
            leak = 0.2 * (rng.standard_normal() + 1j * rng.standard_normal())
            fa[0, 1] = leak
            fa[1, 0] = np.conj(leak)
            f = basis @ fa @ basis.conj().T
            w = np.linalg.eigvalsh(f)
            if w[0] < 0 or w[-1] > 1:
                continue
            got = qfim_pure_postselected(psi, dpsis, f)
            ratio = np.max(got / before)
            assert ratio < 1.0 / p_ps - 1e-6


class TestQubitFilter:
    def test_full_transmission_is_identity(self, rng):
        g = rng.uniform(0, 1)
        phase = np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
        params = QubitFilterParams(1.0, 1.0, np.sqrt(g) * phase[0],
                                   np.sqrt(1 - g) * phase[1])
        assert_allclose(qubit_filter(params).f, np.eye(2), atol=1e-12)

    def test_trivial_rotation_gives_diagonal(self):
        params = QubitFilterParams(0.7, 0.4, 1.0, 0.0)
        assert_allclose(qubit_filter(params).f, np.diag([0.49, 0.16]), atol=1e-12)

    def test_noisy_pass_probability_closed_form(self, rng):
        psi = np.array([1.0, 0.0])
        dpsi = np.array([0.2j, 0.6])
        for _ in range(10):
            a, b = rng.uniform(0.05, 1.0, 2)
            g = rng.uniform(0, 1)
            phase = np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
            gamma, beta = np.sqrt(g) * phase[0], np.sqrt(1 - g) * phase[1]
            eps = float(rng.uniform(0, 1))
            flt = qubit_filter(QubitFilterParams(a, b, gamma, beta))
            fam = analysis.family_from_state(psi, [dpsi], flt=flt, eps=eps, order="before")
            expected = 0.5 * ((a * a + b * b) * eps
                              + 2 * (1 - eps) * (a * a * g + b * b * (1 - g)))
            assert fam.prob == pytest.approx(expected, abs=1e-12)

    def test_normalization_validated(self):
        with pytest.raises(InvalidInputError):
            QubitFilterParams(0.5, 0.5, 1.0, 1.0)


class TestOffdiagQutritFilter:
    def test_spectrum(self):
        flt = offdiag_qutrit_filter(0.5, 0.6)
        assert_allclose(np.sort(np.linalg.eigvalsh(flt.f)), [0.0, 0.25 + 0.36, 1.0],
                        atol=1e-12)

    def test_out_of_range_mixing_rejected(self):
        with pytest.raises(InvalidInputError):
            offdiag_qutrit_filter(0.5, 0.9)  # 0.25 + 0.81 > 1

    def test_kraus_matches_construction(self):
        flt = offdiag_qutrit_filter(0.5, 0.2)
        assert_allclose(flt.k, [[0.5, 0, 0.2], [0, 1, 0], [0, 0, 0]], atol=1e-15)

    def test_rates_worked_point(self):
        t2, alpha_sq = 0.25, 0.25
        b = np.sqrt(1 - t2)
        diag = analysis.qutrit_diag_rate(t2, alpha_sq)
        off = analysis.qutrit_offdiag_rate(t2, b, alpha_sq)
        assert diag == pytest.approx(0.375, abs=1e-12)
        assert off == pytest.approx(0.39622641509433965, abs=1e-12)
        assert off > diag


class TestNaiveFilter:
    def test_full_pass(self):
        assert_allclose(naive_filter(3, 1.0).f, np.eye(3), atol=1e-15)

    def test_constant_pass_probability(self, rng):
        flt = naive_filter(4, 0.3)
        rho = core.model_density(core.random_model(rng, 4, 1), [0.2])
        _, prob = core.postselect(rho, flt.k)
        assert prob == pytest.approx(0.3, abs=1e-12)

    def test_efficiency_equals_pmax(self):
        geom = analysis.NoiseGeometry(0.5, 2, 2)
        params = DiagonalFilterParams(0.2, 0.2, 0.2)
        assert analysis.efficiency_noisy_closed(geom, params) == pytest.approx(0.2, abs=1e-12)


class TestFilterInvariants:
    def test_randomized_constructor_sweep(self, rng):
        # every constructor output satisfies 0 <= F <= 1 and F = K^dag K
        count = 0
        while count < 1000:
            kind = count % 5
            if kind == 0:
                rho = core.model_density(core.random_model(rng, int(rng.integers(2, 5)), 1),
                                         rng.uniform(-1, 1, 1))
                flt = jal_filter(rho, float(rng.uniform(0, 1)))
            elif kind == 1:
                d = int(rng.integers(2, 6))
                u = int(rng.integers(1, d + 1))
                psi, _, sub = _random_state_and_subspace(rng, d, u)
                flt = diagonal_family_filter(psi, sub, DiagonalFilterParams(
                    float(rng.uniform(0, 1)), float(rng.uniform(0, 1)),
                    float(rng.uniform(0, 1))))
            elif kind == 2:
                g = rng.uniform(0, 1)
                phase = np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
                flt = qubit_filter(QubitFilterParams(
                    float(rng.uniform(0, 1)), float(rng.uniform(0, 1)),
                    np.sqrt(g) * phase[0], np.sqrt(1 - g) * phase[1]))
            elif kind == 3:
                t = float(rng.uniform(0, 1))
                flt = offdiag_qutrit_filter(t, float(rng.uniform(0, np.sqrt(1 - t * t))))
            else:
                flt = naive_filter(int(rng.integers(2, 6)), float(rng.uniform(0, 1)))
            w = np.linalg.eigvalsh(flt.f)
            assert w[0] >= -1e-10 and w[-1] <= 1 + 1e-10
            assert np.max(np.abs(flt.k.conj().T @ flt.k - flt.f)) <= 1e-10
            count += 1

    def test_filter_dataclass_rejects_inconsistent_kraus(self):
        with pytest.raises(InvalidFilterError):
            Filter(f=np.eye(2, dtype=complex), k=0.5 * np.eye(2, dtype=complex))

    def test_filter_dataclass_rejects_bad_spectrum(self):
        with pytest.raises(InvalidFilterError):
            Filter(f=2.0 * np.eye(2, dtype=complex),
                   k=np.sqrt(2.0) * np.eye(2, dtype=complex))


class TestFilterSerialization:
    def test_round_trip_file(self, rng, tmp_path):
        rho = core.model_density(core.random_model(rng, 3, 1), [0.3])
        flt = jal_filter(rho, 0.4)
        path = tmp_path / "filter.json"
        save_filter(flt, path)
        loaded = load_filter(path)
        assert_allclose(loaded.f, flt.f, atol=0)
        assert_allclose(loaded.k, flt.k, atol=0)

    def test_dict_schema(self):
        flt = naive_filter(2, 0.5)
        data = filter_to_dict(flt)
        assert set(data) == {"F", "K"}
        assert data["F"][0][0] == [0.5, 0.0]
        assert_allclose(filter_from_dict(data).f, flt.f, atol=0)

    def test_bad_payload(self):
        with pytest.raises(InvalidInputError):
            filter_from_dict({"F": [[[0.5, 0.0]]]})
