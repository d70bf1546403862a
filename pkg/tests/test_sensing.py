"""Measurement operator: matrix-free vs dense, adjointness, RIP evaluation."""

import math
from itertools import combinations

import numpy as np
import pytest

from csra.config import SystemConfig, control_window
from csra.model import build_pilot_book
from csra.sensing import (SensingOperator, DenseOperator, build_operator,
                          randomized_multiplier, restricted_lstsq,
                          rip_constant_exact, rip_sample_complexity,
                          export_dense_csv)


def toy_cfg(**kw):
    base = dict(n=256, m=64, window_mode="random", t_cp=32, u_max=8, k1=2,
                k2=5, b_slots=8, alpha=0.5, snr_db=20.0, modulation="bpsk",
                bits_per_user=16, seed=99, trials=4, sensing_mode="plain")
    base.update(kw)
    return SystemConfig(**base)


def random_vec(rng, size):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


@pytest.fixture(params=["plain", "randomized"])
def toy_op(request):
    cfg = toy_cfg(sensing_mode=request.param)
    return build_operator(cfg)


class TestApplyAdjoint:
    def test_zero_maps_to_zero(self, toy_op):
        assert np.all(toy_op.apply(np.zeros(toy_op.shape[1])) == 0)
        assert np.all(toy_op.adjoint(np.zeros(toy_op.shape[0])) == 0)

    def test_single_tap_column_formula(self):
        # plain mode: unit tap at delay 0 reads the pilot window values
        cfg = toy_cfg()
        op = build_operator(cfg)
        h = np.zeros(op.shape[1], dtype=complex)
        h[3 * cfg.t_cp] = 1.0
        assert np.allclose(op.apply(h), op.pilots.window_values[3], atol=1e-12)

    def test_matrix_free_matches_dense(self, toy_op):
        rng = np.random.default_rng(11)
        dense = toy_op.materialize()
        for _ in range(10):
            h = random_vec(rng, toy_op.shape[1])
            ref = dense @ h
            scale = max(1.0, np.max(np.abs(ref)))
            assert np.max(np.abs(toy_op.apply(h) - ref)) / scale <= 1e-10

    def test_adjoint_identity(self, toy_op):
        rng = np.random.default_rng(12)
        for _ in range(100):
            x = random_vec(rng, toy_op.shape[1])
            y = random_vec(rng, toy_op.shape[0])
            lhs = np.vdot(y, toy_op.apply(x))
            rhs = np.vdot(toy_op.adjoint(y), x)
            assert abs(lhs - rhs) / max(1.0, abs(lhs)) <= 1e-10

    def test_single_row_adjoint_is_conjugate_column(self):
        cfg = toy_cfg()
        op = build_operator(cfg)
        f = 7
        y = np.zeros(op.shape[0], dtype=complex)
        y[f] = 1.0
        out = op.adjoint(y)
        win = op.window
        u, t = 2, 5
        expected = np.conj(op.pilots.window_values[u, f]) * np.exp(
            2j * np.pi * win[f] * t / cfg.n)
        assert out[u * cfg.t_cp + t] == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self, toy_op):
        with pytest.raises(ValueError):
            toy_op.apply(np.zeros(3))
        with pytest.raises(ValueError):
            toy_op.adjoint(np.zeros(3))

    def test_trivial_multiplier_is_bit_identical_to_plain(self):
        cfg = toy_cfg()
        pilots = build_pilot_book(cfg)
        plain = SensingOperator(pilots, cfg.t_cp)
        trivial = SensingOperator(pilots, cfg.t_cp, xi=np.ones(cfg.n, dtype=complex))
        h = random_vec(np.random.default_rng(13), plain.shape[1])
        assert np.array_equal(plain.apply(h), trivial.apply(h))


class TestMaterialize:
    def test_column_cap(self):
        cfg = toy_cfg()
        op = SensingOperator(build_pilot_book(cfg), cfg.t_cp, col_cap=16)
        with pytest.raises(ValueError):
            op.materialize()

    def test_zero_pilots_zero_matrix(self):
        with pytest.warns(UserWarning):
            op = build_operator(toy_cfg(alpha=0.0))
        assert np.all(op.materialize() == 0)

    def test_plain_column_norms(self):
        # every column has norm sqrt(m) * pilot magnitude = sqrt(n * alpha)
        cfg = toy_cfg()
        dense = build_operator(cfg).materialize()
        norms = np.linalg.norm(dense, axis=0)
        assert np.allclose(norms, math.sqrt(cfg.n * cfg.alpha), atol=1e-10)

    def test_csv_export_roundtrip(self, tmp_path):
        cfg = toy_cfg()
        dense = build_operator(cfg).materialize()[:4, :6]
        path = tmp_path / "op.csv"
        export_dense_csv(dense, path)
        raw = np.loadtxt(path, delimiter=",")
        assert np.allclose(raw[:, 0::2] + 1j * raw[:, 1::2], dense, atol=1e-12)


class TestRestrictedLstsq:
    def test_empty_support(self, toy_op):
        z, flagged = restricted_lstsq(toy_op, np.zeros(toy_op.shape[0]), [])
        assert np.all(z == 0) and not flagged

    def test_consistent_system_recovers(self, toy_op):
        rng = np.random.default_rng(14)
        support = np.sort(rng.choice(toy_op.shape[1], 6, replace=False))
        h = np.zeros(toy_op.shape[1], dtype=complex)
        h[support] = random_vec(rng, 6)
        z, flagged = restricted_lstsq(toy_op, toy_op.apply(h), support)
        assert not flagged
        assert np.linalg.norm(z - h) <= 1e-8

    def test_residual_orthogonal_to_columns(self, toy_op):
        rng = np.random.default_rng(15)
        support = np.sort(rng.choice(toy_op.shape[1], 10, replace=False))
        y = random_vec(rng, toy_op.shape[0])
        z, _ = restricted_lstsq(toy_op, y, support)
        residual = y - toy_op.columns(support) @ z[support]
        inner = toy_op.columns(support).conj().T @ residual
        assert np.max(np.abs(inner)) <= 1e-8

    def test_rank_deficient_flagged(self):
        col = np.array([[1.0], [2.0]])
        op = DenseOperator(np.hstack([col, col]))
        z, flagged = restricted_lstsq(op, np.array([1.0, 2.0]), [0, 1])
        assert flagged
        # minimum-norm solution splits the coefficient across the twin columns
        assert np.allclose(z, [0.5, 0.5], atol=1e-12)

    def test_support_too_large(self, toy_op):
        with pytest.raises(ValueError):
            restricted_lstsq(toy_op, np.zeros(toy_op.shape[0]),
                             np.arange(toy_op.shape[0] + 1))


class TestRip:
    def brute_delta(self, mat, k):
        # independent enumeration oracle: scale, then exhaust eigenvalues
        mat = mat / np.mean(np.linalg.norm(mat, axis=0))
        worst = -np.inf
        for sup in combinations(range(mat.shape[1]), k):
            sub = mat[:, list(sup)]
            eig = np.linalg.eigvalsh(sub.conj().T @ sub)
            worst = max(worst, eig[-1] - 1.0, 1.0 - eig[0])
        return worst

    def test_unitary_has_zero_delta(self):
        mat = np.fft.fft(np.eye(8), norm="ortho")
        for k in (1, 2, 3):
            assert rip_constant_exact(mat, k).delta_k <= 1e-10

    def test_duplicate_columns_delta_two_is_one(self):
        rng = np.random.default_rng(16)
        mat = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        mat /= np.linalg.norm(mat, axis=0, keepdims=True)
        mat[:, 3] = mat[:, 0]
        report = rip_constant_exact(mat, 2)
        assert report.delta_k == pytest.approx(1.0, abs=1e-10)
        assert set(report.support) == {0, 3}

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(17)
        rows = np.sort(rng.choice(32, 12, replace=False))
        dft = np.fft.fft(np.eye(32))[rows][:, :20]   # partial-Fourier style
        assert rip_constant_exact(dft, 2).delta_k == pytest.approx(
            self.brute_delta(dft, 2), abs=1e-12)

    def test_monotone_in_k(self):
        rng = np.random.default_rng(18)
        mat = rng.standard_normal((12, 16)) + 1j * rng.standard_normal((12, 16))
        deltas = [rip_constant_exact(mat, k).delta_k for k in (1, 2, 3, 4)]
        assert all(deltas[i] <= deltas[i + 1] + 1e-12 for i in range(3))

    def test_size_caps(self):
        with pytest.raises(ValueError):
            rip_constant_exact(np.eye(30), 2)
        with pytest.raises(ValueError):
            rip_constant_exact(np.eye(10), 5)


class TestSampleComplexity:
    def test_log_one_point(self):
        assert rip_sample_complexity(math.e, 1, 1.0, 1.0, 1.0) == 1

    def test_linear_in_k(self):
        assert rip_sample_complexity(math.e, 2, 1.0, 1.0, 1.0) == 2

    def test_lte_scale_value(self):
        # 150 * log^5(24576), evaluated independently and frozen
        assert rip_sample_complexity(24576, 6, 0.2, 1.0, 1.0) == 15839635

    def test_domain(self):
        with pytest.raises(ValueError):
            rip_sample_complexity(100, 1, 0.0, 1.0, 1.0)
