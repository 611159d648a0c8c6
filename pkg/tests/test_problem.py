"""Tests for the problem model, validation, truncation and problem sources."""

import logging

import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from tadi.adi_block import run_block_adi
from tadi.errors import InputError, ZeroConstantTermError
from tadi.oracle import dense_lyap_solve
from tadi.problem import (
    Arithmetic,
    LyapunovProblem,
    SpectrumSpec,
    bilinear_constant_term,
    compress_ldl,
    first_order_from_second_order,
    load_matrix_market,
    load_second_order,
    random_couplings,
    rank_truncate,
    save_matrix_market,
    synth_bilinear_problem,
    synth_problem,
    truncate_constant_term,
    validate,
)
from tadi.shift_selector import ProjectionShiftSource


class TestCreate:
    def test_defaults(self):
        problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.array([1.0, 1.0]))
        np.testing.assert_array_equal(problem.E.to_dense(), np.eye(2))
        np.testing.assert_array_equal(problem.R, [[1.0]])
        assert (problem.n, problem.m) == (2, 1)
        assert problem.arithmetic is Arithmetic.REAL

    def test_b_row_mismatch(self):
        with pytest.raises(InputError, match="rows"):
            LyapunovProblem.create(np.diag([-1.0, -2.0]), np.ones((3, 1)))

    def test_more_columns_than_rows(self):
        with pytest.raises(InputError):
            LyapunovProblem.create(np.array([[-1.0]]), np.ones((1, 2)))

    def test_r_shape_mismatch(self):
        with pytest.raises(InputError, match="R must be"):
            LyapunovProblem.create(np.diag([-1.0, -2.0]), np.ones((2, 1)), R=np.eye(2))

    def test_complex_data_resolves_complex(self):
        problem = LyapunovProblem.create(np.diag([-1.0 + 1j, -2.0]), np.ones((2, 1)))
        assert problem.arithmetic is Arithmetic.COMPLEX

    def test_complex_typed_real_values_cast_in_real_mode(self):
        problem = LyapunovProblem.create(
            np.diag([-1.0, -2.0]), np.ones((2, 1), dtype=complex), R=np.array([[2.0 + 0j]]), arithmetic="real"
        )
        assert not np.iscomplexobj(problem.B)
        assert not np.iscomplexobj(problem.R)


class TestValidate:
    def test_hurwitz(self):
        problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.eye(2), R=np.diag([1.0, -1.0]))
        report = validate(problem)
        assert report.hurwitz is True
        assert report.max_real_eigenvalue == pytest.approx(-1.0)
        assert report.inertia == (1, 1, 0)
        assert report.ok

    def test_non_hermitian_center(self):
        problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.eye(2), R=np.array([[0.0, 1.0], [0.0, 0.0]]))
        report = validate(problem)
        assert not report.is_hermitian
        assert any("Hermitian" in issue for issue in report.issues())

    def test_unstable(self):
        problem = LyapunovProblem.create(np.diag([1.0, -2.0]), np.eye(2))
        report = validate(problem, check_stability=True)
        assert report.hurwitz is False
        assert report.max_real_eigenvalue == pytest.approx(1.0)

    def test_stability_skipped(self):
        problem = LyapunovProblem.create(np.diag([1.0, -2.0]), np.eye(2))
        assert validate(problem, check_stability=False).hurwitz is None

    def test_realness_violation(self):
        problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.ones((2, 1)) * (1 + 1j), arithmetic="real")
        assert validate(problem, check_stability=False).realness_violations == ["B"]


class TestRankTruncate:
    def test_zero_eigenvalue_dropped(self):
        B = np.array([[1.0, 2.0], [3.0, 4.0]])
        B_hat, R_hat = rank_truncate(B, np.diag([1.0, 0.0]))
        np.testing.assert_allclose(np.abs(B_hat), [[1.0], [3.0]])
        np.testing.assert_allclose(R_hat, [[1.0]])

    def test_full_rank_unchanged_product(self):
        B = np.array([[1.0, 2.0], [3.0, 4.0]])
        R = np.diag([2.0, -1.0])
        B_hat, R_hat = rank_truncate(B, R)
        assert B_hat.shape == (2, 2)
        np.testing.assert_allclose(B_hat @ R_hat @ B_hat.T, B @ R @ B.T)

    def test_rank_one_center(self):
        B = np.eye(2)
        R = np.ones((2, 2))
        B_hat, R_hat = rank_truncate(B, R)
        assert B_hat.shape == (2, 1)
        np.testing.assert_allclose(B_hat @ R_hat @ B_hat.T, np.ones((2, 2)), atol=1e-14)

    def test_zero_center(self):
        with pytest.raises(ZeroConstantTermError, match="X = 0"):
            rank_truncate(np.eye(2), np.zeros((2, 2)))

    def test_truncate_constant_term_keeps_pencil(self):
        problem = LyapunovProblem.create(np.diag([-1.0, -2.0]), np.eye(2), R=np.diag([1.0, 0.0]))
        truncated = truncate_constant_term(problem)
        assert truncated.m == 1
        assert truncated.A is problem.A
        assert truncated.is_real


class TestSynthProblem:
    def test_inertia_and_stability(self):
        problem = synth_problem(8, 2, SpectrumSpec(seed=4), r_negative=1)
        report = validate(problem)
        assert report.hurwitz is True
        assert report.inertia == (1, 1, 0)

    def test_positive_definite_center(self):
        problem = synth_problem(8, 2, SpectrumSpec(seed=4), r_negative=0)
        assert np.all(np.linalg.eigvalsh(problem.R) > 0)

    def test_deterministic(self):
        first = synth_problem(12, 3, SpectrumSpec(seed=9), r_negative=1)
        second = synth_problem(12, 3, SpectrumSpec(seed=9), r_negative=1)
        np.testing.assert_array_equal(first.A.matrix, second.A.matrix)
        np.testing.assert_array_equal(first.B, second.B)
        np.testing.assert_array_equal(first.R, second.R)

    def test_eigenvalues_in_region(self):
        spec = SpectrumSpec(re_min=-5.0, re_max=-0.5, imag_max=2.0, seed=1)
        problem = synth_problem(16, 2, spec)
        eigenvalues = np.linalg.eigvals(np.linalg.solve(problem.E.to_dense(), problem.A.to_dense()))
        assert np.all(eigenvalues.real >= -5.0 - 1e-8)
        assert np.all(eigenvalues.real <= -0.5 + 1e-8)
        assert np.all(np.abs(eigenvalues.imag) <= 2.0 + 1e-8)

    def test_default_spectrum_gives_low_rank_solution(self):
        X = dense_lyap_solve(synth_problem(80, 2, r_negative=1)).X
        singular_values = np.linalg.svd(X, compute_uv=False)
        assert np.sum(singular_values > 1e-12 * singular_values[0]) <= 40

    def test_complex_arithmetic(self):
        problem = synth_problem(10, 2, arithmetic="complex")
        assert problem.arithmetic is Arithmetic.COMPLEX
        assert np.iscomplexobj(problem.B)

    @pytest.mark.parametrize(
        "spec",
        [SpectrumSpec(re_min=-1.0, re_max=0.5), SpectrumSpec(re_min=-1.0, re_max=-2.0), SpectrumSpec(imag_max=0.0)],
    )
    def test_infeasible_spectrum(self, spec):
        with pytest.raises(InputError):
            synth_problem(8, 2, spec)

    def test_too_many_negative(self):
        with pytest.raises(InputError, match="r_negative"):
            synth_problem(8, 2, r_negative=3)


class TestCouplingTerms:
    def test_bilinear_constant_term_layout(self, diag_problem):
        L = np.array([[1.0], [0.5]])
        D = np.array([[2.0]])
        N = np.array([[0.0, 1.0], [1.0, 0.0]])
        problem = bilinear_constant_term(diag_problem, [N], L, D)
        assert problem.m == 2
        np.testing.assert_allclose(problem.B[:, 1], [0.5, 1.0])
        np.testing.assert_allclose(problem.R, np.diag([1.0, 2.0]))

    def test_bilinear_shape_mismatch(self, diag_problem):
        with pytest.raises(InputError):
            bilinear_constant_term(diag_problem, [np.eye(3)], np.ones((2, 1)), np.eye(1))

    def test_compress_ldl(self):
        x = np.array([1.0, 2.0, 2.0])
        L = np.column_stack([x, x])
        L_c, D_c = compress_ldl(L, np.eye(2))
        assert L_c.shape == (3, 1)
        np.testing.assert_allclose(L_c @ D_c @ L_c.T, 2 * np.outer(x, x), atol=1e-12)

    def test_compress_ldl_rank_cap(self):
        rng = np.random.default_rng(0)
        L = rng.standard_normal((10, 6))
        L_c, D_c = compress_ldl(L, np.diag([5.0, -4.0, 3.0, -2.0, 1.0, 0.5]), rank=2)
        assert L_c.shape == (10, 2)
        assert D_c.shape == (2, 2)

    def test_synth_bilinear_problem(self):
        problem = synth_bilinear_problem(30, 2, SpectrumSpec(seed=2), r_negative=1, n_terms=1, rank=4)
        assert 2 < problem.m <= 6
        assert validate(problem, check_stability=False).is_hermitian
        assert problem.is_real

    def test_synth_bilinear_keeps_compressed_solution(self, caplog):
        spec = SpectrumSpec(seed=2)
        with caplog.at_level(logging.WARNING, logger="tadi.problem"):
            problem = synth_bilinear_problem(60, 2, spec, r_negative=1, n_terms=2, rank=6)
        assert "Base solve" not in caplog.text
        assert problem.m == 14

        base = synth_problem(60, 2, spec, r_negative=1)
        factors, trace = run_block_adi(base, ProjectionShiftSource(), tol=1e-10, max_cols=60)
        assert trace.converged
        L, D = compress_ldl(factors.L, factors.D, 6)
        N1 = random_couplings(60, 2, spec.seed + 1, scale=0.5)[0]
        expected = N1 @ L @ D @ L.T @ N1.T

        B1, R1 = problem.B[:, 2:8], problem.R[2:8, 2:8]
        np.testing.assert_allclose(B1 @ R1 @ B1.T, expected, atol=1e-10 * np.abs(expected).max())
        weights = np.diag(R1)
        np.testing.assert_allclose(R1, np.diag(weights))
        np.testing.assert_allclose(np.abs(weights), np.sqrt(np.abs(np.diag(D))))
        np.testing.assert_allclose(problem.R[8:14, 8:14], R1)


class TestMatrixMarket:
    def _write(self, path, data):
        scipy.io.mmwrite(str(path), data)
        return path

    def test_defaults(self, tmp_path):
        a = self._write(tmp_path / "A.mtx", np.diag([-1.0, -2.0]))
        b = self._write(tmp_path / "B.mtx", np.array([[1.0], [1.0]]))
        problem = load_matrix_market({"A": a, "B": b})
        np.testing.assert_array_equal(problem.E.to_dense(), np.eye(2))
        np.testing.assert_array_equal(problem.R, [[1.0]])
        assert problem.name == "A"

    def test_dimension_mismatch_names_file(self, tmp_path):
        a = self._write(tmp_path / "A.mtx", np.diag([-1.0, -2.0]))
        b = self._write(tmp_path / "B.mtx", np.ones((3, 1)))
        with pytest.raises(InputError, match="B file"):
            load_matrix_market({"A": a, "B": b})

    def test_complex_file(self, tmp_path):
        a = self._write(tmp_path / "A.mtx", np.diag([-1.0 + 1j, -2.0]))
        b = self._write(tmp_path / "B.mtx", np.array([[1.0], [1.0]]))
        assert load_matrix_market({"A": a, "B": b}).arithmetic is Arithmetic.COMPLEX

    def test_sparse_file_and_missing_file(self, tmp_path):
        a = self._write(tmp_path / "A.mtx", sp.diags([-1.0, -2.0, -3.0]).tocoo())
        b = self._write(tmp_path / "B.mtx", np.ones((3, 1)))
        problem = load_matrix_market({"A": a, "B": b})
        assert problem.A.is_sparse
        with pytest.raises(InputError, match="not found"):
            load_matrix_market({"A": a, "B": tmp_path / "missing.mtx"})

    def test_observability(self, tmp_path):
        a = self._write(tmp_path / "A.mtx", np.array([[-1.0, 1.0], [0.0, -2.0]]))
        c = self._write(tmp_path / "C.mtx", np.array([[1.0, 2.0]]))
        problem = load_matrix_market({"A": a, "B": c}, observability=True)
        np.testing.assert_array_equal(problem.A.to_dense(), [[-1.0, 0.0], [1.0, -2.0]])
        np.testing.assert_array_equal(problem.B, [[1.0], [2.0]])

    def test_save_then_load(self, tmp_path):
        problem = synth_problem(6, 2, r_negative=1)
        written = save_matrix_market(problem, tmp_path / "gen")
        assert sorted(written) == ["A", "B", "E", "R"]
        loaded = load_matrix_market({key: str(path) for key, path in written.items()})
        np.testing.assert_allclose(loaded.A.to_dense(), problem.A.to_dense(), rtol=1e-15)
        np.testing.assert_allclose(loaded.R, problem.R, rtol=1e-15)


class TestSecondOrder:
    def test_first_order_form(self):
        problem = first_order_from_second_order(np.eye(1), np.eye(1), np.eye(1), np.array([[1.0]]))
        np.testing.assert_array_equal(problem.A.to_dense(), [[0.0, -1.0], [1.0, -1.0]])
        np.testing.assert_array_equal(problem.E.to_dense(), np.eye(2))
        np.testing.assert_array_equal(problem.B, [[1.0], [0.0]])
        assert validate(problem).hurwitz is True

    def test_load_missing_files(self, tmp_path):
        with pytest.raises(InputError, match="missing"):
            load_second_order({"M": tmp_path / "M.mtx"})
