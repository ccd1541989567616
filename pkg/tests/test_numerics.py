import numpy as np
import pytest

from evolm import numerics
from evolm.errors import DomainError, ShapeError
from evolm.numerics import RngStream


def penrose_deviations(h, hp):
    """Max abs deviation of each of the four defining conditions."""
    return (
        np.max(np.abs(h @ hp @ h - h)),
        np.max(np.abs(hp @ h @ hp - hp)),
        np.max(np.abs((h @ hp).T - h @ hp)),
        np.max(np.abs((hp @ h).T - hp @ h)),
    )


class TestPseudoinverse:
    def test_identity(self):
        eye = np.eye(3)
        assert np.allclose(numerics.pseudoinverse(eye), eye)

    def test_diagonal_with_zero_singular_value(self):
        h = np.diag([2.0, 0.0])
        assert np.allclose(numerics.pseudoinverse(h), np.diag([0.5, 0.0]))

    def test_full_column_rank_left_inverse(self):
        rng = np.random.default_rng(7)
        h = rng.normal(size=(6, 3))
        hp = numerics.pseudoinverse(h)
        assert np.max(np.abs(hp @ h - np.eye(3))) < 1e-10

    def test_penrose_conditions_random_shapes(self):
        rng = np.random.default_rng(42)
        shapes = [(2, 2), (3, 5), (5, 3), (10, 10), (20, 7), (50, 20)]
        for rows, cols in shapes:
            for trial in range(4):
                if trial % 2 == 0:
                    h = rng.normal(size=(rows, cols))
                else:
                    # rank-deficient by construction
                    r = max(1, min(rows, cols) // 2)
                    h = rng.normal(size=(rows, r)) @ rng.normal(size=(r, cols))
                hp = numerics.pseudoinverse(h)
                assert max(penrose_deviations(h, hp)) < 1e-8

    def test_empty_matrix_rejected(self):
        with pytest.raises(ShapeError):
            numerics.pseudoinverse(np.zeros((0, 3)))

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            numerics.pseudoinverse(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestSolveLeastSquares:
    def test_identity_returns_targets(self):
        t = np.arange(12.0).reshape(4, 3)
        q = numerics.solve_least_squares(np.eye(4), t)
        assert np.allclose(q, t)

    def test_zero_targets_give_zero_solution(self):
        rng = np.random.default_rng(3)
        h = rng.normal(size=(8, 5))
        q = numerics.solve_least_squares(h, np.zeros((8, 2)))
        assert np.allclose(q, 0.0)

    def test_invertible_square_residual(self):
        rng = np.random.default_rng(11)
        h = rng.normal(size=(30, 30))
        t = rng.normal(size=(30, 4))
        q = numerics.solve_least_squares(h, t)
        assert np.linalg.norm(h @ q - t) < 1e-6

    def test_row_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            numerics.solve_least_squares(np.ones((3, 2)), np.ones((4, 1)))

    def test_least_squares_optimality_against_perturbations(self):
        rng = np.random.default_rng(19)
        h = rng.normal(size=(12, 5))
        t = rng.normal(size=(12, 2))
        q = numerics.solve_least_squares(h, t)
        base = np.linalg.norm(h @ q - t)
        for _ in range(100):
            eps = rng.normal(scale=1e-3, size=q.shape)
            assert base <= np.linalg.norm(h @ (q + eps) - t) + 1e-12


def test_matmul_matches_naive_triple_loop():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(10, 10))
    b = rng.normal(size=(10, 10))
    naive = np.zeros((10, 10))
    for i in range(10):
        for j in range(10):
            acc = 0.0
            for k in range(10):
                acc += a[i, k] * b[k, j]
            naive[i, j] = acc
    assert np.max(np.abs(a @ b - naive)) < 1e-12


class TestRngStream:
    def test_degenerate_range(self):
        values = numerics.uniform(RngStream(1), 0.5, 0.5, 100)
        assert np.all(values == 0.5)

    def test_same_seed_and_id_reproduces(self):
        a = numerics.uniform(RngStream(123).child("x"), 0.0, 1.0, 50)
        b = numerics.uniform(RngStream(123).child("x"), 0.0, 1.0, 50)
        assert np.array_equal(a, b)

    def test_large_sample_mean(self):
        values = numerics.uniform(RngStream(7), 0.0, 1.0, 10**5)
        assert abs(values.mean() - 0.5) < 0.01
        assert values.min() >= 0.0 and values.max() < 1.0

    def test_reversed_bounds_rejected(self):
        with pytest.raises(DomainError):
            numerics.uniform(RngStream(1), 1.0, 0.0, 10)

    def test_child_streams_differ_and_are_uncorrelated(self):
        root = RngStream(99)
        a = root.child("alpha").uniform(0.0, 1.0, 5000)
        b = root.child("beta").uniform(0.0, 1.0, 5000)
        assert not np.array_equal(a, b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_integer_and_string_labels_are_stable(self):
        r = RngStream(5)
        assert np.array_equal(
            r.child(3).uniform(0, 1, 10), RngStream(5).child(3).uniform(0, 1, 10)
        )
        assert r.child(3).stream_id == 3

    def test_derive_seed_is_stable_and_label_sensitive(self):
        s1 = numerics.derive_seed(42, "sca")
        assert s1 == numerics.derive_seed(42, "sca")
        assert s1 != numerics.derive_seed(42, "cnn-init")
        assert s1 != numerics.derive_seed(43, "sca")
