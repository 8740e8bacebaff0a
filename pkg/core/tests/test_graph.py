import io

import numpy as np
from django.test import SimpleTestCase

from core.domain import HyperParams
from core.exceptions import (
    DegenerateRow,
    DimensionMismatch,
    InsufficientNeighbors,
    NonFiniteIntermediate,
)
from core.graph import (
    connected_components,
    dump_coordinates,
    gamma_for_row,
    gamma_global,
    laplacian,
    pairwise_distances,
    update_similarity,
    update_similarity_row,
    update_spectral,
)
from core.supervision import IndicatorMatrix
from core.tests.utils import random_stochastic


def simplex_oracle(v):
    """Bisection on the threshold theta of sum(max(v - theta, 0)) = 1."""
    low, high = v.min() - 1.0, v.max()
    for _ in range(200):
        theta = (low + high) / 2
        if np.maximum(v - theta, 0.0).sum() > 1.0:
            low = theta
        else:
            high = theta
    return np.maximum(v - (low + high) / 2, 0.0)


def two_direction_clusters(rng, per_cluster=6, spread=0.05):
    """Embedding whose two clusters point along different axes."""
    angles = np.concatenate([
        rng.normal(0.0, spread, per_cluster),
        rng.normal(np.pi / 2, spread, per_cluster),
    ])
    return np.vstack([np.cos(angles), np.sin(angles)]) * rng.uniform(1.0, 2.0, 2 * per_cluster)


class SimilarityRowTests(SimpleTestCase):

    def test_matches_simplex_projection(self):
        rng = np.random.default_rng(17)
        for trial in range(1000):
            k = (2, 6, 10)[trial % 3]
            n = int(rng.integers(k + 2, 51))
            d = rng.uniform(0.0, 10.0, n)
            d[int(rng.integers(n))] = np.inf
            gamma = gamma_for_row(np.sort(d), k)

            row = update_similarity_row(d, gamma, k)
            finite = np.isfinite(d)
            expected = np.zeros(n)
            expected[finite] = simplex_oracle(-d[finite] / (2 * gamma))

            self.assertLessEqual(np.max(np.abs(row - expected)), 1e-8)
            self.assertEqual(np.count_nonzero(row), k)
            self.assertAlmostEqual(row.sum(), 1.0, places=12)

    def test_ties_break_by_index(self):
        row = update_similarity_row(np.array([np.inf, 1.0, 1.0, 1.0]), gamma_for_row([1.0, 1.0, 1.0], 2), 2)
        np.testing.assert_allclose(row, [0.0, 0.5, 0.5, 0.0])

    def test_known_values(self):
        # gamma = ((3 - 1) + (3 - 2)) / 2 = 1.5, weights 1/2 -+ 1/6
        d = np.array([np.inf, 1.0, 2.0, 3.0])
        self.assertEqual(gamma_for_row(np.sort(d), 2), 1.5)
        np.testing.assert_allclose(update_similarity_row(d, 1.5, 2), [0.0, 2 / 3, 1 / 3, 0.0])

    def test_small_gamma_falls_back_to_projection(self):
        row = update_similarity_row(np.array([np.inf, 0.0, 1.0, 10.0]), 0.5, 3)
        np.testing.assert_allclose(row, [0.0, 1.0, 0.0, 0.0])

    def test_not_enough_finite_distances(self):
        with self.assertRaises(InsufficientNeighbors):
            gamma_for_row([1.0, 2.0, np.inf], 2)
        with self.assertRaises(DegenerateRow):
            update_similarity_row(np.full(4, np.inf), 1.0, 2)

    def test_gamma_hand_values(self):
        self.assertEqual(gamma_for_row([0.0, 5.0], 1), 2.5)
        self.assertEqual(gamma_global(np.array([[np.inf, 0.0, 3.0], [0.0, np.inf, 5.0]]), 1), 2.0)
        self.assertEqual(gamma_for_row([4.0, 4.0, 4.0, 4.0], 3), 1e-12)

    def test_gamma_global_is_the_row_mean(self):
        rng = np.random.default_rng(21)
        for trial in range(50):
            n = int(rng.integers(5, 20))
            k = int(rng.integers(1, n - 1))
            d = rng.uniform(0.0, 10.0, (n, n))
            np.fill_diagonal(d, np.inf)

            gammas = []
            for row in d:
                ordered = sorted(row)
                gammas.append(max(k / 2 * ordered[k] - sum(ordered[:k]) / 2, 1e-12))
            with self.subTest(trial=trial):
                self.assertAlmostEqual(gamma_global(d, k), sum(gammas) / n, delta=1e-10)

    def test_gamma_global_reports_row(self):
        d = np.array([[np.inf, 1.0, 2.0], [1.0, np.inf, np.inf], [2.0, 1.0, np.inf]])
        with self.assertRaisesRegex(InsufficientNeighbors, r'^row 1'):
            gamma_global(d, 1)


class DistanceTests(SimpleTestCase):

    def test_row_without_constraints_keeps_only_the_spectral_part(self):
        rng = np.random.default_rng(11)
        Y = rng.standard_normal((3, 6))
        F = rng.standard_normal((6, 2))
        H = np.ones((6, 6))
        H[0, :] = H[:, 0] = 0.0
        d = pairwise_distances(Y, F, H, 1.0, 0.7)
        for j in range(1, 6):
            self.assertAlmostEqual(d[0, j], 0.7 * np.sum((F[0] - F[j]) ** 2), places=12)
        self.assertEqual(d[0, 0], np.inf)

    def test_identical_spectral_rows_leave_the_contrastive_part(self):
        rng = np.random.default_rng(12)
        Y = rng.standard_normal((3, 5))
        H = np.ones((5, 5))
        np.testing.assert_array_equal(
            pairwise_distances(Y, np.ones((5, 2)), H, 0.5, 3.0),
            pairwise_distances(Y, None, H, 0.5, 0.0),
        )

    def test_equal_kernels_give_log_three(self):
        Y = np.tile([[2.0], [1.0]], 3)
        H = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
        d = pairwise_distances(Y, None, H, 1.0, 0.0)
        off_diagonal = ~np.eye(3, dtype=bool)
        np.testing.assert_allclose(d[off_diagonal], (H * np.log(3.0))[off_diagonal], rtol=1e-12, atol=1e-15)
        np.testing.assert_array_equal(np.diag(d), np.full(3, np.inf))


class SimilarityUpdateTests(SimpleTestCase):

    def test_rows_are_on_the_simplex_with_k_neighbours(self):
        rng = np.random.default_rng(1)
        Y = rng.standard_normal((3, 15))
        H = IndicatorMatrix(np.ones((15, 15)))
        F = rng.standard_normal((15, 2))
        S = update_similarity(Y, F, H, HyperParams(sigma=1.0, lambda_=0.5, k=4))
        values = np.asarray(S)
        np.testing.assert_allclose(values.sum(axis=1), np.ones(15))
        self.assertTrue(np.all(values >= 0))
        np.testing.assert_array_equal(np.diag(values), np.zeros(15))
        np.testing.assert_array_equal(S.support, np.full(15, 4))
        self.assertAlmostEqual(S.gamma, S.gammas.mean())

    def test_block_separated_embedding_has_no_cross_mass(self):
        rng = np.random.default_rng(2)
        Y = two_direction_clusters(rng)
        S = np.asarray(update_similarity(Y, None, np.ones((12, 12)), HyperParams(sigma=0.1, lambda_=0.0, k=3)))
        np.testing.assert_array_equal(S[:6, 6:], 0.0)
        np.testing.assert_array_equal(S[6:, :6], 0.0)
        self.assertEqual(connected_components(S), 2)

    def test_incompatible_pairs_get_no_mass(self):
        rng = np.random.default_rng(3)
        labels = np.repeat([1, 2, 3], 5)
        H = (labels[:, None] == labels[None, :]).astype(float)
        with self.assertLogs('core.graph', 'WARNING'):
            S = np.asarray(update_similarity(rng.standard_normal((2, 15)), None, H, HyperParams(lambda_=0.0, k=6)))
        self.assertEqual(S[H == 0].sum(), 0.0)
        np.testing.assert_allclose(S.sum(axis=1), np.ones(15))

    def test_equal_distances_give_uniform_rows(self):
        Y = np.ones((2, 4))
        S = np.asarray(update_similarity(Y, None, np.ones((4, 4)), HyperParams(lambda_=0.0, k=3)))
        expected = (np.ones((4, 4)) - np.eye(4)) / 3
        np.testing.assert_allclose(S, expected)

    def test_row_without_candidates_is_named(self):
        H = np.ones((4, 4))
        H[2, [0, 1, 3]] = 0.0
        H[[0, 1, 3], 2] = 0.0
        with self.assertRaisesRegex(DegenerateRow, r'^row 2'):
            update_similarity(np.random.default_rng(4).standard_normal((2, 4)), None, H, HyperParams(lambda_=0.0, k=1))

    def test_non_finite_distances(self):
        Y = np.ones((2, 4))
        Y[1, 1] = np.nan
        with self.assertRaises(NonFiniteIntermediate):
            pairwise_distances(Y, None, np.ones((4, 4)), 1.0, 0.0)


class SpectralTests(SimpleTestCase):

    def _random_graph(self, rng):
        n = int(rng.integers(8, 31))
        S = rng.uniform(0.1, 1.0, (n, n)) * (rng.random((n, n)) < rng.uniform(0.02, 0.3))
        np.fill_diagonal(S, 0.0)
        return S

    def test_random_graphs(self):
        rng = np.random.default_rng(100)
        for _ in range(100):
            S = self._random_graph(rng)
            L = laplacian(S).L
            eigvals = np.linalg.eigvalsh(L)
            c = int(rng.integers(1, min(6, S.shape[0]) + 1))

            F = np.asarray(update_spectral(L, c))
            self.assertLessEqual(np.max(np.abs(F.T @ F - np.eye(c))), 1e-10)
            self.assertAlmostEqual(np.trace(F.T @ L @ F), eigvals[:c].sum(), delta=1e-8)
            self.assertEqual(connected_components(S), int(np.sum(eigvals < 1e-9)))

    def test_no_orthonormal_basis_does_better(self):
        rng = np.random.default_rng(101)
        S = self._random_graph(rng)
        n = S.shape[0]
        L = laplacian(S).L
        F = np.asarray(update_spectral(L, 3))
        best = np.trace(F.T @ L @ F)
        for _ in range(100):
            Q, _ = np.linalg.qr(rng.standard_normal((n, 3)))
            self.assertLessEqual(best, np.trace(Q.T @ L @ Q) + 1e-10)

    def test_laplacian_shape(self):
        S = random_stochastic(np.random.default_rng(5), 7)
        lap = laplacian(S)
        np.testing.assert_allclose(lap.L, lap.L.T)
        np.testing.assert_allclose(lap.L.sum(axis=1), np.zeros(7), atol=1e-12)
        self.assertGreaterEqual(np.linalg.eigvalsh(lap.L).min(), -1e-12)
        with self.assertRaises(DimensionMismatch):
            laplacian(np.ones((2, 3)))

    def test_sign_convention(self):
        S = random_stochastic(np.random.default_rng(6), 9)
        F = np.asarray(update_spectral(laplacian(S).L, 3))
        pivots = np.argmax(np.abs(F), axis=0)
        self.assertTrue(np.all(F[pivots, np.arange(3)] > 0))

    def test_component_count_out_of_range(self):
        L = laplacian(np.ones((3, 3))).L
        with self.assertRaises(DimensionMismatch):
            update_spectral(L, 4)
        with self.assertRaises(DimensionMismatch):
            update_spectral(L, 0)

    def test_disjoint_blocks(self):
        S = np.zeros((5, 5))
        S[0, 1] = S[1, 2] = 0.5
        S[3, 4] = 1.0
        self.assertEqual(connected_components(S), 2)


class DumpTests(SimpleTestCase):

    def test_coordinate_lines(self):
        S = np.array([[0.0, 0.25], [1.0, 0.0]])
        stream = io.StringIO()
        dump_coordinates(S, stream)
        self.assertEqual(stream.getvalue(), "0 1 0.25\n1 0 1.0\n")
