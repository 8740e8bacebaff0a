import math

import numpy as np
from django.test import SimpleTestCase

from core.domain import HyperParams, project
from core.exceptions import NonFinite
from core.graph import SimilarityMatrix, laplacian, update_spectral
from core.objective import (
    FD_STEP,
    fd_gradient,
    gradient,
    infonce_loss,
    kernel,
    mi_lower_bound,
    spectral_term,
    total_loss,
    value_and_grad,
)
from core.tests.utils import random_stochastic


def loop_loss(Y, H, S, sigma):
    """Straight transcription of the contrastive sum, one pair at a time."""
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[1]
    total = 0.0
    for i in range(n):
        denominator = sum(kernel(Y[:, i], Y[:, m], sigma) for m in range(n))
        for j in range(n):
            w = H[i, j] * S[i, j]
            if w:
                total -= w * math.log(kernel(Y[:, i], Y[:, j], sigma) / denominator)
    return total


class KernelTests(SimpleTestCase):

    def test_parallel_and_orthogonal(self):
        self.assertAlmostEqual(kernel([1.0, 0.0], [3.0, 0.0], 0.5), math.exp(2.0))
        self.assertAlmostEqual(kernel([1.0, 0.0], [0.0, 2.0], 0.5), 1.0)

    def test_zero_vector_is_guarded(self):
        self.assertEqual(kernel([0.0, 0.0], [1.0, 1.0], 1.0), 1.0)

    def test_symmetric(self):
        rng = np.random.default_rng(8)
        for sigma in (0.01, 1.0, 100.0):
            a, b = rng.standard_normal((2, 4))
            self.assertEqual(kernel(a, b, sigma), kernel(b, a, sigma))


class LossTests(SimpleTestCase):

    def test_matches_pairwise_loop(self):
        rng = np.random.default_rng(0)
        for sigma in (0.5, 1.0, 4.0):
            Y = rng.standard_normal((3, 8))
            H = (rng.random((8, 8)) < 0.8).astype(float)
            H = np.maximum(H, H.T)
            S = random_stochastic(rng, 8)
            self.assertAlmostEqual(infonce_loss(Y, H, S, sigma), loop_loss(Y, H, S, sigma), places=10)

    def test_small_temperature_stays_finite(self):
        rng = np.random.default_rng(1)
        Y = rng.standard_normal((2, 10))
        S = random_stochastic(rng, 10)
        loss = infonce_loss(Y, np.ones((10, 10)), S, 1e-3)
        self.assertTrue(np.isfinite(loss))
        self.assertGreaterEqual(loss, 0.0)

    def test_invariant_to_scaling_the_embedding(self):
        rng = np.random.default_rng(3)
        Y = rng.standard_normal((3, 10))
        H = np.ones((10, 10))
        S = random_stochastic(rng, 10)
        base = infonce_loss(Y, H, S, 0.5)
        for t in (1e-3, 0.5, 7.0, 1e4):
            self.assertAlmostEqual(infonce_loss(t * Y, H, S, 0.5), base, delta=1e-9)

    def test_zero_weights_give_zero_loss(self):
        Y = np.random.default_rng(2).standard_normal((2, 5))
        self.assertEqual(infonce_loss(Y, np.ones((5, 5)), np.zeros((5, 5)), 1.0), 0.0)

    def test_non_finite_embedding(self):
        Y = np.ones((2, 4))
        Y[0, 1] = np.nan
        with self.assertRaises(NonFinite):
            infonce_loss(Y, np.ones((4, 4)), np.full((4, 4), 0.25), 1.0)

    def test_spectral_term_is_twice_the_laplacian_trace(self):
        rng = np.random.default_rng(4)
        S = random_stochastic(rng, 12)
        F = update_spectral(laplacian(S).L, 3)
        L = laplacian(S).L
        F_values = np.asarray(F)
        self.assertAlmostEqual(spectral_term(S, F, 0.7), 2 * 0.7 * np.trace(F_values.T @ L @ F_values), places=10)
        self.assertEqual(spectral_term(S, F, 0.0), 0.0)

    def test_total_loss_breakdown(self):
        rng = np.random.default_rng(5)
        Y = rng.standard_normal((2, 6))
        S = SimilarityMatrix(S=random_stochastic(rng, 6), gamma=0.3)
        F = update_spectral(laplacian(S).L, 2)
        params = HyperParams(sigma=1.0, lambda_=2.0, k=2)
        breakdown = total_loss(Y, np.ones((6, 6)), S, F, params)
        self.assertAlmostEqual(breakdown.frobenius, 0.3 * np.sum(np.asarray(S) ** 2))
        self.assertAlmostEqual(breakdown.total, breakdown.contrastive + breakdown.frobenius + breakdown.spectral)
        self.assertEqual(total_loss(Y, np.ones((6, 6)), S, F, params, gamma=0.0).frobenius, 0.0)


class GradientTests(SimpleTestCase):

    def test_against_central_differences(self):
        rng = np.random.default_rng(2024)
        for instance in range(50):
            sigma = (0.1, 1.0, 10.0)[instance % 3]
            X = rng.standard_normal((10, 20))
            P = rng.standard_normal((10, 3))
            labels = rng.integers(1, 4, size=20)
            H = (labels[:, None] == labels[None, :]).astype(float) if instance % 2 else np.ones((20, 20))
            S = random_stochastic(rng, 20, density=0.3)

            _, grad = value_and_grad(X, P, H, S, sigma)
            fd = fd_gradient(X, P, H, S, sigma, h=FD_STEP)
            with self.subTest(instance=instance, sigma=sigma):
                np.testing.assert_allclose(grad, fd, rtol=1e-4, atol=1e-6)

    def test_flat_along_uniform_rescaling(self):
        # L(tP) is constant in t, so <grad, P> vanishes
        rng = np.random.default_rng(9)
        for sigma in (0.1, 1.0, 10.0):
            X = rng.standard_normal((8, 15))
            P = rng.standard_normal((8, 3))
            S = random_stochastic(rng, 15)
            _, grad = value_and_grad(X, P, np.ones((15, 15)), S, sigma)
            with self.subTest(sigma=sigma):
                self.assertLessEqual(abs(np.sum(grad * P)), 1e-6)

    def test_value_matches_loss(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((6, 9))
        P = rng.standard_normal((6, 2))
        S = random_stochastic(rng, 9)
        loss, _ = value_and_grad(X, P, np.ones((9, 9)), S, 0.5)
        self.assertAlmostEqual(loss, infonce_loss(project(X, P), np.ones((9, 9)), S, 0.5), places=10)

    def test_checked_report(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((4, 6))
        P = rng.standard_normal((4, 2))
        S = random_stochastic(rng, 6)
        report = gradient(X, P, np.ones((6, 6)), S, 1.0, check=True)
        self.assertEqual(report.fd_grad.shape, P.shape)
        self.assertIsNotNone(report.max_rel_err)
        self.assertIsNone(gradient(X, P, np.ones((6, 6)), S, 1.0).fd_grad)

    def test_non_finite_data(self):
        X = np.ones((3, 4))
        X[2, 2] = np.inf
        with self.assertRaises(NonFinite):
            value_and_grad(X, np.ones((3, 2)), np.ones((4, 4)), np.full((4, 4), 0.25), 1.0)


class MutualInfoTests(SimpleTestCase):

    def test_rows_without_positives_are_vacuous(self):
        rng = np.random.default_rng(8)
        Y = rng.standard_normal((2, 5))
        S = random_stochastic(rng, 5)
        S[3] = 0.0
        bound = mi_lower_bound(Y, np.ones((5, 5)), S, 1.0)
        self.assertEqual(bound.vacuous.tolist(), [False, False, False, True, False])
        self.assertEqual(bound.values[3], 0.0)
        self.assertEqual(bound.summary()['vacuous_rows'], 1)
