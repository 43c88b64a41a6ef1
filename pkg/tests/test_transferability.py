import numpy as np
import pytest

from zgs.errors import DegenerateLabels, NumericalError
from zgs.transferability import log_evidence, logme_score, maximize_evidence


def dense_log_evidence(R, y, alpha, beta):
    """Independent oracle: evaluate the closed form with an explicit inverse."""
    n, d = R.shape
    A = alpha * np.eye(d) + beta * R.T @ R
    m = beta * np.linalg.inv(A) @ R.T @ y
    resid = y - R @ m
    return (
        0.5 * d * np.log(alpha)
        + 0.5 * n * np.log(beta)
        - 0.5 * n * np.log(2 * np.pi)
        - 0.5 * np.log(np.linalg.det(A))
        - 0.5 * beta * resid @ resid
        - 0.5 * alpha * m @ m
    )


def grid_search_max(R, y, points=200):
    """Exhaustive oracle over (alpha, beta) in logspace(1e-4, 1e4)^2.

    Evaluates the closed form on the eigenbasis of R^T R, a different
    path than the SVD fixed point under test.
    """
    n, d = R.shape
    evals, _ = np.linalg.eigh(R.T @ R)
    evals = np.maximum(evals, 0.0)
    Rt_y = R.T @ y
    _, vecs = np.linalg.eigh(R.T @ R)
    proj = vecs.T @ Rt_y
    y_sq = y @ y
    grid = np.logspace(-4, 4, points)
    best = -np.inf
    for alpha in grid:
        denom = alpha + np.outer(grid, evals)  # (points, d) over beta
        m_coef = grid[:, None] * proj / denom
        m_norm_sq = np.sum(m_coef**2, axis=1)
        # ||y - Rm||^2 = y.y - 2 m.R'y + m' R'R m  (in the eigenbasis)
        cross = np.sum(m_coef * proj, axis=1)
        quad = np.sum(evals * m_coef**2, axis=1)
        resid_sq = y_sq - 2 * cross + quad
        value = (
            0.5 * d * np.log(alpha)
            + 0.5 * n * np.log(grid)
            - 0.5 * n * np.log(2 * np.pi)
            - 0.5 * np.sum(np.log(denom), axis=1)
            - 0.5 * grid * resid_sq
            - 0.5 * alpha * m_norm_sq
        )
        best = max(best, float(value.max()))
    return best


class TestLogEvidence:
    def test_identity_hand_case(self):
        """R = I2, y = 0, alpha = beta = 1: A = 2I, det 4, evidence
        -ln 2pi - 0.5 ln 4."""
        value, m = log_evidence(np.eye(2), np.zeros(2), 1.0, 1.0)
        np.testing.assert_allclose(m, [0.0, 0.0])
        assert value == pytest.approx(-np.log(2 * np.pi) - 0.5 * np.log(4.0), abs=1e-12)

    def test_zero_labels_zero_datafit(self):
        rng = np.random.default_rng(0)
        R = rng.standard_normal((6, 3))
        _, m = log_evidence(R, np.zeros(6), 1.0, 1.0)
        np.testing.assert_allclose(R @ m, np.zeros(6), atol=1e-12)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(1)
        R = rng.standard_normal((10, 3))
        y = rng.standard_normal(10)
        for alpha, beta in [(1.0, 1.0), (0.3, 7.0), (50.0, 0.02)]:
            value, _ = log_evidence(R, y, alpha, beta)
            assert value == pytest.approx(dense_log_evidence(R, y, alpha, beta), abs=1e-10)

    def test_nonfinite_input(self):
        with pytest.raises(NumericalError):
            log_evidence(np.array([[np.inf, 0.0]]), np.array([1.0]), 1.0, 1.0)


class TestMaximizeEvidence:
    def test_beats_grid_on_seeded_instances(self):
        """Fixed point lands within 1e-2 nats of a 200x200 grid maximum."""
        rng = np.random.default_rng(42)
        for _ in range(5):
            n = int(rng.integers(6, 20))
            d = int(rng.integers(2, 5))
            R = rng.standard_normal((n, d))
            y = rng.standard_normal(n)
            state = maximize_evidence(R, y)
            assert state.log_evidence >= grid_search_max(R, y) - 1e-2

    def test_permutation_invariance(self):
        rng = np.random.default_rng(13)
        R = rng.standard_normal((12, 4))
        y = rng.standard_normal(12)
        perm = rng.permutation(12)
        a = maximize_evidence(R, y)
        b = maximize_evidence(R[perm], y[perm])
        assert a.score == pytest.approx(b.score, abs=1e-10)

    def test_monotone_ascent(self):
        """Evidence never drops by more than 1e-9 between iterations."""
        rng = np.random.default_rng(21)
        for _ in range(10):
            R = rng.standard_normal((15, 3))
            y = rng.standard_normal(15)
            trace = []
            maximize_evidence(R, y, trace=trace)
            values = [v for _, _, v in trace]
            for prev, cur in zip(values, values[1:]):
                assert cur >= prev - 1e-9

    def test_noiseless_linear_beta_grows(self):
        """With y exactly linear in R, the noise precision climbs as the
        residual vanishes."""
        rng = np.random.default_rng(5)
        R = rng.standard_normal((20, 3))
        w = np.array([1.0, -2.0, 0.5])
        trace = []
        maximize_evidence(R, R @ w, trace=trace)
        betas = [b for _, b, _ in trace]
        assert all(b2 >= b1 for b1, b2 in zip(betas, betas[1:]))
        assert betas[-1] > betas[0]

    def test_positive_hyperparameters(self):
        rng = np.random.default_rng(9)
        state = maximize_evidence(rng.standard_normal((9, 2)), rng.standard_normal(9))
        assert state.alpha > 0
        assert state.beta > 0

    def test_constant_labels(self):
        with pytest.raises(DegenerateLabels):
            maximize_evidence(np.eye(3), np.ones(3))

    def test_too_few_samples(self):
        with pytest.raises(DegenerateLabels):
            maximize_evidence(np.ones((1, 2)), np.array([1.0]))


class TestLogmeScore:
    def test_binary_score_is_mean_of_two_runs(self):
        rng = np.random.default_rng(17)
        R = rng.standard_normal((10, 3))
        labels = np.array([0, 1] * 5)
        n = len(labels)
        expected = np.mean(
            [
                maximize_evidence(R, (labels == c).astype(float)).score
                for c in range(2)
            ]
        )
        record = logme_score(R, labels, 2, model_id="m", dataset_id="d")
        assert record.score == pytest.approx(expected, abs=1e-12)
        assert record.method == "logme"

    def test_separable_beats_shuffled(self):
        """One-hot rows by class score strictly higher than the same rows
        with shuffled labels."""
        rng = np.random.default_rng(42)
        labels = np.repeat(np.arange(3), 8)
        R = np.eye(3)[labels] + 0.05 * rng.standard_normal((24, 3))
        shuffled = labels.copy()
        rng.shuffle(shuffled)
        good = logme_score(R, labels, 3).score
        bad = logme_score(R, shuffled, 3).score
        assert good > bad

    def test_column_permutation_invariance(self):
        rng = np.random.default_rng(23)
        R = rng.standard_normal((14, 5))
        labels = rng.integers(0, 2, size=14)
        labels[:2] = [0, 1]  # both classes present
        base = logme_score(R, labels, 2).score
        permuted = logme_score(R[:, rng.permutation(5)], labels, 2).score
        assert permuted == pytest.approx(base, abs=1e-10)

    def test_class_relabeling_invariance(self):
        rng = np.random.default_rng(29)
        R = rng.standard_normal((12, 3))
        labels = np.array([0, 1, 2] * 4)
        base = logme_score(R, labels, 3).score
        relabeled = logme_score(R, (labels + 1) % 3, 3).score
        assert relabeled == pytest.approx(base, abs=1e-12)

    def test_missing_class_names_it(self):
        R = np.ones((4, 2))
        with pytest.raises(DegenerateLabels, match="2"):
            logme_score(R, np.array([0, 1, 0, 1]), 3)
