"""Transferability scoring via Bayesian linear-regression evidence.

The score for a (model, dataset) pair is the per-sample log marginal
likelihood of the dataset labels under a Bayesian linear model on the
features the pre-trained model extracts, maximized over the prior
precision ``alpha`` and noise precision ``beta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels, NumericalError

ALPHA_CLAMP = 1e6
EVIDENCE_TOL = 1e-8
MAX_ITERATIONS = 200


@dataclass(frozen=True)
class TransferRecord:
    """One transferability score for a (model, dataset) pair."""

    model_id: str
    dataset_id: str
    method: str  # "logme" or "ingested"
    score: float


@dataclass
class EvidenceState:
    """Converged state of the evidence maximization.

    ``score`` is the per-sample normalized log evidence, the quantity
    used downstream for ranking.
    """

    alpha: float
    beta: float
    m: np.ndarray
    log_evidence: float
    score: float
    iterations: int


def log_evidence(R, y, alpha, beta):
    """Closed-form log marginal likelihood of ``y`` under the linear model.

    log p(y | R, alpha, beta) =
        (d/2) ln alpha + (n/2) ln beta - (n/2) ln 2*pi
        - (1/2) ln det(A) - (beta/2) ||y - R m||^2 - (alpha/2) ||m||^2

    with A = alpha*I + beta*R^T R and posterior mean m = beta * A^-1 R^T y.

    Returns (log_evidence, m).
    """
    R = np.asarray(R, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.isfinite(R).all() and np.isfinite(y).all()):
        raise NumericalError("non-finite entries in R or y")
    if not (np.isfinite(alpha) and np.isfinite(beta) and alpha > 0 and beta > 0):
        raise NumericalError(f"alpha and beta must be positive finite, got {alpha}, {beta}")
    n, d = R.shape
    A = alpha * np.eye(d) + beta * (R.T @ R)
    m = beta * np.linalg.solve(A, R.T @ y)
    sign, logdet = np.linalg.slogdet(A)
    if sign <= 0:
        raise NumericalError("A = alpha*I + beta*R^T R is not positive definite")
    resid = y - R @ m
    value = (
        0.5 * d * np.log(alpha)
        + 0.5 * n * np.log(beta)
        - 0.5 * n * np.log(2.0 * np.pi)
        - 0.5 * logdet
        - 0.5 * beta * float(resid @ resid)
        - 0.5 * alpha * float(m @ m)
    )
    return float(value), m


def _evidence_from_svd(s, u_proj, y_sq, n, d, alpha, beta):
    """Evaluate the evidence in the singular basis of R.

    ``s`` are the singular values, ``u_proj = U^T y``, ``y_sq = ||y||^2``.
    Returns (log_evidence, m_coef, gamma, m_norm_sq, resid_sq) where
    m_coef are the posterior-mean coordinates in the right-singular basis.
    """
    s_sq = s * s
    denom = alpha + beta * s_sq
    gamma = float(np.sum(beta * s_sq / denom))
    m_coef = beta * s * u_proj / denom
    m_norm_sq = float(m_coef @ m_coef)
    u_sq = float(u_proj @ u_proj)
    resid_sq = max(y_sq - u_sq, 0.0) + float(np.sum((alpha * u_proj / denom) ** 2))
    value = (
        0.5 * d * np.log(alpha)
        + 0.5 * n * np.log(beta)
        - 0.5 * n * np.log(2.0 * np.pi)
        - 0.5 * (np.sum(np.log(denom)) + max(d - len(s), 0) * np.log(alpha))
        - 0.5 * beta * resid_sq
        - 0.5 * alpha * m_norm_sq
    )
    return float(value), m_coef, gamma, m_norm_sq, resid_sq


def _maximize_from_svd(s, u_proj, y_sq, n, d, vt, trace=None):
    alpha, beta = 1.0, 1.0
    value, m_coef, gamma, m_norm_sq, resid_sq = _evidence_from_svd(
        s, u_proj, y_sq, n, d, alpha, beta
    )
    if trace is not None:
        trace.append((alpha, beta, value))
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        alpha = gamma / m_norm_sq if m_norm_sq > 0.0 else ALPHA_CLAMP
        beta = (n - gamma) / resid_sq if resid_sq > 0.0 else ALPHA_CLAMP
        alpha = min(max(alpha, 1.0 / ALPHA_CLAMP), ALPHA_CLAMP)
        beta = min(max(beta, 1.0 / ALPHA_CLAMP), ALPHA_CLAMP)
        new_value, m_coef, gamma, m_norm_sq, resid_sq = _evidence_from_svd(
            s, u_proj, y_sq, n, d, alpha, beta
        )
        if trace is not None:
            trace.append((alpha, beta, new_value))
        if abs(new_value - value) < EVIDENCE_TOL:
            value = new_value
            break
        value = new_value
    m = vt.T @ m_coef
    return EvidenceState(
        alpha=float(alpha),
        beta=float(beta),
        m=m,
        log_evidence=value,
        score=value / n,
        iterations=iterations,
    )


def maximize_evidence(R, y, trace=None):
    """Maximize the evidence over (alpha, beta) by fixed-point iteration.

    Each step recomputes the posterior mean and the effective number of
    well-determined directions gamma = sum_i beta*s_i^2 / (alpha + beta*s_i^2),
    then sets alpha <- gamma / ||m||^2 and beta <- (n - gamma) / ||y - Rm||^2.
    Stops when the evidence changes by less than 1e-8 or after 200 rounds.
    A vanishing ||m|| clamps alpha to 1e6 and iteration continues.

    ``trace``, when given a list, collects (alpha, beta, log_evidence)
    per iteration.
    """
    R = np.asarray(R, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.isfinite(R).all() and np.isfinite(y).all()):
        raise NumericalError("non-finite entries in R or y")
    n, d = R.shape
    if n < 2:
        raise DegenerateLabels(f"need at least 2 samples, got {n}")
    if np.ptp(y) == 0.0:
        raise DegenerateLabels("labels are constant")
    u, s, vt = np.linalg.svd(R, full_matrices=False)
    return _maximize_from_svd(s, u.T @ y, float(y @ y), n, d, vt, trace=trace)


def logme_score(R, labels, num_classes, model_id="", dataset_id=""):
    """Mean per-class normalized log evidence over one-vs-rest targets.

    Each class c is binarized as y_c = 1{label == c}; the evidence is
    maximized per class and the normalized scores are averaged. The SVD
    of R is computed once and shared across classes.
    """
    R = np.asarray(R, dtype=float)
    labels = np.asarray(labels)
    if num_classes < 2:
        raise DegenerateLabels(f"need at least 2 classes, got {num_classes}")
    n, d = R.shape
    if not np.isfinite(R).all():
        raise NumericalError("non-finite entries in R")
    u, s, vt = np.linalg.svd(R, full_matrices=False)
    y_sq_cache = u.T
    scores = []
    for c in range(num_classes):
        y = (labels == c).astype(float)
        count = int(y.sum())
        if count == 0:
            raise DegenerateLabels(f"class {c} has no samples")
        if count == n:
            raise DegenerateLabels(f"class {c} covers every sample")
        state = _maximize_from_svd(s, y_sq_cache @ y, float(y @ y), n, d, vt)
        scores.append(state.score)
    return TransferRecord(
        model_id=model_id,
        dataset_id=dataset_id,
        method="logme",
        score=float(np.mean(scores)),
    )
