"""Detection and estimation metrics: ROC/AUC, off-grid errors, profiles."""

from __future__ import annotations

import numpy as np

from .config import SystemConfig
from .errors import EmptyTruthError, MissingCellError, ShapeError

SPEED_OF_LIGHT = 299792458.0


def reconstruction_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Relative l2 error ||x_hat - x|| / ||x||."""
    denom = np.linalg.norm(truth)
    if denom == 0:
        raise EmptyTruthError("truth vector is zero")
    return float(np.linalg.norm(estimate - truth) / denom)


def roc_curve(scores: np.ndarray, truth_support: np.ndarray):
    """(threshold, P_D, P_FA) triples over the score sweep, plus AUC.

    scores are the detection statistics |x_hat_i| for every grid cell;
    a cell is detected when its score exceeds the threshold.
    """
    scores = np.abs(np.asarray(scores))
    truth_support = np.asarray(truth_support, dtype=int)
    if truth_support.size == 0:
        raise EmptyTruthError("truth support is empty")
    if truth_support.min() < 0 or truth_support.max() >= scores.size:
        raise ShapeError("truth support index out of range")

    is_truth = np.zeros(scores.size, dtype=bool)
    is_truth[truth_support] = True
    n_pos = int(is_truth.sum())
    n_neg = scores.size - n_pos

    thresholds = np.concatenate(([np.inf], np.unique(scores)[::-1], [-1.0]))
    curve = []
    for t in thresholds:
        det = scores > t
        pd = float((det & is_truth).sum() / n_pos)
        pfa = float((det & ~is_truth).sum() / n_neg) if n_neg else 0.0
        curve.append((float(t), pd, pfa))

    pfa_vals = np.array([c[2] for c in curve])
    pd_vals = np.array([c[1] for c in curve])
    order = np.argsort(pfa_vals, kind="stable")
    trapezoid = getattr(np, "trapezoid", np.trapz)
    auc = float(trapezoid(pd_vals[order], pfa_vals[order]))
    return curve, auc


def auc_mann_whitney(scores: np.ndarray, truth_support: np.ndarray) -> float:
    """O(n^2) pairwise AUC oracle: P(truth score > null score) + ties/2."""
    scores = np.abs(np.asarray(scores))
    is_truth = np.zeros(scores.size, dtype=bool)
    is_truth[np.asarray(truth_support, dtype=int)] = True
    pos = scores[is_truth]
    neg = scores[~is_truth]
    if pos.size == 0:
        raise EmptyTruthError("truth support is empty")
    if neg.size == 0:
        return 1.0
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else (0.5 if p == q else 0.0)
    return wins / (pos.size * neg.size)


def offgrid_metrics(estimate, truth, config: SystemConfig):
    """False-detection mass m1, weighted localization error m2, and
    worst per-target amplitude approximation error m3, in range units."""
    if not truth.targets:
        raise EmptyTruthError("continuum truth scene is empty")
    c = SPEED_OF_LIGHT
    radius = 0.2 * c / (2.0 * config.bandwidth_B)
    true_r = np.array([c * d / 2.0 for d, _, _ in truth.targets])
    true_x = np.array([a for _, _, a in truth.targets])

    est_r = np.array([c * d / 2.0 for d, _, _ in estimate.atoms])
    est_x = np.array([a for _, _, a in estimate.atoms])

    m1 = 0.0
    m2 = 0.0
    assigned = np.zeros(est_r.size, dtype=bool)
    for rj in true_r:
        in_nbhd = np.abs(est_r - rj) <= radius
        assigned |= in_nbhd
        for ri, xi in zip(est_r[in_nbhd], est_x[in_nbhd]):
            m2 += abs(xi) * float(np.min((ri - true_r) ** 2))
    m1 = float(np.sum(np.abs(est_x[~assigned])))

    m3 = 0.0
    for rj, xj in zip(true_r, true_x):
        in_nbhd = np.abs(est_r - rj) <= radius
        m3 = max(m3, abs(xj - est_x[in_nbhd].sum()))
    return float(m1), float(m2), float(m3)


def performance_profile(metric_table: np.ndarray, eta_grid: np.ndarray):
    """P_s(eta) = fraction of realizations where system s is within a
    factor eta of the per-realization best metric.

    metric_table has shape (n_realizations, n_systems); returns an array
    of shape (n_systems, len(eta_grid)).
    """
    m = np.asarray(metric_table, dtype=float)
    if m.ndim != 2:
        raise ShapeError("metric table must be 2-D (realizations x systems)")
    if np.isnan(m).any():
        raise MissingCellError("metric table has missing cells")
    if (m < 0).any():
        raise ShapeError("metrics must be nonnegative")
    best = m.min(axis=1, keepdims=True)
    n_p = m.shape[0]
    out = np.empty((m.shape[1], len(eta_grid)))
    for j, eta in enumerate(eta_grid):
        out[:, j] = (m <= eta * best).sum(axis=0) / n_p
    return out
