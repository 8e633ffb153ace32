"""Evaluation metrics for estimated index models.

Index estimates are identified only up to a permutation of the components
and a sign flip of each index column (with the matching transformation of
the coefficients), so the index error minimizes over that symmetry group.
Because the best sign decouples per matched pair, the minimization is an
exact linear assignment problem on pairwise sign-minimized squared
distances; no exhaustive enumeration of the m! * 2^m alignments is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .basis import BasisSet
from .model import ModelParams, batch_eta

_UNIT_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class Alignment:
    """Column relabeling: aligned column l is signs[l] * alpha_hat[:, permutation[l]]."""

    permutation: tuple[int, ...]
    signs: tuple[int, ...]


def apply_alignment(alpha_hat: np.ndarray, alignment: Alignment) -> np.ndarray:
    aligned = alpha_hat[:, list(alignment.permutation)].copy()
    aligned *= np.asarray(alignment.signs, dtype=float)[None, :]
    return aligned


def _check_unit_columns(a: np.ndarray, label: str) -> None:
    norms = np.linalg.norm(a, axis=0)
    if np.any(np.abs(norms - 1.0) > _UNIT_CHECK_TOL):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"{label} columns deviate from unit norm by {worst:.3e}")


def index_error(alpha_hat: np.ndarray, alpha_star: np.ndarray) -> tuple[float, Alignment]:
    """Alignment-minimized squared index distance, normalized by m.

    Returns min over permutations and sign flips of
    ||aligned(alpha_hat) - alpha_star||_F^2 / m together with the minimizer.
    """
    alpha_hat = np.asarray(alpha_hat, dtype=float)
    alpha_star = np.asarray(alpha_star, dtype=float)
    if alpha_hat.shape != alpha_star.shape:
        raise ValueError(
            f"shape mismatch: estimate {alpha_hat.shape} vs truth {alpha_star.shape}")
    _check_unit_columns(alpha_hat, "estimate")
    _check_unit_columns(alpha_star, "truth")
    m = alpha_hat.shape[1]

    minus = np.zeros((m, m))
    plus = np.zeros((m, m))
    for j in range(m):
        for l in range(m):
            minus[j, l] = float(np.sum((alpha_hat[:, j] - alpha_star[:, l]) ** 2))
            plus[j, l] = float(np.sum((alpha_hat[:, j] + alpha_star[:, l]) ** 2))
    cost = np.minimum(minus, plus)

    row_ind, col_ind = linear_sum_assignment(cost)
    permutation = [0] * m
    signs = [1] * m
    for j, l in zip(row_ind, col_ind):
        permutation[l] = int(j)
        signs[l] = 1 if minus[j, l] <= plus[j, l] else -1
    total = sum(cost[permutation[l], l] for l in range(m))
    return total / m, Alignment(tuple(permutation), tuple(signs))


def function_error(params_hat: ModelParams, basis: BasisSet, truth,
                   test_X: np.ndarray) -> float:
    """Monte-Carlo mean of (eta_hat(x) - eta_star(x))^2 over the test rows.

    Both functions are compared on the linear-predictor scale; the metric
    never consults any alignment since the prediction is invariant to it.
    """
    eta_hat = batch_eta(params_hat, basis, test_X)
    eta_star = batch_eta(ModelParams(truth.alpha, truth.beta), basis, test_X)
    return mean_squared_gap(eta_hat, eta_star)


def mean_squared_gap(values_hat: np.ndarray, values_star: np.ndarray) -> float:
    """Mean of the squared pointwise gap between two prediction vectors."""
    values_hat = np.asarray(values_hat, dtype=float)
    values_star = np.asarray(values_star, dtype=float)
    if values_hat.shape != values_star.shape:
        raise ValueError(
            f"shape mismatch: {values_hat.shape} vs {values_star.shape}")
    return float(np.mean((values_hat - values_star) ** 2))
