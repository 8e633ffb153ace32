"""Additive index model on the linear-predictor scale.

eta(x) = sum_j sum_k beta[j, k] * phi_k(alpha[:, j] . x)

alpha is d x m with unit-norm columns (the projection indices), beta is
m x K (basis coefficients of the ridge functions).  Batch evaluation over
all samples is the primitive unit of work: one pass shares the inner
products X @ alpha between the prediction, the beta-gradient features and
the alpha-gradient weights.  All arithmetic is float64 with a fixed
summation order (einsum / BLAS), so repeated runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSet

UNIT_NORM_TOL = 1e-12
DEGENERATE_NORM = 1e-14


class DegenerateColumnError(ValueError):
    """A column to be projected onto the unit sphere has (near-)zero norm."""

    def __init__(self, column: int, norm: float):
        self.column = column
        self.norm = norm
        super().__init__(f"column {column} has norm {norm:.3e} < {DEGENERATE_NORM:.0e}")


@dataclass
class ModelParams:
    """Parameter pair (alpha, beta); alpha columns must stay on the unit sphere."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.alpha.ndim != 2 or self.beta.ndim != 2:
            raise ValueError("alpha and beta must be 2-d arrays")
        if self.alpha.shape[1] != self.beta.shape[0]:
            raise ValueError(
                f"alpha has {self.alpha.shape[1]} columns but beta has "
                f"{self.beta.shape[0]} rows")

    @property
    def dim(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_indices(self) -> int:
        return self.alpha.shape[1]

    @property
    def n_basis(self) -> int:
        return self.beta.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.alpha.copy(), self.beta.copy())

    def check_unit_columns(self, tol: float = UNIT_NORM_TOL) -> None:
        norms = np.linalg.norm(self.alpha, axis=0)
        worst = float(np.max(np.abs(norms - 1.0))) if norms.size else 0.0
        if worst > tol:
            raise ValueError(f"alpha columns deviate from unit norm by {worst:.3e}")


def scaled_column_norms(alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column (scale, norm-of-column/scale); norm = scale * scaled_norm.

    Dividing by the max magnitude first keeps the squared sum from
    overflowing for columns with entries beyond ~1e154.
    """
    scale = np.max(np.abs(alpha), axis=0)
    safe = np.where(scale > 0, scale, 1.0)
    return scale, np.linalg.norm(alpha / safe, axis=0)


def project_to_sphere_columns(alpha: np.ndarray) -> np.ndarray:
    """Normalize each column to unit Euclidean norm.

    Raises DegenerateColumnError on any column with norm below 1e-14; the
    caller decides how to recover (the optimizer retains the previous column).
    """
    alpha = np.asarray(alpha, dtype=float)
    scale, scaled_norms = scaled_column_norms(alpha)
    small = np.flatnonzero(scale * scaled_norms < DEGENERATE_NORM)
    if small.size:
        j = int(small[0])
        raise DegenerateColumnError(j, float(scale[j] * scaled_norms[j]))
    return alpha / scale / scaled_norms


def _check_x(params: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (params.dim,):
        raise ValueError(f"x has shape {x.shape}, expected ({params.dim},)")
    return x


def predict_eta(params: ModelParams, basis: BasisSet, x: np.ndarray) -> float:
    """Linear predictor eta(x) for a single sample."""
    phi = feature_matrix(params, basis, x)
    return float(np.einsum("mk,mk->", phi, params.beta))


def feature_matrix(params: ModelParams, basis: BasisSet, x: np.ndarray) -> np.ndarray:
    """m x K matrix with entry (j, k) = phi_k(alpha_j . x).

    This is also the gradient of eta(x) with respect to beta.
    """
    x = _check_x(params, x)
    t = params.alpha.T @ x
    return basis.eval_matrix(t)


def grad_eta_alpha(params: ModelParams, basis: BasisSet, x: np.ndarray) -> np.ndarray:
    """Gradient of eta(x) with respect to alpha: column j is f_j'(alpha_j . x) * x."""
    x = _check_x(params, x)
    t = params.alpha.T @ x
    slopes = np.einsum("mk,mk->m", basis.deriv_matrix(t), params.beta)
    return np.outer(x, slopes)


def batch_eta(params: ModelParams, basis: BasisSet, X: np.ndarray) -> np.ndarray:
    """Linear predictors for all rows of X; shape (n,)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.dim:
        raise ValueError(f"X has shape {X.shape}, expected (n, {params.dim})")
    phi = basis.eval_matrix(X @ params.alpha)
    return np.einsum("imk,mk->i", phi, params.beta)


def batch_features(params: ModelParams, basis: BasisSet,
                   X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One shared pass over the sample: (eta, phi, dphi).

    eta  -- (n,)      linear predictors
    phi  -- (n, m, K) basis values at the index projections
    dphi -- (n, m, K) basis derivatives at the index projections
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.dim:
        raise ValueError(f"X has shape {X.shape}, expected (n, {params.dim})")
    t = X @ params.alpha
    phi = basis.eval_matrix(t)
    dphi = basis.deriv_matrix(t)
    eta = np.einsum("imk,mk->i", phi, params.beta)
    return eta, phi, dphi
