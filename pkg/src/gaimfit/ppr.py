"""Stage-wise projection pursuit regression baseline (identity link).

Components are fitted sequentially on the running residuals.  Within a
component the algorithm alternates an exact polynomial ridge fit (ordinary
least squares on 1, t, t^2, t^3 with t the current projection) with a single
Gauss-Newton update of the projection index, stopping when the relative
change in the residual sum of squares falls below the tolerance.  After the
forward pass, optional backfitting sweeps refit each component against its
partial residuals.  Per-component constant terms are absorbed into a single
global intercept at the end.

This is deliberately the classical sequential procedure; its scaling with
the number of components is part of what the experiment harness measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .synth import Dataset

_ZERO_STEP_NORM = 1e-14
_DIRECTION_FLOOR = 1e-12


@dataclass
class PprConfig:
    m: int
    max_inner_iters: int = 50
    max_backfit_passes: int = 5
    tol: float = 1e-6
    ridge_degree: int = 3

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.max_inner_iters < 1 or self.max_backfit_passes < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.ridge_degree < 1:
            raise ValueError("ridge_degree must be >= 1")


@dataclass
class PprTrace:
    """One row per ridge fit: rss_before uses the old coefficients on the
    current features, rss_after the freshly solved ones."""

    stage: list[str] = field(default_factory=list)
    sweep: list[int] = field(default_factory=list)
    component: list[int] = field(default_factory=list)
    inner_iter: list[int] = field(default_factory=list)
    rss_before: list[float] = field(default_factory=list)
    rss_after: list[float] = field(default_factory=list)
    n_singular: int = 0
    n_zero_gauss_newton: int = 0

    def __len__(self) -> int:
        return len(self.rss_after)


@dataclass
class PprFit:
    """Estimated indices, pure ridge polynomials, and the global intercept."""

    alpha: np.ndarray          # (d, m), unit columns
    ridge_coeffs: np.ndarray   # (m, degree + 1), constant terms zeroed
    intercept: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        t = X @ self.alpha
        out = np.full(X.shape[0], self.intercept)
        for j in range(self.alpha.shape[1]):
            out += npoly.polyval(t[:, j], self.ridge_coeffs[j])
        return out


def _ridge_features(t: np.ndarray, degree: int) -> np.ndarray:
    return np.vander(t, degree + 1, increasing=True)


def _lstsq(A: np.ndarray, b: np.ndarray, trace: PprTrace) -> np.ndarray:
    solution, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < A.shape[1]:
        trace.n_singular += 1
    return solution


def _initial_direction(X: np.ndarray, r: np.ndarray, j: int,
                       trace: PprTrace) -> np.ndarray:
    """Least-squares linear direction of the residuals; unit basis fallback."""
    direction = _lstsq(X, r, trace)
    norm = np.linalg.norm(direction)
    if norm < _DIRECTION_FLOOR:
        direction = np.zeros(X.shape[1])
        direction[j % X.shape[1]] = 1.0
        return direction
    return direction / norm


def _fit_component(X: np.ndarray, r: np.ndarray, alpha_j: np.ndarray,
                   coeffs_j: np.ndarray, cfg: PprConfig, trace: PprTrace,
                   stage: str, sweep: int, component: int) -> tuple[np.ndarray, np.ndarray]:
    """Alternate ridge and index steps on the residual vector r."""
    prev_rss = None
    for it in range(1, cfg.max_inner_iters + 1):
        t = X @ alpha_j
        A = _ridge_features(t, cfg.ridge_degree)
        rss_before = float(np.sum((r - A @ coeffs_j) ** 2))
        coeffs_j = _lstsq(A, r, trace)
        fitted = A @ coeffs_j
        rss = float(np.sum((r - fitted) ** 2))
        trace.stage.append(stage)
        trace.sweep.append(sweep)
        trace.component.append(component)
        trace.inner_iter.append(it)
        trace.rss_before.append(rss_before)
        trace.rss_after.append(rss)
        if prev_rss is not None and abs(prev_rss - rss) <= cfg.tol * max(prev_rss, 1e-300):
            break
        prev_rss = rss
        if it == cfg.max_inner_iters:
            break
        # one Gauss-Newton step on the index from the local linearization
        slope = npoly.polyval(t, npoly.polyder(coeffs_j))
        delta = _lstsq(slope[:, None] * X, r - fitted, trace)
        candidate = alpha_j + delta
        norm = np.linalg.norm(candidate)
        if norm < _ZERO_STEP_NORM:
            trace.n_zero_gauss_newton += 1
        else:
            alpha_j = candidate / norm
    return alpha_j, coeffs_j


def ppr_fit(data: Dataset, cfg: PprConfig) -> tuple[PprFit, PprTrace]:
    """Forward component fitting followed by backfitting sweeps."""
    link = data.meta.get("link")
    if link is not None and link != "identity":
        raise ValueError(f"stage-wise baseline supports the identity link only, got {link!r}")
    X = np.asarray(data.X, dtype=float)
    y = np.asarray(data.y, dtype=float)
    n, d = X.shape
    if cfg.m > n:
        raise ValueError("more components than samples")

    alpha = np.zeros((d, cfg.m))
    coeffs = np.zeros((cfg.m, cfg.ridge_degree + 1))
    predictions = np.zeros((n, cfg.m))
    trace = PprTrace()

    def refresh_prediction(j: int) -> None:
        predictions[:, j] = npoly.polyval(X @ alpha[:, j], coeffs[j])

    residual = y.copy()
    for j in range(cfg.m):
        alpha[:, j] = _initial_direction(X, residual, j, trace)
        alpha[:, j], coeffs[j] = _fit_component(
            X, residual, alpha[:, j], coeffs[j], cfg, trace, "forward", 0, j)
        refresh_prediction(j)
        residual = residual - predictions[:, j]

    prev_total = float(np.sum((y - predictions.sum(axis=1)) ** 2))
    for sweep in range(1, cfg.max_backfit_passes + 1):
        for j in range(cfg.m):
            partial = y - predictions.sum(axis=1) + predictions[:, j]
            alpha[:, j], coeffs[j] = _fit_component(
                X, partial, alpha[:, j], coeffs[j], cfg, trace, "backfit", sweep, j)
            refresh_prediction(j)
        total = float(np.sum((y - predictions.sum(axis=1)) ** 2))
        if abs(prev_total - total) <= cfg.tol * max(prev_total, 1e-300):
            break
        prev_total = total

    intercept = float(coeffs[:, 0].sum())
    coeffs[:, 0] = 0.0
    return PprFit(alpha=alpha, ridge_coeffs=coeffs, intercept=intercept), trace


def ppr_predict(fit: PprFit, X: np.ndarray) -> np.ndarray:
    return fit.predict(X)
