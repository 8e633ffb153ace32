"""Alternating projected first-order estimators for additive index models.

Both estimators share one update skeleton per iteration: a plain gradient
step on the basis coefficients beta, then a gradient step on the projection
indices alpha followed by column-wise projection back onto the unit sphere.
The beta step always uses the current (alpha, beta); the alpha step uses the
freshly updated beta.  They differ only in the per-sample residual factor:

* ``gd`` weights the features by dloss_deta (needs a loss);
* ``vi`` weights them by the raw residual mu - y (loss-free).

For canonical family/link pairs the two factors are the same expression, so
the iterate sequences coincide exactly.

The trace records, per iteration t, the objective and the stationarity
residual evaluated at the iterate *before* the update, together with the
norms of the update just taken.  The stationarity residual is the beta
gradient norm plus the sphere-tangential alpha gradient norms; driving it to
zero is first-order stationarity under the unit-norm constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import links as lk
from . import metrics as mt
from .basis import BasisSet
from .model import ModelParams, DEGENERATE_NORM, scaled_column_norms
from .synth import Dataset, Truth

ALGORITHMS = ("gd", "vi")
OBJECTIVE_KINDS = ("loss", "potential")


class NonFiniteError(RuntimeError):
    """An objective or gradient became non-finite during fitting."""

    def __init__(self, iteration: int, block: str):
        self.iteration = iteration
        self.block = block
        super().__init__(f"non-finite {block} at iteration {iteration}")


@dataclass
class FitConfig:
    algorithm: str
    iterations: int
    step_alpha: float
    step_beta: float
    record_every: int = 1
    objective_kind: Optional[str] = None   # default: "loss" for gd, "potential" for vi
    record_params: bool = False

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.step_alpha <= 0 or self.step_beta <= 0:
            raise ValueError("step sizes must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.objective_kind is not None and self.objective_kind not in OBJECTIVE_KINDS:
            raise ValueError(f"objective_kind must be one of {OBJECTIVE_KINDS}")

    @property
    def resolved_objective(self) -> str:
        if self.objective_kind is not None:
            return self.objective_kind
        return "loss" if self.algorithm == "gd" else "potential"


@dataclass
class FitTrace:
    """Per-recorded-iteration history of a single fit.

    Entry i describes iteration ``iterations[i]``: objective and residual at
    the start of that iteration, and the norms of the step taken from it.
    The final entry describes the returned parameters; its step norms are
    NaN since no step follows.
    """

    iterations: np.ndarray
    objective: np.ndarray
    residual: np.ndarray
    step_beta: np.ndarray
    step_alpha: np.ndarray
    index_error: Optional[np.ndarray] = None
    function_error: Optional[np.ndarray] = None
    loss_floor_events: Optional[np.ndarray] = None
    degenerate_recoveries: int = 0
    params_history: Optional[list[ModelParams]] = None

    def __len__(self) -> int:
        return len(self.iterations)


@dataclass
class _TraceBuilder:
    iterations: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    step_beta: list = field(default_factory=list)
    step_alpha: list = field(default_factory=list)
    index_error: list = field(default_factory=list)
    function_error: list = field(default_factory=list)
    floor_events: list = field(default_factory=list)
    params: list = field(default_factory=list)


def standard_init(d: int, m: int, n_basis: int) -> ModelParams:
    """First m standard basis vectors for alpha, zeros for beta."""
    if m > d:
        raise ValueError(f"need m <= d for standard init, got m={m}, d={d}")
    alpha = np.zeros((d, m))
    alpha[np.arange(m), np.arange(m)] = 1.0
    return ModelParams(alpha, np.zeros((m, n_basis)))


def stationarity_residual(params: ModelParams, g_alpha: np.ndarray,
                          g_beta: np.ndarray) -> float:
    """Frobenius norm of the beta gradient plus per-column tangential alpha norms.

    The tangential part of a column gradient v at alpha_j is v - (alpha_j . v) alpha_j.
    """
    radial = np.einsum("dj,dj->j", params.alpha, g_alpha)
    tangential = g_alpha - params.alpha * radial
    return float(np.linalg.norm(g_beta) + np.linalg.norm(tangential, axis=0).sum())


def _project_with_recovery(raw: np.ndarray, previous: np.ndarray) -> tuple[np.ndarray, int]:
    """Column-normalize raw; degenerate columns fall back to their previous value."""
    scale, scaled_norms = scaled_column_norms(raw)
    degenerate = scale * scaled_norms < DEGENERATE_NORM
    n_degenerate = int(np.count_nonzero(degenerate))
    if n_degenerate:
        raw = np.where(degenerate[None, :], previous, raw)
        scale, scaled_norms = scaled_column_norms(raw)
    return raw / scale / scaled_norms, n_degenerate


def fit(data: Dataset, basis: BasisSet, link: lk.LinkSpec,
        loss: Optional[lk.LossSpec], init: ModelParams, cfg: FitConfig,
        truth: Optional[Truth] = None,
        test_X: Optional[np.ndarray] = None) -> tuple[ModelParams, FitTrace]:
    """Run the configured estimator for cfg.iterations updates.

    ``loss`` is required for gd and ignored for vi.  When ``truth`` is given,
    recorded iterations also carry the index error and (if ``test_X`` is
    given) the function error of the current iterate.
    """
    if cfg.algorithm == "gd" and loss is None:
        raise ValueError("gd requires a loss specification")
    init.check_unit_columns()
    X = np.asarray(data.X, dtype=float)
    y = np.asarray(data.y, dtype=float)
    n = X.shape[0]
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if X.shape[1] != init.dim:
        raise ValueError(f"X has {X.shape[1]} columns but init.alpha has {init.dim} rows")

    alpha = init.alpha.copy()
    beta = init.beta.copy()

    if cfg.algorithm == "gd":
        def residual_factor(eta):
            return lk.dloss_deta(loss, link, y, eta)
    else:
        def residual_factor(eta):
            return lk.vi_residual(link, y, eta)

    objective_kind = cfg.resolved_objective
    if objective_kind == "loss":
        if loss is None:
            raise ValueError("objective_kind 'loss' requires a loss specification")

        def objective(eta):
            return lk.neg_log_lik(loss, link, y, eta)
    else:
        def objective(eta):
            return lk.potential(link, y, eta)

    floor_family = loss if loss is not None else "gaussian"

    tb = _TraceBuilder()
    n_degenerate_total = 0

    def record(t, eta, dphi, r, g_beta, d_beta_norm, d_alpha_norm):
        obj = objective(eta)
        if not math.isfinite(obj):
            raise NonFiniteError(t, "objective")
        slopes = np.einsum("imk,mk->im", dphi, beta)
        g_alpha_here = X.T @ (r[:, None] * slopes) / n
        params_here = ModelParams(alpha, beta)
        tb.iterations.append(t)
        tb.objective.append(obj)
        tb.residual.append(stationarity_residual(params_here, g_alpha_here, g_beta))
        tb.step_beta.append(d_beta_norm)
        tb.step_alpha.append(d_alpha_norm)
        tb.floor_events.append(lk.loss_floor_count(floor_family, link, eta))
        if truth is not None:
            tb.index_error.append(mt.index_error(alpha, truth.alpha)[0])
            if test_X is not None:
                tb.function_error.append(
                    mt.function_error(params_here, basis, truth, test_X))
        if cfg.record_params:
            tb.params.append(params_here.copy())

    for t in range(cfg.iterations):
        t_proj = X @ alpha
        phi = basis.eval_matrix(t_proj)
        dphi = basis.deriv_matrix(t_proj)
        eta = np.einsum("imk,mk->i", phi, beta)

        r0 = residual_factor(eta)
        g_beta = np.einsum("i,imk->mk", r0, phi) / n
        if not np.all(np.isfinite(g_beta)):
            raise NonFiniteError(t, "beta gradient")
        beta_next = beta - cfg.step_beta * g_beta

        eta_mid = np.einsum("imk,mk->i", phi, beta_next)
        r1 = residual_factor(eta_mid)
        slopes = np.einsum("imk,mk->im", dphi, beta_next)
        g_alpha = X.T @ (r1[:, None] * slopes) / n
        if not np.all(np.isfinite(g_alpha)):
            raise NonFiniteError(t, "alpha gradient")
        alpha_next, n_degenerate = _project_with_recovery(
            alpha - cfg.step_alpha * g_alpha, alpha)
        n_degenerate_total += n_degenerate

        if t % cfg.record_every == 0:
            record(t, eta, dphi, r0, g_beta,
                   float(np.linalg.norm(beta_next - beta)),
                   float(np.linalg.norm(alpha_next - alpha)))

        alpha, beta = alpha_next, beta_next

    # Final state: objective/residual of the returned parameters, no step.
    t_proj = X @ alpha
    phi = basis.eval_matrix(t_proj)
    dphi = basis.deriv_matrix(t_proj)
    eta = np.einsum("imk,mk->i", phi, beta)
    r0 = residual_factor(eta)
    g_beta = np.einsum("i,imk->mk", r0, phi) / n
    record(cfg.iterations, eta, dphi, r0, g_beta, math.nan, math.nan)

    trace = FitTrace(
        iterations=np.asarray(tb.iterations, dtype=int),
        objective=np.asarray(tb.objective),
        residual=np.asarray(tb.residual),
        step_beta=np.asarray(tb.step_beta),
        step_alpha=np.asarray(tb.step_alpha),
        index_error=np.asarray(tb.index_error) if tb.index_error else None,
        function_error=np.asarray(tb.function_error) if tb.function_error else None,
        loss_floor_events=np.asarray(tb.floor_events, dtype=int),
        degenerate_recoveries=n_degenerate_total,
        params_history=tb.params if cfg.record_params else None,
    )
    return ModelParams(alpha, beta), trace


@dataclass
class DescentReport:
    n_steps: int
    n_increases: int
    increase_iterations: list[int]
    max_increase: float
    first_half_step_sq_mean: float
    second_half_step_sq_mean: float

    @property
    def summable_looking(self) -> bool:
        return self.second_half_step_sq_mean < self.first_half_step_sq_mean

    @property
    def violation_fraction(self) -> float:
        return self.n_increases / self.n_steps if self.n_steps else 0.0


def descent_check(trace: FitTrace) -> DescentReport:
    """Count objective increases and check the step-norm series looks summable.

    Requires a trace recorded every iteration whose objective is the
    quantity the algorithm actually descends (loss for gd, potential for
    vi).  An increase at iteration t means objective[t+1] > objective[t]
    beyond the floating-point resolution of the objective itself (64 eps
    relative); once the iterate has converged the objective dithers in its
    last bits and those ties are not descent violations.  Anything above
    the noise floor is reported, never suppressed.
    """
    its = trace.iterations
    if len(its) < 2 or np.any(np.diff(its) != 1):
        raise ValueError("descent_check needs a trace recorded every iteration")
    diffs = np.diff(trace.objective)
    noise_floor = 64 * np.finfo(float).eps * np.maximum(1.0, np.abs(trace.objective[:-1]))
    increases = np.flatnonzero(diffs > noise_floor)
    step_sq = trace.step_beta[:-1] ** 2 + trace.step_alpha[:-1] ** 2
    half = len(step_sq) // 2
    return DescentReport(
        n_steps=len(diffs),
        n_increases=int(increases.size),
        increase_iterations=[int(its[i]) for i in increases],
        max_increase=float(diffs[increases].max()) if increases.size else 0.0,
        first_half_step_sq_mean=float(step_sq[:half].mean()) if half else math.nan,
        second_half_step_sq_mean=float(step_sq[half:].mean()) if half else math.nan,
    )


@dataclass
class RateReport:
    horizons: np.ndarray
    best_residuals: np.ndarray
    slope: float


def rate_check(trace: FitTrace, horizons: Optional[list[int]] = None) -> RateReport:
    """Slope of log best-so-far residual against log horizon.

    For each horizon T the best residual is min over the first T recorded
    residuals; the slope is the least-squares fit of log(best) on log(T)
    over a doubling schedule.  A slope at or below -1/2 is consistent with
    the expected first-order convergence rate.
    """
    its = trace.iterations
    if len(its) < 2 or np.any(np.diff(its) != 1):
        raise ValueError("rate_check needs a trace recorded every iteration")
    n = len(trace.residual)
    if horizons is None:
        horizons = []
        t = 2
        while t <= n:
            horizons.append(t)
            t *= 2
    horizons = [t for t in horizons if 2 <= t <= n]
    if len(horizons) < 2:
        raise ValueError("need at least two horizons within the trace length")
    best = np.array([trace.residual[:t].min() for t in horizons])
    if np.any(best <= 0):
        # exact stationarity reached; treat as the steepest possible decay
        return RateReport(np.asarray(horizons), best, -math.inf)
    slope = float(np.polyfit(np.log(np.asarray(horizons, dtype=float)),
                             np.log(best), 1)[0])
    return RateReport(np.asarray(horizons), best, slope)
