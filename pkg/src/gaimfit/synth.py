"""Seeded synthetic data generation for the experiment suites.

Covariates are uniform on the d-dimensional unit ball (normalized Gaussian
direction times a U^(1/d) radius).  Responses are Gaussian or Poisson with
mean g^{-1}(eta_star(x)).  Everything is a pure function of its seed:
identical seeds give bit-identical datasets, and independent trials use
disjoint seeds (trial i of a run uses base_seed + i), so trials can be
generated concurrently in any order.

Poisson variates are drawn by CDF inversion rather than a library sampler
so that the draw stream stays portable across library versions; a cap on
the single-draw search catches runaway means.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import BasisSet, make_shifted_legendre
from .links import LinkSpec
from .model import ModelParams, batch_eta

POISSON_DRAW_CAP = 10 ** 6


@dataclass(frozen=True)
class Truth:
    """Generating parameters: unit-column projection indices plus coefficients."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        norms = np.linalg.norm(self.alpha, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("truth alpha columns must have unit norm")

    @property
    def dim(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_indices(self) -> int:
        return self.alpha.shape[1]

    @property
    def n_basis(self) -> int:
        return self.beta.shape[1]

    def params(self) -> ModelParams:
        return ModelParams(self.alpha.copy(), self.beta.copy())

    def eta(self, X: np.ndarray, basis: Optional[BasisSet] = None) -> np.ndarray:
        """True regression function on the linear-predictor scale."""
        if basis is None:
            basis = make_shifted_legendre(self.n_basis)
        return batch_eta(self.params(), basis, X)


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_unit_ball(n: int, d: int, seed) -> np.ndarray:
    """n i.i.d. points uniform on the d-dimensional unit ball."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = _as_rng(seed)
    direction = rng.standard_normal((n, d))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.random(n) ** (1.0 / d)
    return direction / norms * radius[:, None]


def truth_table1() -> Truth:
    """Fixed 4-dimensional, two-index truth used by the table1 suite."""
    s2 = np.sqrt(2.0)
    s3 = np.sqrt(3.0)
    alpha = np.array([
        [0.5, 1.0 / s2],
        [0.5, 1.0 / s2],
        [0.5, 0.0],
        [0.5, 0.0],
    ])
    beta = np.array([
        [1.0 / s3, 1.0 / s3, 1.0 / s3],
        [1.0 / s2, -0.5, 0.5],
    ])
    return Truth(alpha, beta)


def truth_table2(d: int, m: int, n_basis: int = 3) -> Truth:
    """Block-sparse orthonormal indices with a fixed coefficient scheme.

    alpha: column j carries equal weight sqrt(m/d) on its own block of
    d/m consecutive coordinates, so columns are orthonormal with disjoint
    supports.

    beta: rows come in sign-flipped pairs with row-dependent decay.  Row j
    (1-based) takes the geometric magnitude profile (1, 1/2, 1/4, ...),
    cyclically rotated by (j-1)//2 positions so consecutive pairs of rows
    lead with a different basis degree, applies the alternating sign
    pattern (-1)^(j-1+k), and is normalized to unit Euclidean norm.  This
    scheme is frozen: changing it changes the generated experiments.
    """
    if m < 1 or d < 1 or d % m != 0:
        raise ValueError(f"m must divide d, got d={d}, m={m}")
    block = d // m
    alpha = np.zeros((d, m))
    for j in range(m):
        alpha[j * block:(j + 1) * block, j] = 1.0 / np.sqrt(block)
    k = np.arange(n_basis)
    beta = np.empty((m, n_basis))
    for j in range(m):
        magnitudes = np.roll(0.5 ** k, (j // 2) % n_basis)
        row = ((-1.0) ** (j + k)) * magnitudes
        beta[j] = row / np.linalg.norm(row)
    return Truth(alpha, beta)


def _poisson_inversion(rng: np.random.Generator, mu: np.ndarray) -> np.ndarray:
    """Smallest k with U <= CDF(k), computed by the multiplicative recurrence."""
    u = rng.random(mu.shape)
    pmf = np.exp(-mu)
    cdf = pmf.copy()
    counts = np.zeros(mu.shape, dtype=np.int64)
    k = 0
    while True:
        pending = u > cdf
        if not pending.any():
            return counts
        k += 1
        if k > POISSON_DRAW_CAP:
            raise RuntimeError(
                f"poisson inversion exceeded {POISSON_DRAW_CAP} steps "
                f"(max mean {float(np.max(mu)):.3e})")
        pmf = pmf * mu / k
        cdf = cdf + pmf
        counts[pending] += 1


def sample_responses(family: str, link: LinkSpec, truth: Truth, X: np.ndarray,
                     seed, variance: Optional[float] = None,
                     basis: Optional[BasisSet] = None) -> np.ndarray:
    """Responses with mean g^{-1}(eta_star(x)); Gaussian needs a variance."""
    rng = _as_rng(seed)
    mu = link.inv_link(truth.eta(X, basis))
    family = family.lower()
    if family == "gaussian":
        if variance is None:
            raise ValueError("gaussian responses need a variance")
        if variance < 0:
            raise ValueError("variance must be nonnegative")
        return mu + np.sqrt(variance) * rng.standard_normal(mu.shape)
    if family == "poisson":
        if np.any(mu <= 0):
            raise ValueError("poisson means must be positive; use a positive inverse link")
        return _poisson_inversion(rng, mu).astype(float)
    raise ValueError(f"unknown family {family!r}")


def make_dataset(family: str, link: LinkSpec, truth: Truth, n: int, seed: int,
                 variance: Optional[float] = None,
                 basis: Optional[BasisSet] = None) -> Dataset:
    """Covariates and responses from a single seeded stream."""
    rng = np.random.default_rng(seed)
    X = sample_unit_ball(n, truth.dim, rng)
    y = sample_responses(family, link, truth, X, rng, variance=variance, basis=basis)
    meta = {"family": family.lower(), "link": link.name}
    if variance is not None:
        meta["variance"] = variance
    return Dataset(X=X, y=y, seed=int(seed), meta=meta)


def dataset_to_csv(dataset: Dataset, path) -> None:
    """Write one header row x1..xd,y then one row per sample, full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(dataset.dim)] + ["y"])
        for xi, yi in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])


def dataset_from_csv(path, seed: int = -1, meta: Optional[dict] = None) -> Dataset:
    """Read a dataset written by dataset_to_csv (or by another producer)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "y":
            raise ValueError("expected header x1..xd,y")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    return Dataset(X=data[:, :-1], y=data[:, -1], seed=seed, meta=meta or {})
