"""Link and loss families, the fitting residuals, and the descent potential.

Three inverse links are supported: identity, log (inverse link exp), and
inverse-softplus (inverse link log(1 + e^eta)).  Two response families are
supported: Gaussian and Poisson, each with its negative log-likelihood loss
(y-only terms dropped).

Two residual notions drive the optimizers:

* gradient descent uses dloss_deta, the chain-rule factor d loss(y, g^{-1}(eta)) / d eta;
* the variational-inequality updates use the raw residual mu - y, with no
  loss function involved.

For a canonical pair (Gaussian/identity, Poisson/log) the two coincide and
dloss_deta is computed as literally the same expression mu - y, so the two
optimizers produce identical floating-point iterates.

The potential is the scalar function whose per-sample eta-derivative is the
raw residual; it is the quantity the VI iteration descends, and is evaluated
in closed form where available and by adaptive quadrature otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

POISSON_MU_FLOOR = 1e-12

_GAUSS16_NODES, _GAUSS16_WEIGHTS = np.polynomial.legendre.leggauss(16)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class LinkSpec:
    """Inverse link g^{-1} with derivative and optional antiderivative.

    integral, when present, is S(eta) = int_0^eta g^{-1}(s) ds in closed
    form; otherwise the potential falls back to adaptive quadrature.
    canonical_family names the response family for which this link is
    canonical, if any.
    """

    name: str
    inv_link: Callable[[np.ndarray], np.ndarray]
    inv_link_deriv: Callable[[np.ndarray], np.ndarray]
    canonical_family: Optional[str] = None
    integral: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class LossSpec:
    """Response family with pointwise loss values.

    loss(y, mu) returns the per-sample loss; use dloss_deta for the
    eta-gradient factor (it short-circuits to mu - y for canonical pairs).
    """

    family: str
    loss: Callable[[np.ndarray, np.ndarray], np.ndarray]


def softplus(eta: np.ndarray) -> np.ndarray:
    """log(1 + e^eta) without overflow: max(eta, 0) + log1p(e^{-|eta|})."""
    eta = np.asarray(eta, dtype=float)
    return np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))


def sigmoid(eta: np.ndarray) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    pos = eta >= 0
    z = np.exp(np.where(pos, -eta, eta))      # e^{-|eta|}, never overflows
    return np.where(pos, 1.0 / (1.0 + z), z / (1.0 + z))


def identity_link() -> LinkSpec:
    return LinkSpec(
        name="identity",
        inv_link=lambda eta: np.asarray(eta, dtype=float),
        inv_link_deriv=lambda eta: np.ones_like(np.asarray(eta, dtype=float)),
        canonical_family="gaussian",
        integral=lambda eta: 0.5 * np.square(eta),
    )


def log_link() -> LinkSpec:
    return LinkSpec(
        name="log",
        inv_link=np.exp,
        inv_link_deriv=np.exp,
        canonical_family="poisson",
        integral=np.expm1,
    )


def inv_softplus_link() -> LinkSpec:
    """Link g = softplus^{-1}, i.e. inverse link g^{-1}(eta) = log(1 + e^eta).

    Not canonical for any supported family; the potential has no elementary
    closed form and is integrated numerically.
    """
    return LinkSpec(
        name="inverse-softplus",
        inv_link=softplus,
        inv_link_deriv=sigmoid,
        canonical_family=None,
        integral=None,
    )


_LINKS = {
    "identity": identity_link,
    "log": log_link,
    "inverse-softplus": inv_softplus_link,
}


def get_link(name: str) -> LinkSpec:
    try:
        return _LINKS[name]()
    except KeyError:
        raise ValueError(f"unknown link {name!r}; choose from {sorted(_LINKS)}") from None


def _gaussian_loss(y: np.ndarray, mu: np.ndarray) -> np.ndarray:
    return 0.5 * np.square(y - mu)


def _poisson_loss(y: np.ndarray, mu: np.ndarray) -> np.ndarray:
    # mu is floored inside the log only; the linear term keeps the raw mu.
    return mu - y * np.log(np.maximum(mu, POISSON_MU_FLOOR))


_LOSSES = {
    "gaussian": LossSpec(family="gaussian", loss=_gaussian_loss),
    "poisson": LossSpec(family="poisson", loss=_poisson_loss),
}


def get_loss(family: str) -> LossSpec:
    try:
        return _LOSSES[family.lower()]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(_LOSSES)}") from None


def _as_loss(family) -> LossSpec:
    return family if isinstance(family, LossSpec) else get_loss(family)


def dloss_deta(family, link: LinkSpec, y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Chain-rule factor d loss(y, g^{-1}(eta)) / d eta, per sample.

    Canonical pairs use the analytically simplified form mu - y so that
    gradient descent and the VI residual agree bit for bit.
    """
    spec = _as_loss(family)
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if link.canonical_family == spec.family:
        return link.inv_link(eta) - y
    mu = link.inv_link(eta)
    dmu = link.inv_link_deriv(eta)
    if spec.family == "gaussian":
        return (mu - y) * dmu
    if spec.family == "poisson":
        return (1.0 - y / mu) * dmu
    raise ValueError(f"no eta-gradient rule for family {spec.family!r}")


def neg_log_lik(family, link: LinkSpec, y: np.ndarray, eta: np.ndarray) -> float:
    """Mean per-sample loss at mu = g^{-1}(eta) (y-only terms dropped)."""
    spec = _as_loss(family)
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if y.shape != eta.shape:
        raise ValueError(f"y has shape {y.shape} but eta has shape {eta.shape}")
    if spec.family == "poisson":
        if np.any(y < 0) or np.any(y != np.floor(y)):
            raise ValueError("poisson responses must be nonnegative integers")
    return float(np.mean(spec.loss(y, link.inv_link(eta))))


def loss_floor_count(family, link: LinkSpec, eta: np.ndarray) -> int:
    """How many samples hit the Poisson mu-floor inside the loss log."""
    spec = _as_loss(family)
    if spec.family != "poisson":
        return 0
    return int(np.count_nonzero(link.inv_link(eta) < POISSON_MU_FLOOR))


def vi_residual(link: LinkSpec, y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Raw residual mu - y; loss-function agnostic."""
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if y.shape != eta.shape:
        raise ValueError(f"y has shape {y.shape} but eta has shape {eta.shape}")
    return link.inv_link(eta) - y


def _integral_by_quadrature(f: Callable[[np.ndarray], np.ndarray],
                            eta: np.ndarray,
                            tol: float = 1e-10,
                            max_doublings: int = 16) -> np.ndarray:
    """int_0^{eta_i} f(s) ds per sample by composite 16-point Gauss-Legendre.

    The panel count doubles until successive estimates agree within tol
    absolutely for every sample; vectorized across samples.
    """
    eta = np.asarray(eta, dtype=float)
    unit_nodes = 0.5 * (_GAUSS16_NODES + 1.0)
    prev = None
    panels = 1
    for _ in range(max_doublings + 1):
        offsets = (np.arange(panels)[:, None] + unit_nodes[None, :]).ravel() / panels
        weights = np.tile(_GAUSS16_WEIGHTS, panels) / (2.0 * panels)
        t = eta[..., None] * offsets
        estimate = eta * (f(t) @ weights)
        if prev is not None and np.max(np.abs(estimate - prev)) <= tol:
            return estimate
        prev = estimate
        panels *= 2
    raise QuadratureError(
        f"quadrature did not converge to {tol:.1e} within {max_doublings} doublings")


def potential(link: LinkSpec, y: np.ndarray, eta: np.ndarray) -> float:
    """Mean over samples of int_0^{eta_i} (g^{-1}(s) - y_i) ds.

    The eta-gradient of this quantity is vi_residual / n, which makes it the
    objective the VI iteration descends.  Identity and log links use closed
    forms; other links integrate g^{-1} numerically (absolute tol 1e-10).
    """
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if y.shape != eta.shape:
        raise ValueError(f"y has shape {y.shape} but eta has shape {eta.shape}")
    if link.integral is not None:
        s = link.integral(eta)
    else:
        s = _integral_by_quadrature(link.inv_link, eta)
    return float(np.mean(s - y * eta))
