"""Shifted Legendre polynomial basis.

The ridge functions of an additive index model are expanded in a fixed set
of univariate basis functions.  Here the basis is ``phi_k(t) = P_k(t) - P_k(0)``
for ``k = 1..K``, where ``P_k`` is the degree-k Legendre polynomial on [-1, 1]
with the standard normalization ``P_k(1) = 1``.  Subtracting the value at zero
makes every basis function vanish at the origin, which removes the free
intercept and keeps the model identifiable.

Polynomial coefficients (and those of the exact derivatives) are precomputed
once at construction; evaluation is a Horner pass per degree, vectorized over
arbitrary argument arrays.  Arguments are not clamped to [-1, 1]: intermediate
fits may legitimately evaluate outside that interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly


def _legendre_coefficients(max_degree: int) -> list[np.ndarray]:
    """Coefficients (ascending) of P_0..P_max_degree via the Bonnet recurrence."""
    polys = [np.array([1.0]), np.array([0.0, 1.0])]
    for k in range(2, max_degree + 1):
        lifted = np.concatenate(([0.0], polys[k - 1]))          # t * P_{k-1}
        padded = np.concatenate((polys[k - 2], [0.0, 0.0]))
        polys.append(((2 * k - 1) * lifted - (k - 1) * padded) / k)
    return polys[: max_degree + 1]


@dataclass(frozen=True)
class BasisSet:
    """K univariate basis functions with phi_k(0) = 0 and exact derivatives.

    Immutable after construction; safe to share across threads.  Basis
    indices ``k`` are 1-based and coincide with the polynomial degree.
    """

    size: int
    coeffs: tuple[np.ndarray, ...]
    deriv_coeffs: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        for c in self.coeffs + self.deriv_coeffs:
            c.flags.writeable = False

    def eval(self, k: int, t):
        """Value of phi_k at t (t may be a scalar or an array)."""
        self._check_index(k)
        return npoly.polyval(t, self.coeffs[k - 1])

    def deriv(self, k: int, t):
        """Value of phi_k' at t."""
        self._check_index(k)
        return npoly.polyval(t, self.deriv_coeffs[k - 1])

    def eval_matrix(self, t: np.ndarray) -> np.ndarray:
        """All K basis values; output shape is t.shape + (K,)."""
        t = np.asarray(t, dtype=float)
        return np.stack([npoly.polyval(t, c) for c in self.coeffs], axis=-1)

    def deriv_matrix(self, t: np.ndarray) -> np.ndarray:
        """All K basis derivatives; output shape is t.shape + (K,)."""
        t = np.asarray(t, dtype=float)
        return np.stack([npoly.polyval(t, c) for c in self.deriv_coeffs], axis=-1)

    def _check_index(self, k: int) -> None:
        if not 1 <= k <= self.size:
            raise IndexError(f"basis index {k} outside 1..{self.size}")


def make_shifted_legendre(max_degree: int = 3) -> BasisSet:
    """Build the basis phi_k(t) = P_k(t) - P_k(0) for k = 1..max_degree.

    Subtracting P_k(0) only changes the constant coefficient, so the
    derivative coefficients are those of P_k' unchanged.
    """
    if max_degree < 1:
        raise ValueError(f"max_degree must be >= 1, got {max_degree}")
    legendre = _legendre_coefficients(max_degree)
    coeffs = []
    deriv_coeffs = []
    for k in range(1, max_degree + 1):
        c = legendre[k].copy()
        c[0] = 0.0                                # subtract P_k(0)
        coeffs.append(c)
        deriv_coeffs.append(npoly.polyder(c))
    return BasisSet(size=max_degree, coeffs=tuple(coeffs),
                    deriv_coeffs=tuple(deriv_coeffs))


def eval_row(basis: BasisSet, t: float) -> np.ndarray:
    """Vector (phi_1(t), ..., phi_K(t)) for a scalar argument."""
    return basis.eval_matrix(np.asarray(t, dtype=float))
