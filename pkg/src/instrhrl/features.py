"""Fourier cosine basis over states normalized to the unit hypercube."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PreconditionError

# Full enumeration above this many coefficient vectors is refused.
MAX_ENUMERATION = 1 << 22


@dataclass(frozen=True, eq=False)
class FourierBasis:
    order: int
    dim: int
    coefficients: np.ndarray  # (n_features, dim) int64, read-only

    @property
    def n_features(self) -> int:
        return self.coefficients.shape[0]

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return featurize(self, s)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FourierBasis):
            return NotImplemented
        return (
            self.order == other.order
            and self.dim == other.dim
            and np.array_equal(self.coefficients, other.coefficients)
        )


def build_basis(order: int, dim: int, max_features: int | None = None) -> FourierBasis:
    """Enumerate integer coefficient vectors in ``{0..order}^dim``.

    Vectors come in lexicographic order. With ``max_features`` the set is
    truncated to the lowest-frequency vectors: sorted by Euclidean norm,
    ties kept in lexicographic order.
    """
    if order < 0:
        raise ConfigError("fourier_order", f"must be >= 0, got {order}")
    if dim < 1:
        raise ConfigError("dim", f"must be >= 1, got {dim}")
    if max_features is not None and max_features < 1:
        raise ConfigError("max_features", f"must be >= 1, got {max_features}")
    total = (order + 1) ** dim
    if total > MAX_ENUMERATION:
        raise ConfigError(
            "fourier_order",
            f"(order+1)^dim = {total} coefficient vectors is too many to enumerate; "
            "lower the order or set max_features with a smaller order",
        )
    coeffs = np.array(list(itertools.product(range(order + 1), repeat=dim)), dtype=np.int64)
    if max_features is not None and max_features < total:
        sq_norm = (coeffs * coeffs).sum(axis=1)
        # stable sort keeps lexicographic order within equal norms
        keep = np.argsort(sq_norm, kind="stable")[:max_features]
        coeffs = coeffs[keep]
    coeffs.setflags(write=False)
    return FourierBasis(order, dim, coeffs)


def featurize(basis: FourierBasis, s: np.ndarray) -> np.ndarray:
    """``phi_i(s) = cos(pi * c_i . s)``."""
    s = np.asarray(s, dtype=float)
    if s.shape != (basis.dim,):
        raise PreconditionError(f"expected state of length {basis.dim}, got shape {s.shape}")
    if s.min() < 0.0 or s.max() > 1.0:
        raise PreconditionError(f"state components must lie in [0, 1], got {s}")
    return np.cos(np.pi * (basis.coefficients @ s))


def lr_scaling(basis: FourierBasis, alpha: float) -> np.ndarray:
    """Per-feature step sizes ``alpha / max(||c_i||, 1)``."""
    if not alpha > 0:
        raise ConfigError("alpha", f"must be > 0, got {alpha}")
    norms = np.linalg.norm(basis.coefficients.astype(float), axis=1)
    return alpha / np.maximum(norms, 1.0)
