"""Ambient spaces: Euclidean R^n and round spheres S^n(r) embedded in R^{n+1}.

Both are space forms, so the curvature operator has the closed form
``R(X, Y)Z = c (<Y, Z> X - <X, Z> Y)`` with ``c = 0`` (Euclidean) or
``c = 1 / r^2`` (sphere). Covariant derivatives in the sphere are Euclidean
derivatives of the embedding projected tangent to the sphere.

All operations broadcast over leading node axes; ambient vectors live on a
trailing component axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateFrameError(ValueError):
    """Tangent basis is (numerically) linearly dependent."""


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


@dataclass(frozen=True)
class Ambient:
    kind: str  # "euclidean" | "sphere"
    dim: int
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("euclidean", "sphere"):
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        if self.dim < 3:
            raise ValueError("ambient dimension must be >= 3")
        if self.kind == "sphere":
            if self.radius is None or self.radius <= 0:
                raise ValueError("sphere ambient needs a positive radius")

    @property
    def curvature(self) -> float:
        """Constant sectional curvature c."""
        return 0.0 if self.kind == "euclidean" else 1.0 / self.radius**2

    @property
    def embedding_dim(self) -> int:
        """Number of Cartesian coordinates carried by position vectors."""
        return self.dim if self.kind == "euclidean" else self.dim + 1


def euclidean(dim: int = 3) -> Ambient:
    return Ambient("euclidean", dim)


def sphere(dim: int = 3, radius: float = 1.0) -> Ambient:
    return Ambient("sphere", dim, radius)


def curvature_operator(space: Ambient, X, Y, Z, position=None, tol: float = 1e-8):
    """R(X, Y)Z of the space form.

    For a sphere, ``position`` (points on the sphere) may be supplied to
    check that the inputs are tangent; non-tangent input raises.
    """
    X, Y, Z = (np.asarray(a, dtype=np.float64) for a in (X, Y, Z))
    if space.kind == "sphere" and position is not None:
        position = np.asarray(position, dtype=np.float64)
        scale = space.radius
        for W in (X, Y, Z):
            worst = np.max(np.abs(_dot(W, position))) / (
                scale * (1.0 + np.max(np.linalg.norm(W, axis=-1)))
            )
            if worst > tol:
                raise ValueError(
                    f"input vector not tangent to the sphere (residual {worst:.3e})"
                )
    c = space.curvature
    if c == 0.0:
        return np.zeros(np.broadcast_shapes(X.shape, Y.shape, Z.shape))
    return c * (_dot(Y, Z)[..., None] * X - _dot(X, Z)[..., None] * Y)


def split_tangent_normal(tangent_basis, W, tol: float = 1e-12):
    """Split an ambient vector into tangential and normal parts.

    ``tangent_basis`` has shape ``(..., 2, n)`` (two surface tangent vectors
    per node); ``W`` has shape ``(..., n)``. Returns ``(W_tan, W_nor)`` with
    ``W = W_tan + W_nor`` and ``W_nor`` orthogonal to the span.
    """
    basis = np.asarray(tangent_basis, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    gram = np.einsum("...ak,...bk->...ab", basis, basis)
    det = gram[..., 0, 0] * gram[..., 1, 1] - gram[..., 0, 1] * gram[..., 1, 0]
    scale = gram[..., 0, 0] * gram[..., 1, 1]
    if np.any(det <= tol * np.maximum(scale, 1e-300)):
        raise DegenerateFrameError("tangent basis numerically degenerate")
    rhs = np.einsum("...ak,...k->...a", basis, W)
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    W_tan = np.einsum("...a,...ak->...k", coef, basis)
    return W_tan, W - W_tan
