"""Gaussian RBF kernel evaluation.

This is the only module that interprets the kernel family and width. Everything
downstream asks for kernel values through :func:`eval_kernel` (single pairs) or
:func:`kernel_block` (dense blocks for the quadrature hot path).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from okpca.errors import DimensionError


class KernelFamily(str, enum.Enum):
    GAUSSIAN_RBF = "gaussian_rbf"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and width.

    Attributes:
        mu: Squared length scale, in squared state units. The kernel is
            ``exp(-||x - y||^2 / mu)``.
        family: Kernel family; only the Gaussian RBF exists today.
    """

    mu: float
    family: KernelFamily = KernelFamily.GAUSSIAN_RBF

    def __post_init__(self) -> None:
        if not np.isfinite(self.mu) or self.mu <= 0:
            raise ValueError(f"kernel width mu must be positive, got {self.mu}")
        object.__setattr__(self, "family", KernelFamily(self.family))


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate ``k(x, y)`` for two state vectors."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.ndim != 1 or x.shape != y.shape:
        raise DimensionError(f"state shapes differ: {x.shape} vs {y.shape}")
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / spec.mu))


def kernel_block(
    spec: KernelSpec,
    xs: np.ndarray,
    ys: np.ndarray,
    xs_sqnorm: np.ndarray | None = None,
    ys_sqnorm: np.ndarray | None = None,
) -> np.ndarray:
    """Dense kernel matrix ``K[a, b] = k(xs[a], ys[b])``.

    Squared distances use the ``|x|^2 + |y|^2 - 2 x.y`` expansion so the work
    lands in BLAS; cancellation is clipped at zero. Precomputed squared norms
    may be passed in when the same points appear in many blocks.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 2 or ys.ndim != 2 or xs.shape[1] != ys.shape[1]:
        raise DimensionError(
            f"point sets must be 2-D with equal width, got {xs.shape} and {ys.shape}"
        )
    if xs_sqnorm is None:
        xs_sqnorm = np.einsum("ij,ij->i", xs, xs)
    if ys_sqnorm is None:
        ys_sqnorm = np.einsum("ij,ij->i", ys, ys)
    out = xs @ (-2.0 * ys.T)
    out += xs_sqnorm[:, None]
    out += ys_sqnorm[None, :]
    np.maximum(out, 0.0, out=out)
    out *= -1.0 / spec.mu
    np.exp(out, out=out)
    return out
