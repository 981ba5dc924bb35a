"""Pointwise kernel PCA fault detection, used as the comparison method.

Individual state samples are the data points. Training samples are pooled from
all training trajectories, thinned by a common stride so the pool stays below
``p_max`` points, and a classical KPCA model is fitted to them. A trajectory is
scored by the mean of its per-sample reconstruction errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from okpca.errors import DimensionError
from okpca.kernel import KernelSpec, kernel_block
from okpca.model import leading_eigenpairs
from okpca.trajectory import Trajectory

DEFAULT_P_MAX = 2000


@dataclass(frozen=True, eq=False)
class KpcaModel:
    spec: KernelSpec
    training_points: np.ndarray
    gram_centered: np.ndarray
    eigenvalues: np.ndarray
    alphas: np.ndarray
    row_means: np.ndarray
    grand_mean: float

    @property
    def num_components(self) -> int:
        return self.alphas.shape[1]

    @property
    def dim(self) -> int:
        return self.training_points.shape[1]


def pool_points(trajectories: Sequence[Trajectory], p_max: int = DEFAULT_P_MAX) -> np.ndarray:
    """Pool trajectory samples, keeping every ``stride``-th sample of each run.

    The stride is the smallest one whose pooled size fits in ``p_max``.
    """
    if p_max < 2:
        raise ValueError(f"p_max must be >= 2, got {p_max}")
    sizes = [tr.num_samples for tr in trajectories]
    stride = max(1, math.ceil(sum(sizes) / p_max))
    while sum(math.ceil(m / stride) for m in sizes) > p_max:
        stride += 1
    return np.concatenate([tr.states[::stride] for tr in trajectories], axis=0)


def kpca_fit(spec: KernelSpec, points, n_components: int) -> KpcaModel:
    """Fit pointwise KPCA on ``points`` of shape ``(P, n)``."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError(f"need a (P >= 2, n) point array, got shape {points.shape}")
    k = kernel_block(spec, points, points)
    k = 0.5 * (k + k.T)
    row_means = k.mean(axis=1)
    grand = float(k.mean())
    centered = k - row_means[:, None] - row_means[None, :] + grand
    pairs = leading_eigenpairs(centered, n_components)
    return KpcaModel(
        spec=spec,
        training_points=points,
        gram_centered=centered,
        eigenvalues=pairs.values[:n_components],
        alphas=pairs.alphas[:, :n_components],
        row_means=row_means,
        grand_mean=grand,
    )


def kpca_point_errors(model: KpcaModel, xs) -> np.ndarray:
    """Reconstruction errors of many points, shape ``(Q,)``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != model.dim:
        raise DimensionError(f"points have dimension {xs.shape[1]}, model expects {model.dim}")
    cross = kernel_block(model.spec, xs, model.training_points)
    cross_means = cross.mean(axis=1)
    centered = cross - model.row_means[None, :] - cross_means[:, None] + model.grand_mean
    # k(x, x) = 1 for the Gaussian kernel
    sqnorm = 1.0 - 2.0 * cross_means + model.grand_mean
    proj = centered @ model.alphas
    return sqnorm - np.einsum("ij,ij->i", proj, proj)


def kpca_point_error(model: KpcaModel, x) -> float:
    """Pointwise reconstruction error of the state ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DimensionError(f"expected a state vector, got shape {x.shape}")
    return float(kpca_point_errors(model, x[None, :])[0])


def kpca_trajectory_error(model: KpcaModel, traj: Trajectory) -> float:
    """Mean pointwise reconstruction error over the samples of ``traj``."""
    return float(kpca_point_errors(model, traj.states).mean())


def kpca_trajectory_errors(model: KpcaModel, trajectories: Sequence[Trajectory]) -> np.ndarray:
    if not trajectories:
        return np.empty(0)
    pts = np.concatenate([tr.states for tr in trajectories], axis=0)
    errs = kpca_point_errors(model, pts)
    bounds = np.cumsum([0] + [tr.num_samples for tr in trajectories])
    return np.add.reduceat(errs, bounds[:-1]) / np.diff(bounds)
