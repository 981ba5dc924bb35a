"""Trajectories and occupation-kernel quadrature.

A trajectory is embedded as the occupation kernel ``x -> int k(x, gamma(t)) dt``
and two trajectories are compared through the double time integral of the
kernel along both paths. Both integrals are approximated with one-dimensional
quadrature weights over the recorded sample times; the double integral uses the
tensor product of the two weight vectors, so irregular sampling and differing
durations need no resampling.

Gram assembly is the dominant cost of the whole package. The batched routines
here concatenate every sample of every trajectory into one point cloud, then
walk cache-sized tiles of the pointwise kernel matrix. Each tile is reduced to
trajectory-pair sums with two small matmuls against weighted indicator matrices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from okpca.errors import DimensionError
from okpca.kernel import KernelSpec, kernel_block

# Target points per tile edge; ~1000 keeps a float64 tile near L2 size.
TILE_POINTS = 1024


class QuadratureRule(str, enum.Enum):
    TRAPEZOID = "trapezoid"
    RIEMANN = "riemann"


def quadrature_weights(times: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    """One-dimensional weights ``w`` with ``sum(w * f(t))`` approximating the integral."""
    rule = QuadratureRule(rule)
    dt = np.diff(times)
    w = np.zeros_like(times, dtype=float)
    if rule is QuadratureRule.TRAPEZOID:
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
    else:
        # left-endpoint sum
        w[:-1] = dt
    return w


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Timestamped state samples of one system run.

    Attributes:
        times: Sample times in seconds, strictly increasing, at least two.
        states: Array of shape ``(len(times), n)``.
        id: Opaque label carried into reports.
    """

    times: np.ndarray
    states: np.ndarray
    id: str = ""
    _weights: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float)
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if times.ndim != 1 or times.size < 2:
            raise ValueError("a trajectory needs at least two sample times")
        if states.ndim != 2 or states.shape[0] != times.size or states.shape[1] < 1:
            raise DimensionError(
                f"states shape {states.shape} does not match {times.size} sample times"
            )
        if not np.all(np.diff(times) > 0):
            raise ValueError(f"trajectory {self.id!r}: times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(states))):
            raise ValueError(f"trajectory {self.id!r} contains non-finite values")
        times.flags.writeable = False
        states.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "id", str(self.id))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def num_samples(self) -> int:
        return self.times.size

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def weights(self, rule: QuadratureRule = QuadratureRule.TRAPEZOID) -> np.ndarray:
        """Quadrature weights for this trajectory's sample times (cached)."""
        rule = QuadratureRule(rule)
        w = self._weights.get(rule)
        if w is None:
            w = quadrature_weights(self.times, rule)
            w.flags.writeable = False
            self._weights[rule] = w
        return w

    @classmethod
    def constant(cls, x, duration: float, num_samples: int = 2, id: str = "") -> "Trajectory":
        """A trajectory sitting at ``x`` for ``duration`` seconds."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        times = np.linspace(0.0, duration, num_samples)
        return cls(times, np.tile(x, (num_samples, 1)), id=id)


def _check_dims(trajectories: Sequence[Trajectory]) -> int:
    dims = {tr.dim for tr in trajectories}
    if len(dims) != 1:
        raise DimensionError(f"trajectories have mixed state dimensions {sorted(dims)}")
    return dims.pop()


def occupation_eval(spec: KernelSpec, rule: QuadratureRule, traj: Trajectory, x) -> float:
    """Occupation kernel of ``traj`` evaluated at the point ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (traj.dim,):
        raise DimensionError(f"point of shape {x.shape} vs trajectory dimension {traj.dim}")
    k = kernel_block(spec, traj.states, x[None, :])[:, 0]
    return float(traj.weights(rule) @ k)


def occupation_inner(
    spec: KernelSpec, rule: QuadratureRule, traj_i: Trajectory, traj_j: Trajectory
) -> float:
    """Inner product of two occupation kernels (double time integral of the kernel)."""
    if traj_i.dim != traj_j.dim:
        raise DimensionError(f"state dimensions differ: {traj_i.dim} vs {traj_j.dim}")
    k = kernel_block(spec, traj_i.states, traj_j.states)
    return float(traj_i.weights(rule) @ k @ traj_j.weights(rule))


class _PointCloud:
    """All samples of a trajectory list, with per-tile weighted indicator matrices."""

    def __init__(self, trajectories: Sequence[Trajectory], rule: QuadratureRule):
        self.count = len(trajectories)
        self.points = np.concatenate([tr.states for tr in trajectories], axis=0)
        self.weights = np.concatenate([tr.weights(rule) for tr in trajectories])
        self.sqnorm = np.einsum("ij,ij->i", self.points, self.points)
        sizes = np.array([tr.num_samples for tr in trajectories])
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        # group whole trajectories into tiles of roughly TILE_POINTS samples
        self.groups: list[tuple[int, int]] = []
        start = 0
        while start < self.count:
            stop = start + 1
            while (
                stop < self.count
                and self.offsets[stop + 1] - self.offsets[start] <= TILE_POINTS
            ):
                stop += 1
            self.groups.append((start, stop))
            start = stop

    def tile(self, group: tuple[int, int]):
        t0, t1 = group
        p0, p1 = self.offsets[t0], self.offsets[t1]
        indicator = np.zeros((t1 - t0, p1 - p0))
        for local, t in enumerate(range(t0, t1)):
            a, b = self.offsets[t] - p0, self.offsets[t + 1] - p0
            indicator[local, a:b] = self.weights[p0 + a : p0 + b]
        return slice(p0, p1), slice(t0, t1), indicator


def inner_product_matrix(
    spec: KernelSpec,
    rule: QuadratureRule,
    rows: Sequence[Trajectory],
    cols: Sequence[Trajectory] | None = None,
) -> np.ndarray:
    """Occupation-kernel inner products between two trajectory lists.

    With ``cols`` omitted the result is the symmetric Gram matrix of ``rows``;
    only the upper block triangle is evaluated and then mirrored.
    """
    symmetric = cols is None
    if symmetric:
        cols = rows
    if not rows or not cols:
        raise ValueError("inner_product_matrix needs non-empty trajectory lists")
    _check_dims(list(rows) + list(cols))
    left = _PointCloud(rows, rule)
    right = left if symmetric else _PointCloud(cols, rule)
    right_tiles = [right.tile(g) for g in right.groups]
    out = np.empty((left.count, right.count))
    for gi, group in enumerate(left.groups):
        lp, lt, lind = left.tile(group)
        for gj in range(gi if symmetric else 0, len(right_tiles)):
            rp, rt, rind = right_tiles[gj]
            k = kernel_block(
                spec, left.points[lp], right.points[rp], left.sqnorm[lp], right.sqnorm[rp]
            )
            block = lind @ k @ rind.T
            out[lt, rt] = block
            if symmetric and gj != gi:
                out[rt, lt] = block.T
    if symmetric:
        out = 0.5 * (out + out.T)
    return out


def self_inner_products(
    spec: KernelSpec, rule: QuadratureRule, trajectories: Sequence[Trajectory]
) -> np.ndarray:
    """Diagonal ``<Gamma_g, Gamma_g>`` for each trajectory."""
    return np.array([occupation_inner(spec, rule, tr, tr) for tr in trajectories])
