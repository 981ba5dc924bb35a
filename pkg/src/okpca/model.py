"""Occupation kernel PCA: Gram assembly, centering, eigenpairs and projections.

The covariance operator over the embedded trajectories is never formed. Every
quantity is expressed through the occupation-kernel Gram matrix ``K`` of the
training trajectories and its centered version ``(I - J) K (I - J)``, where
``J`` is the constant ``1/M`` matrix.

Component normalisation: each eigenvector ``u_k`` of the centered Gram matrix
with eigenvalue ``lam_k`` is rescaled to ``alpha_k = u_k / sqrt(lam_k)`` so the
corresponding principal function has unit RKHS norm
(``alpha_k^T Kc alpha_k = 1``). Reconstruction errors therefore subtract a sum
of squared coordinates in an orthonormal basis.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from okpca.errors import DimensionError, NumericalError, OkpcaError, RankError
from okpca.kernel import KernelFamily, KernelSpec
from okpca.trajectory import (
    QuadratureRule,
    Trajectory,
    inner_product_matrix,
    self_inner_products,
)

logger = logging.getLogger(__name__)

# Eigenvalues at or below RANK_RTOL * largest eigenvalue count as zero.
RANK_RTOL = 1e-10

MODEL_FORMAT = "okpca-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric matrix of pairwise inner products, flagged if centered."""

    entries: np.ndarray
    centered: bool = False

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"Gram matrix must be square, got shape {entries.shape}")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def gram_matrix(
    spec: KernelSpec, rule: QuadratureRule, trajectories: Sequence[Trajectory]
) -> GramMatrix:
    """Uncentered occupation-kernel Gram matrix of ``trajectories``."""
    if len(trajectories) == 0:
        raise ValueError("gram_matrix needs at least one trajectory")
    return GramMatrix(inner_product_matrix(spec, rule, trajectories), centered=False)


def center_gram(gram: GramMatrix) -> GramMatrix:
    """Center a Gram matrix in feature space: ``(I - J) K (I - J)``.

    Raises:
        ValueError: If ``gram`` is already centered. Centering twice is a no-op
            mathematically, so a second call almost always means the wrong
            matrix was passed.
    """
    if gram.centered:
        raise ValueError("Gram matrix is already centered")
    k = gram.entries
    row_means = k.mean(axis=1)
    col_means = k.mean(axis=0)
    centered = k - row_means[:, None] - col_means[None, :] + k.mean()
    centered = 0.5 * (centered + centered.T)
    return GramMatrix(centered, centered=True)


@dataclass(frozen=True)
class Eigenpairs:
    values: np.ndarray
    alphas: np.ndarray
    rank: int


def leading_eigenpairs(centered: np.ndarray, n_components: int) -> Eigenpairs:
    """Top ``n_components`` eigenpairs of a centered Gram matrix, normalised.

    Only the leading block of the spectrum is computed. That is enough to decide
    whether ``n_components`` eigenvalues clear the rank tolerance, and when they
    do not, every eigenvalue above the tolerance is among those returned, so the
    reported achievable rank is exact.
    """
    if not np.all(np.isfinite(centered)):
        raise NumericalError("Gram matrix contains non-finite entries")
    m = centered.shape[0]
    if n_components < 1:
        raise ValueError(f"n_components must be >= 1, got {n_components}")
    want = min(n_components, m)
    values, vectors = scipy.linalg.eigh(
        centered, subset_by_index=[m - want, m - 1], check_finite=False
    )
    values = values[::-1]
    vectors = vectors[:, ::-1]
    top = values[0] if values.size else 0.0
    if top <= 0:
        rank = 0
    else:
        rank = int(np.count_nonzero(values > RANK_RTOL * top))
    if rank < n_components:
        raise RankError(n_components, rank)
    alphas = vectors / np.sqrt(values)[None, :]
    return Eigenpairs(values=values, alphas=alphas, rank=rank)


@dataclass(frozen=True, eq=False)
class OkpcaModel:
    """A fitted occupation kernel PCA model.

    Attributes:
        spec: Kernel used for every inner product.
        rule: Quadrature rule used for every inner product.
        training: The ``M`` training trajectories.
        gram_raw: Uncentered training Gram matrix.
        gram_centered: Centered training Gram matrix.
        eigenvalues: Retained eigenvalues of ``gram_centered``, descending.
        alphas: Coefficient matrix of shape ``(M, N)``; column ``k`` expresses
            the ``k``-th unit-norm principal function over the training
            occupation kernels.
    """

    spec: KernelSpec
    rule: QuadratureRule
    training: tuple[Trajectory, ...]
    gram_raw: GramMatrix
    gram_centered: GramMatrix
    eigenvalues: np.ndarray
    alphas: np.ndarray

    @property
    def num_components(self) -> int:
        return self.alphas.shape[1]

    @property
    def num_training(self) -> int:
        return len(self.training)

    @property
    def dim(self) -> int:
        return self.training[0].dim

    @property
    def row_means(self) -> np.ndarray:
        return self._stats[0]

    @property
    def grand_mean(self) -> float:
        return self._stats[1]

    @property
    def _stats(self) -> tuple[np.ndarray, float]:
        stats = self.__dict__.get("_cached_stats")
        if stats is None:
            k = self.gram_raw.entries
            stats = (k.mean(axis=1), float(k.mean()))
            self.__dict__["_cached_stats"] = stats
        return stats

    def truncate(self, n_components: int) -> "OkpcaModel":
        """The same model keeping only the leading ``n_components`` components."""
        if not 1 <= n_components <= self.num_components:
            raise ValueError(
                f"n_components must be in [1, {self.num_components}], got {n_components}"
            )
        return replace(
            self,
            eigenvalues=self.eigenvalues[:n_components],
            alphas=self.alphas[:, :n_components],
        )


def fit_gram(
    spec: KernelSpec,
    rule: QuadratureRule,
    trajectories: Sequence[Trajectory],
    gram: GramMatrix,
    n_components: int,
) -> OkpcaModel:
    """Fit from a precomputed uncentered Gram matrix."""
    if len(trajectories) < 2:
        raise ValueError("fitting needs at least two training trajectories")
    if gram.size != len(trajectories):
        raise ValueError(
            f"Gram matrix size {gram.size} does not match {len(trajectories)} trajectories"
        )
    if not np.all(np.isfinite(gram.entries)):
        raise NumericalError("Gram matrix contains non-finite entries")
    centered = center_gram(gram)
    pairs = leading_eigenpairs(centered.entries, n_components)
    values, alphas = pairs.values[:n_components], pairs.alphas[:, :n_components]
    values.flags.writeable = False
    alphas.flags.writeable = False
    logger.debug(
        "fitted OKPCA: M=%d, N=%d, lambda range [%.3g, %.3g]",
        len(trajectories), n_components, values[-1], values[0],
    )
    return OkpcaModel(
        spec=spec,
        rule=QuadratureRule(rule),
        training=tuple(trajectories),
        gram_raw=gram,
        gram_centered=centered,
        eigenvalues=values,
        alphas=alphas,
    )


def fit(
    spec: KernelSpec,
    rule: QuadratureRule,
    trajectories: Sequence[Trajectory],
    n_components: int,
) -> OkpcaModel:
    """Fit an OKPCA model with ``n_components`` principal functions.

    Raises:
        RankError: If the centered Gram matrix has fewer than ``n_components``
            eigenvalues above the rank tolerance.
        NumericalError: If the Gram matrix has non-finite entries.
    """
    if n_components < 1:
        raise ValueError(f"n_components must be >= 1, got {n_components}")
    if len(trajectories) < 2:
        raise ValueError("fitting needs at least two training trajectories")
    return fit_gram(spec, rule, trajectories, gram_matrix(spec, rule, trajectories), n_components)


@dataclass(frozen=True)
class CenteredCross:
    """Feature-space quantities of test trajectories against a fitted model.

    Attributes:
        kernel: ``(T, M)`` centered inner products ``<phi~(g), phi~(g_j)>``.
        sqnorm: ``(T,)`` squared centered norms ``||phi~(g)||^2``.
    """

    kernel: np.ndarray
    sqnorm: np.ndarray


def centered_cross(model: OkpcaModel, trajectories: Sequence[Trajectory]) -> CenteredCross:
    """Centered inner products of ``trajectories`` against the training set."""
    for tr in trajectories:
        if tr.dim != model.dim:
            raise DimensionError(
                f"trajectory {tr.id!r} has dimension {tr.dim}, model expects {model.dim}"
            )
    cross = inner_product_matrix(model.spec, model.rule, trajectories, model.training)
    diag = self_inner_products(model.spec, model.rule, trajectories)
    return centered_from_raw(model, cross, diag)


def centered_from_raw(model: OkpcaModel, cross: np.ndarray, diag: np.ndarray) -> CenteredCross:
    """Apply the centering expansion to raw inner products.

    ``cross`` holds ``<Gamma_g, Gamma_{g_j}>`` against each training trajectory
    and ``diag`` holds ``<Gamma_g, Gamma_g>``.
    """
    cross = np.atleast_2d(cross)
    test_means = cross.mean(axis=1)
    kernel = (
        cross
        - model.row_means[None, :]
        - test_means[:, None]
        + model.grand_mean
    )
    sqnorm = np.asarray(diag, dtype=float) - 2.0 * test_means + model.grand_mean
    return CenteredCross(kernel=kernel, sqnorm=sqnorm)


def project_many(model: OkpcaModel, trajectories: Sequence[Trajectory]) -> np.ndarray:
    """Principal-component coordinates, shape ``(len(trajectories), N)``."""
    return centered_cross(model, trajectories).kernel @ model.alphas


def project(model: OkpcaModel, traj: Trajectory) -> np.ndarray:
    """Coordinates of ``traj`` along the model's ``N`` principal functions."""
    return project_many(model, [traj])[0]


# -- serialization -----------------------------------------------------------


def save_model(model: OkpcaModel, path, config_echo: Sequence[str] = ()) -> Path:
    """Write ``model`` to a single ``.npz`` file.

    All arrays are stored as little-endian float64 so the file reads back
    identically on any platform; the header records format name and version.
    ``config_echo`` lines are kept in the header for provenance and can be
    read back with :func:`read_model_header`.
    """
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kernel": {"family": model.spec.family.value, "mu": model.spec.mu},
        "quadrature": model.rule.value,
        "num_components": model.num_components,
        "normalization": "unit_rkhs_norm",
        "trajectory_ids": [tr.id for tr in model.training],
        "config": list(config_echo),
    }
    le = np.dtype("<f8")
    sizes = np.array([tr.num_samples for tr in model.training], dtype="<i8")
    np.savez(
        path,
        header=np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8),
        sample_counts=sizes,
        times=np.concatenate([tr.times for tr in model.training]).astype(le),
        states=np.concatenate([tr.states for tr in model.training]).astype(le),
        gram_raw=model.gram_raw.entries.astype(le),
        gram_centered=model.gram_centered.entries.astype(le),
        eigenvalues=model.eigenvalues.astype(le),
        alphas=model.alphas.astype(le),
    )
    return path


def _open_model(path):
    try:
        return np.load(path, allow_pickle=False)
    except OSError as exc:
        raise OkpcaError(f"{path}: cannot read model file ({exc})") from exc
    except ValueError as exc:
        raise OkpcaError(f"{path}: not an OKPCA model file") from exc


def _header(path, data) -> dict:
    try:
        header = json.loads(bytes(data["header"]).decode("utf-8"))
    except (KeyError, ValueError) as exc:
        raise OkpcaError(f"{path}: not an OKPCA model file") from exc
    if header.get("format") != MODEL_FORMAT:
        raise OkpcaError(f"{path}: unexpected format {header.get('format')!r}")
    if header.get("version") != MODEL_VERSION:
        raise OkpcaError(f"{path}: unsupported model version {header.get('version')}")
    return header


def read_model_header(path) -> dict:
    """The JSON header of a saved model, including its ``config`` echo."""
    with _open_model(path) as data:
        return _header(path, data)


def load_model(path) -> OkpcaModel:
    """Read a model written by :func:`save_model`."""
    path = Path(path)
    with _open_model(path) as data:
        header = _header(path, data)
        arrays = {k: np.asarray(data[k], dtype=float) for k in
                  ("times", "states", "gram_raw", "gram_centered", "eigenvalues", "alphas")}
        counts = np.asarray(data["sample_counts"], dtype=np.int64)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    training = tuple(
        Trajectory(arrays["times"][a:b], arrays["states"][a:b], id=tid)
        for a, b, tid in zip(bounds[:-1], bounds[1:], header["trajectory_ids"])
    )
    spec = KernelSpec(mu=header["kernel"]["mu"], family=KernelFamily(header["kernel"]["family"]))
    eigenvalues = arrays["eigenvalues"]
    alphas = arrays["alphas"]
    eigenvalues.flags.writeable = False
    alphas.flags.writeable = False
    return OkpcaModel(
        spec=spec,
        rule=QuadratureRule(header["quadrature"]),
        training=training,
        gram_raw=GramMatrix(arrays["gram_raw"]),
        gram_centered=GramMatrix(arrays["gram_centered"], centered=True),
        eigenvalues=eigenvalues,
        alphas=alphas,
    )
