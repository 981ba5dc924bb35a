"""Reconstruction-error scoring and threshold classification."""

from __future__ import annotations

import csv
import enum
import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from okpca.model import OkpcaModel, centered_cross, centered_from_raw
from okpca.trajectory import Trajectory

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("id", "reconstruction_error", "threshold", "verdict")

# Below this, every training error is numerically zero and the threshold is useless.
DEGENERATE_THRESHOLD = 1e-12


class Verdict(str, enum.Enum):
    NORMAL = "normal"
    FAULTY = "faulty"


@dataclass(frozen=True)
class DetectionReport:
    """Outcome of classifying one trajectory.

    ``reconstruction_error`` is clamped at zero; ``raw_error`` keeps the
    unclamped value, which can dip a few ulps below zero.
    """

    trajectory_id: str
    reconstruction_error: float
    threshold: float
    verdict: Verdict
    num_components_used: int
    raw_error: float

    def as_row(self) -> dict:
        return {
            "id": self.trajectory_id,
            "reconstruction_error": repr(self.reconstruction_error),
            "threshold": repr(self.threshold),
            "verdict": self.verdict.value,
        }


def errors_from_centered(model: OkpcaModel, kernel: np.ndarray, sqnorm: np.ndarray) -> np.ndarray:
    proj = kernel @ model.alphas
    return sqnorm - np.einsum("ij,ij->i", proj, proj)


def reconstruction_errors(model: OkpcaModel, trajectories: Sequence[Trajectory]) -> np.ndarray:
    """Raw (unclamped) reconstruction errors for several trajectories."""
    cc = centered_cross(model, trajectories)
    return errors_from_centered(model, cc.kernel, cc.sqnorm)


def reconstruction_error(model: OkpcaModel, traj: Trajectory) -> float:
    """Squared feature-space distance from ``traj`` to the retained principal subspace.

    This is the squared centered norm of the occupation kernel minus the sum of
    its squared principal coordinates. The value may sit a few ulps below zero.
    """
    return float(reconstruction_errors(model, [traj])[0])


def training_errors(model: OkpcaModel) -> np.ndarray:
    """Reconstruction errors of the training trajectories, computed in-sample.

    The training Gram matrix already holds every inner product needed, so no
    quadrature is repeated.
    """
    k = model.gram_raw.entries
    cc = centered_from_raw(model, k, np.diag(k))
    return errors_from_centered(model, cc.kernel, cc.sqnorm)


def threshold_from_errors(errors: Iterable[float], multiplier: float) -> float:
    if not multiplier > 0:
        raise ValueError(f"threshold multiplier must be positive, got {multiplier}")
    worst = float(np.max(np.asarray(list(errors), dtype=float)))
    if worst < DEGENERATE_THRESHOLD:
        warnings.warn(
            f"largest training reconstruction error is {worst:.3g}; the threshold "
            "is effectively zero (too many components for this training set?)",
            RuntimeWarning,
            stacklevel=3,
        )
    return multiplier * max(worst, 0.0)


def threshold_from_training(model: OkpcaModel, multiplier: float) -> float:
    """``multiplier`` times the largest training reconstruction error."""
    return threshold_from_errors(training_errors(model), multiplier)


def verdict_for(error: float, threshold: float) -> Verdict:
    # strict: an error equal to the threshold is normal
    return Verdict.FAULTY if error > threshold else Verdict.NORMAL


def make_report(traj_id: str, raw_error: float, threshold: float, n_components: int) -> DetectionReport:
    clamped = max(float(raw_error), 0.0)
    return DetectionReport(
        trajectory_id=traj_id,
        reconstruction_error=clamped,
        threshold=float(threshold),
        verdict=verdict_for(clamped, threshold),
        num_components_used=n_components,
        raw_error=float(raw_error),
    )


def classify_many(
    model: OkpcaModel, threshold: float, trajectories: Sequence[Trajectory]
) -> list[DetectionReport]:
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    errors = reconstruction_errors(model, trajectories)
    return [
        make_report(tr.id, e, threshold, model.num_components)
        for tr, e in zip(trajectories, errors)
    ]


def classify(model: OkpcaModel, threshold: float, traj: Trajectory) -> DetectionReport:
    """Classify ``traj`` as faulty iff its reconstruction error exceeds ``threshold``."""
    return classify_many(model, threshold, [traj])[0]


def write_report_csv(reports: Iterable[DetectionReport], path, header_lines: Sequence[str] = ()) -> None:
    """Write reports as ``id,reconstruction_error,threshold,verdict`` rows.

    ``header_lines`` are emitted first, each prefixed with ``# ``.
    """
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for rep in reports:
            writer.writerow(rep.as_row())
