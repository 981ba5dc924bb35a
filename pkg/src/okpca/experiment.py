"""Randomised detection trials and their aggregate false-positive/negative rates.

Every random draw comes from its own stream seeded by ``(seed, trial, role,
index, purpose)``, so results do not depend on thread count or scheduling.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from okpca import detector, kpca_baseline
from okpca.config import ExperimentConfig, SystemKind, header_lines
from okpca.detector import DetectionReport, Verdict
from okpca.kernel import KernelSpec
from okpca.model import fit
from okpca.simulators import (
    OdeSystem,
    academic_system,
    add_noise,
    quadrotor_system,
    sample_initial,
    simulate_many,
)
from okpca.trajectory import Trajectory

logger = logging.getLogger(__name__)

# stream roles
TRAIN, TEST_NORMAL, TEST_FAULTY = 0, 1, 2
# stream purposes
INITIAL, NOISE = 0, 1

OKPCA = "okpca"
KPCA = "kpca"


def stream(seed: int, trial: int, role: int, index: int, purpose: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, trial, role, index, purpose])


def systems(cfg: ExperimentConfig) -> tuple[OdeSystem, OdeSystem]:
    """Nominal and faulty systems for ``cfg``."""
    if cfg.system is SystemKind.ACADEMIC:
        return academic_system(False), academic_system(True)
    nominal = quadrotor_system(cfg.nominal_gains, params=cfg.quadrotor, name="quadrotor")
    faulty = quadrotor_system(cfg.fault_gains, params=cfg.quadrotor, name=cfg.system.value)
    return nominal, faulty


@dataclass
class TrialData:
    trial: int
    train: list[Trajectory]
    test_normal: list[Trajectory]
    test_faulty: list[Trajectory]

    @property
    def test(self) -> list[Trajectory]:
        return self.test_normal + self.test_faulty

    @property
    def test_labels(self) -> list[str]:
        return ["normal"] * len(self.test_normal) + ["faulty"] * len(self.test_faulty)


def generate_group(
    cfg: ExperimentConfig, system: OdeSystem, count: int, trial: int, role: int, prefix: str
) -> list[Trajectory]:
    """Simulate ``count`` trajectories with per-trajectory seeded ICs and noise."""
    if count == 0:
        return []
    ics = np.array(
        [
            sample_initial(
                cfg.initial, stream(cfg.seed, trial, role, i, INITIAL),
                side=cfg.box_side, dim=system.dimension,
            )
            for i in range(count)
        ]
    )
    ids = [f"t{trial:04d}-{prefix}-{i:03d}" for i in range(count)]
    clean = simulate_many(system, ics, cfg.sim, ids=ids)
    if cfg.noise_sigma == 0:
        return clean
    return [
        add_noise(tr, cfg.noise_sigma, stream(cfg.seed, trial, role, i, NOISE))
        for i, tr in enumerate(clean)
    ]


def generate_trial(cfg: ExperimentConfig, trial: int) -> TrialData:
    nominal, faulty = systems(cfg)
    return TrialData(
        trial=trial,
        train=generate_group(cfg, nominal, cfg.M, trial, TRAIN, "train"),
        test_normal=generate_group(cfg, nominal, cfg.num_test_normal, trial, TEST_NORMAL, "normal"),
        test_faulty=generate_group(cfg, faulty, cfg.num_test_faulty, trial, TEST_FAULTY, "faulty"),
    )


@dataclass
class TrialOutcome:
    """Confusion counts of one trial plus the per-trajectory reports."""

    trial: int
    method: str
    threshold: float
    max_training_error: float
    reports: list[DetectionReport]
    labels: list[str]
    false_positives: int = 0
    false_negatives: int = 0
    true_positives: int = 0
    true_negatives: int = 0

    def __post_init__(self) -> None:
        for rep, label in zip(self.reports, self.labels):
            flagged = rep.verdict is Verdict.FAULTY
            if label == "normal":
                self.false_positives += flagged
                self.true_negatives += not flagged
            else:
                self.true_positives += flagged
                self.false_negatives += not flagged

    @property
    def num_normal(self) -> int:
        return self.labels.count("normal")

    @property
    def num_faulty(self) -> int:
        return self.labels.count("faulty")


def score_okpca(cfg: ExperimentConfig, data: TrialData) -> TrialOutcome:
    model = fit(KernelSpec(cfg.mu), cfg.quadrature, data.train, cfg.N)
    train_err = detector.training_errors(model)
    threshold = detector.threshold_from_errors(train_err, cfg.threshold_multiplier)
    errors = detector.reconstruction_errors(model, data.test) if data.test else []
    reports = [
        detector.make_report(tr.id, e, threshold, model.num_components)
        for tr, e in zip(data.test, errors)
    ]
    return TrialOutcome(
        data.trial, OKPCA, threshold, float(train_err.max()), reports, data.test_labels
    )


def score_kpca(cfg: ExperimentConfig, data: TrialData) -> TrialOutcome:
    kc = cfg.kpca
    pool = kpca_baseline.pool_points(data.train, kc.p_max)
    model = kpca_baseline.kpca_fit(KernelSpec(kc.mu), pool, kc.N)
    train_err = kpca_baseline.kpca_trajectory_errors(model, data.train)
    threshold = detector.threshold_from_errors(train_err, kc.threshold_multiplier)
    errors = kpca_baseline.kpca_trajectory_errors(model, data.test)
    reports = [
        detector.make_report(tr.id, e, threshold, model.num_components)
        for tr, e in zip(data.test, errors)
    ]
    return TrialOutcome(
        data.trial, KPCA, threshold, float(train_err.max()), reports, data.test_labels
    )


def run_trial(cfg: ExperimentConfig, trial: int) -> TrialOutcome:
    """Generate one trial's data, fit OKPCA on the training set and classify the tests."""
    return score_okpca(cfg, generate_trial(cfg, trial))


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    method: str
    outcomes: list[TrialOutcome] = field(default_factory=list)

    @property
    def false_positives(self) -> int:
        return sum(o.false_positives for o in self.outcomes)

    @property
    def false_negatives(self) -> int:
        return sum(o.false_negatives for o in self.outcomes)

    @property
    def num_normal(self) -> int:
        return sum(o.num_normal for o in self.outcomes)

    @property
    def num_faulty(self) -> int:
        return sum(o.num_faulty for o in self.outcomes)

    @property
    def fp_rate(self) -> float:
        return self.false_positives / self.num_normal if self.num_normal else 0.0

    @property
    def fn_rate(self) -> float:
        return self.false_negatives / self.num_faulty if self.num_faulty else 0.0

    def row(self) -> dict:
        return {
            "name": self.config.name,
            "method": self.method,
            "M": self.config.M,
            "trials": len(self.outcomes),
            "false_positives": self.false_positives,
            "num_normal": self.num_normal,
            "fp_rate": repr(self.fp_rate),
            "false_negatives": self.false_negatives,
            "num_faulty": self.num_faulty,
            "fn_rate": repr(self.fn_rate),
        }


def _map_trials(fn: Callable[[int], object], trials: int, threads: int) -> list:
    if threads <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def run_experiment(
    cfg: ExperimentConfig, trials: int | None = None, threads: int = 1
) -> ExperimentSummary:
    """Run ``trials`` independent OKPCA trials and pool their confusion counts."""
    trials = cfg.trials if trials is None else trials
    if trials < 1:
        raise ValueError("trials must be >= 1")
    outcomes = _map_trials(lambda t: run_trial(cfg, t), trials, threads)
    summary = ExperimentSummary(cfg, OKPCA, outcomes)
    logger.info(
        "%s: FP %d/%d, FN %d/%d over %d trials",
        cfg.name, summary.false_positives, summary.num_normal,
        summary.false_negatives, summary.num_faulty, trials,
    )
    return summary


def run_sweep(
    cfg: ExperimentConfig, m_values: Sequence[int] | None = None,
    trials: int | None = None, threads: int = 1,
) -> list[ExperimentSummary]:
    """Repeat :func:`run_experiment` for each training-set size."""
    m_values = tuple(m_values or cfg.sweep_M or (cfg.M,))
    out = []
    for m in m_values:
        sub = cfg.with_overrides(M=m, name=f"{cfg.name}-M{m}")
        out.append(run_experiment(sub, trials, threads))
    return out


def run_comparison(
    cfgs: Sequence[ExperimentConfig], trials: int | None = None, threads: int = 1
) -> list[tuple[ExperimentSummary, ExperimentSummary]]:
    """OKPCA and pointwise KPCA on identical trial data, per config.

    Returns one ``(okpca, kpca)`` summary pair per config.
    """
    results = []
    for cfg in cfgs:
        n = cfg.trials if trials is None else trials

        def both(t, cfg=cfg):
            data = generate_trial(cfg, t)
            return score_okpca(cfg, data), score_kpca(cfg, data)

        pairs = _map_trials(both, n, threads)
        results.append(
            (
                ExperimentSummary(cfg, OKPCA, [p[0] for p in pairs]),
                ExperimentSummary(cfg, KPCA, [p[1] for p in pairs]),
            )
        )
    return results


# -- output ------------------------------------------------------------------

TRIAL_COLUMNS = ("trial", "method", "id", "label", "reconstruction_error", "threshold", "verdict")
SUMMARY_COLUMNS = (
    "name", "method", "M", "trials", "false_positives", "num_normal", "fp_rate",
    "false_negatives", "num_faulty", "fn_rate",
)


def write_trials_csv(outcomes: Sequence[TrialOutcome], path, cfg: ExperimentConfig) -> None:
    """Tidy per-trajectory rows for every trial in ``outcomes``."""
    with open(path, "w", newline="") as fh:
        for line in header_lines(cfg):
            fh.write(f"# {line}\n")
        writer = csv.DictWriter(fh, fieldnames=TRIAL_COLUMNS)
        writer.writeheader()
        for o in outcomes:
            for rep, label in zip(o.reports, o.labels):
                writer.writerow(
                    {"trial": o.trial, "method": o.method, "label": label, **rep.as_row()}
                )


def write_summary_csv(summaries: Sequence[ExperimentSummary], path, cfg: ExperimentConfig) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines(cfg):
            fh.write(f"# {line}\n")
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for s in summaries:
            writer.writerow(s.row())


def write_experiment(summary: ExperimentSummary, out_dir) -> list[Path]:
    """Per-trial CSVs plus ``summary.csv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    trial_dir = out_dir / "trials"
    trial_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for o in summary.outcomes:
        p = trial_dir / f"{summary.method}_trial_{o.trial:04d}.csv"
        write_trials_csv([o], p, summary.config)
        paths.append(p)
    p = out_dir / "summary.csv"
    write_summary_csv([summary], p, summary.config)
    paths.append(p)
    return paths
