"""Trajectory CSV files and dataset directories.

A trajectory file has a header row ``t,x1,...,xn`` followed by one row per
sample in ascending time. A dataset is a directory of such files plus
``manifest.csv``, whose ``file`` and ``label`` columns list each trajectory and
its class (``normal``, ``faulty`` or ``unknown``). Extra manifest columns are
kept as metadata. Lines starting with ``#`` before the manifest header are
comments (used for the config echo).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from okpca.errors import DatasetError
from okpca.trajectory import Trajectory

MANIFEST = "manifest.csv"
LABELS = ("normal", "faulty", "unknown")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    header = ["t"] + [f"x{i + 1}" for i in range(traj.dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, row in zip(traj.times, traj.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def read_trajectory_csv(path, id: str | None = None) -> Trajectory:
    """Parse one trajectory file; errors name the offending file and line."""
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DatasetError(f"{path}: cannot open trajectory file ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "t" or len(header) < 2:
            raise DatasetError(f"{path}:1: expected header 't,x1,...,xn', got {header!r}")
        width = len(header)
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise DatasetError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
            if len(rows) > 1 and rows[-1][0] <= rows[-2][0]:
                raise DatasetError(f"{path}:{lineno}: time is not strictly increasing")
    if len(rows) < 2:
        raise DatasetError(f"{path}: a trajectory needs at least two samples")
    data = np.array(rows)
    return Trajectory(data[:, 0], data[:, 1:], id=id if id is not None else path.stem)


@dataclass
class Dataset:
    trajectories: list[Trajectory]
    labels: list[str]
    metadata: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.trajectories)

    def with_label(self, label: str) -> list[Trajectory]:
        return [tr for tr, lab in zip(self.trajectories, self.labels) if lab == label]


def write_dataset(
    directory,
    trajectories: Sequence[Trajectory],
    labels: Sequence[str],
    metadata: Sequence[dict] | None = None,
    header_lines: Iterable[str] = (),
) -> Path:
    """Write trajectories and a manifest into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    metadata = list(metadata) if metadata is not None else [{} for _ in trajectories]
    extra = sorted({k for m in metadata for k in m})
    with open(directory / MANIFEST, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.DictWriter(fh, fieldnames=["file", "label", *extra])
        writer.writeheader()
        for tr, label, meta in zip(trajectories, labels, metadata):
            if label not in LABELS:
                raise ValueError(f"unknown label {label!r}")
            name = f"{tr.id}.csv"
            write_trajectory_csv(tr, directory / name)
            writer.writerow({"file": name, "label": label, **meta})
    return directory


def read_dataset(directory) -> Dataset:
    """Load every trajectory listed in ``directory/manifest.csv``."""
    directory = Path(directory)
    manifest = directory / MANIFEST
    if not manifest.is_file():
        raise DatasetError(f"{manifest}: manifest not found")
    with open(manifest, newline="") as fh:
        lines = fh.read().splitlines()
    skip = 0
    while skip < len(lines) and lines[skip].startswith("#"):
        skip += 1
    reader = csv.DictReader(lines[skip:])
    if reader.fieldnames is None or not {"file", "label"} <= set(reader.fieldnames):
        raise DatasetError(f"{manifest}:{skip + 1}: header must contain 'file' and 'label'")
    trajectories, labels, metadata = [], [], []
    for offset, row in enumerate(reader):
        lineno = skip + 2 + offset
        label = (row.get("label") or "").strip()
        if label not in LABELS:
            raise DatasetError(f"{manifest}:{lineno}: label must be one of {LABELS}, got {label!r}")
        name = (row.get("file") or "").strip()
        if not name:
            raise DatasetError(f"{manifest}:{lineno}: empty file name")
        try:
            traj = read_trajectory_csv(directory / name, id=Path(name).stem)
        except ValueError as exc:
            if isinstance(exc, DatasetError):
                raise
            raise DatasetError(f"{directory / name}: {exc}") from exc
        trajectories.append(traj)
        labels.append(label)
        metadata.append({k: v for k, v in row.items() if k not in ("file", "label")})
    if not trajectories:
        raise DatasetError(f"{manifest}: no trajectories listed")
    dims = {tr.dim for tr in trajectories}
    if len(dims) != 1:
        raise DatasetError(f"{manifest}: trajectories have mixed dimensions {sorted(dims)}")
    return Dataset(trajectories, labels, metadata)


def read_comment_header(path) -> list[str]:
    """Leading ``# `` comment lines of a file, with the prefix removed."""
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            out.append(line[2:].rstrip("\n") if line.startswith("# ") else line[1:].rstrip("\n"))
    return out
