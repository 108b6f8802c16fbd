"""File I/O: dataset manifests, landmark CSVs, and grayscale frames.

All CSV files use '.' decimal separators and '\\n' line endings; writers emit
9 significant digits so that load -> save round-trips are byte-identical for
canonically written files. Relative paths inside a manifest are resolved
against the manifest's own directory.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .types import (
    LABELS,
    N_POINTS,
    LandmarkError,
    LandmarkFrame,
    ManifestError,
    VideoRecord,
)

MANIFEST_HEADER = ["video_id", "frames_dir", "landmarks_path", "label", "fps"]
_FRAME_RE = re.compile(r"^frame_(\d{6})\.(png|pgm)$")


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def load_manifest(path: str | Path) -> list[VideoRecord]:
    """Parse a dataset manifest CSV into VideoRecords.

    Unknown labels and duplicate video ids are rejected with the offending
    row number. An empty label field yields ``label=None`` (prediction-only
    record).
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    base = path.parent
    records: list[VideoRecord] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ManifestError(
                f"{path}: expected header {','.join(MANIFEST_HEADER)}, got {header}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise ManifestError(f"{path}: row {row_no}: expected 5 fields, got {len(row)}")
            video_id, frames_dir, landmarks_path, label, fps_str = (c.strip() for c in row)
            if not video_id:
                raise ManifestError(f"{path}: row {row_no}: empty video_id")
            if video_id in seen:
                raise ManifestError(f"{path}: row {row_no}: duplicate video_id {video_id!r}")
            seen.add(video_id)
            if label and label not in LABELS:
                raise ManifestError(f"{path}: row {row_no}: unknown label {label!r}")
            try:
                fps = float(fps_str) if fps_str else 50.0
            except ValueError:
                raise ManifestError(f"{path}: row {row_no}: bad fps {fps_str!r}") from None
            try:
                records.append(
                    VideoRecord(
                        video_id=video_id,
                        frames_dir=base / frames_dir,
                        landmarks_path=base / landmarks_path,
                        label=label or None,
                        fps=fps,
                    )
                )
            except ManifestError as exc:
                raise ManifestError(f"{path}: row {row_no}: {exc}") from None
    return records


def save_manifest(records: list[VideoRecord], path: str | Path) -> None:
    """Write a manifest CSV; paths are stored relative to the manifest dir."""
    path = Path(path)
    base = path.parent
    lines = [",".join(MANIFEST_HEADER)]
    for rec in records:
        frames = _relativize(rec.frames_dir, base)
        lms = _relativize(rec.landmarks_path, base)
        lines.append(
            f"{rec.video_id},{frames},{lms},{rec.label or ''},{_fmt(rec.fps)}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _relativize(p: Path, base: Path) -> str:
    try:
        return Path(p).relative_to(base).as_posix()
    except ValueError:
        return Path(p).as_posix()


def load_landmarks(path: str | Path) -> list[LandmarkFrame]:
    """Parse a landmarks CSV (rows frame,point_index,x,y[,z]).

    Every frame must provide all 21 points and frame indices must be
    non-decreasing in the file. Presence of the z column switches the whole
    file to 3-D mode.
    """
    path = Path(path)
    if not path.is_file():
        raise LandmarkError(f"landmarks file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise LandmarkError(f"{path}: empty file")
        header = [c.strip() for c in header]
        if header[:4] != ["frame", "point_index", "x", "y"]:
            raise LandmarkError(f"{path}: expected header frame,point_index,x,y[,z]")
        has_z = len(header) == 5 and header[4] == "z"
        dim = 3 if has_z else 2
        frames: list[LandmarkFrame] = []
        cur_index: int | None = None
        cur_pts = np.full((N_POINTS, dim), np.nan)
        cur_seen: set[int] = set()

        def flush():
            if cur_index is None:
                return
            missing = sorted(set(range(1, N_POINTS + 1)) - cur_seen)
            if missing:
                raise LandmarkError(
                    f"{path}: frame {cur_index} missing point indices {missing}"
                )
            frames.append(LandmarkFrame(frame_index=cur_index, points=cur_pts.copy()))

        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2 + dim:
                raise LandmarkError(
                    f"{path}: row {row_no}: expected {2 + dim} fields, got {len(row)}"
                )
            try:
                f_idx = int(row[0])
                p_idx = int(row[1])
                coords = [float(c) for c in row[2:]]
            except ValueError:
                raise LandmarkError(f"{path}: row {row_no}: malformed row") from None
            if not 1 <= p_idx <= N_POINTS:
                raise LandmarkError(
                    f"{path}: row {row_no}: point_index {p_idx} outside 1..{N_POINTS}"
                )
            if cur_index is None or f_idx != cur_index:
                if cur_index is not None and f_idx < cur_index:
                    raise LandmarkError(
                        f"{path}: row {row_no}: non-monotone frame index "
                        f"{f_idx} after {cur_index}"
                    )
                flush()
                cur_index = f_idx
                cur_pts = np.full((N_POINTS, dim), np.nan)
                cur_seen = set()
            if p_idx in cur_seen:
                raise LandmarkError(
                    f"{path}: row {row_no}: duplicate point {p_idx} in frame {f_idx}"
                )
            cur_seen.add(p_idx)
            cur_pts[p_idx - 1] = coords
        flush()
    if not frames:
        raise LandmarkError(f"{path}: no landmark frames")
    return frames


def save_landmarks(frames: list[LandmarkFrame], path: str | Path) -> None:
    """Write landmark frames to CSV in the canonical format."""
    path = Path(path)
    dim = frames[0].points.shape[1]
    header = "frame,point_index,x,y" + (",z" if dim == 3 else "")
    lines = [header]
    for frame in frames:
        for i in range(N_POINTS):
            coords = ",".join(_fmt(c) for c in frame.points[i])
            lines.append(f"{frame.frame_index},{i + 1},{coords}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_gray_image(path: str | Path) -> np.ndarray:
    """Load a PNG/PGM frame as a float image in [0, 1]."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"), dtype=float)
    return arr / 255.0


def save_gray_image(img: np.ndarray, path: str | Path) -> None:
    """Write a [0, 1] float image as 8-bit grayscale PNG/PGM (by extension)."""
    arr = np.clip(np.asarray(img, dtype=float), 0.0, 1.0)
    data = np.round(arr * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path)


def frame_paths(frames_dir: str | Path) -> list[Path]:
    """List frame files (frame_%06d.png or .pgm) sorted by frame number."""
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise ManifestError(f"frames dir not found: {frames_dir}")
    found: list[tuple[int, Path]] = []
    for p in frames_dir.iterdir():
        m = _FRAME_RE.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    if not found:
        raise ManifestError(f"no frame_%06d.png/pgm files in {frames_dir}")
    found.sort(key=lambda t: t[0])
    return [p for _, p in found]
