"""Dataset assembly: pair annotated intervals with motion, merge co-located
instructions, and split 90/10 into train/test.

The grouping key is exact (video_id, start_s, end_s) equality; instructions
sharing a key are merged in input order with the " ; " separator. Splits come
from a seeded uniform shuffle over examples with ceil(0.9 * n) train.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from . import skeleton
from .skeleton import Coord, MotionClip

SEPARATOR = " ; "


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class AnnotationRecord:
    video_id: str
    start_s: float
    end_s: float
    instruction: str
    annotator: str | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.start_s < self.end_s:
            raise ValueError(
                f"need 0 <= start < end, got [{self.start_s}, {self.end_s}) "
                f"for video {self.video_id!r}"
            )
        if not self.instruction.strip():
            raise ValueError(f"empty instruction for video {self.video_id!r}")

    @property
    def key(self) -> tuple[str, float, float]:
        return (self.video_id, self.start_s, self.end_s)


@dataclass(frozen=True)
class PairedExample:
    clip: MotionClip
    instruction: str
    split: Split


@dataclass(frozen=True)
class DatasetManifest:
    examples: tuple[PairedExample, ...]
    seed: int
    separator: str = SEPARATOR


def merge_instructions(records: list[AnnotationRecord]) -> str:
    """Join instructions of records sharing one (video, start, end) key."""
    if not records:
        raise ValueError("no records to merge")
    key = records[0].key
    for r in records[1:]:
        if r.key != key:
            raise ValueError(f"mismatched keys in merge: {key} vs {r.key}")
    return SEPARATOR.join(r.instruction for r in records)


def split_counts(n: int) -> tuple[int, int]:
    """ceil(0.9 * n) train, remainder test; integer arithmetic throughout."""
    if n < 1:
        raise ValueError(f"need at least one example, got {n}")
    train = (9 * n + 9) // 10
    return train, n - train


def assign_splits(n: int, seed: int) -> list[Split]:
    """Seeded uniform shuffle; the first ceil(0.9 n) shuffled slots are train."""
    train, _ = split_counts(n)
    order = list(range(n))
    random.Random(seed).shuffle(order)
    chosen = set(order[:train])
    return [Split.TRAIN if i in chosen else Split.TEST for i in range(n)]


def build_dataset(
    clips: list[MotionClip], annotations: list[AnnotationRecord], seed: int
) -> DatasetManifest:
    """Group annotations by interval, merge, clip motion, localize, and split.

    Examples come out ordered by sorted group key so the manifest is
    reproducible byte-for-byte for identical inputs and seed.
    """
    by_id = {c.clip_id: c for c in clips}
    groups: dict[tuple[str, float, float], list[AnnotationRecord]] = {}
    for rec in annotations:
        if rec.video_id not in by_id:
            raise ValueError(f"annotation references unknown video {rec.video_id!r}")
        groups.setdefault(rec.key, []).append(rec)

    keys = sorted(groups)
    splits = assign_splits(len(keys), seed) if keys else []
    examples: list[PairedExample] = []
    for (video_id, start_s, end_s), split in zip(keys, splits):
        source = by_id[video_id]
        try:
            sub = skeleton.clip_by_time(source, start_s, end_s)
        except ValueError as e:
            raise ValueError(
                f"annotation ({video_id!r}, {start_s}, {end_s}) is unusable: {e}"
            ) from e
        if sub.coord is Coord.WORLD:
            sub = skeleton.world_to_local(sub)
        sub = MotionClip(
            frames=sub.frames,
            fps=sub.fps,
            coord=sub.coord,
            clip_id=f"{video_id}__{start_s:g}_{end_s:g}",
        )
        examples.append(
            PairedExample(
                clip=sub,
                instruction=merge_instructions(groups[(video_id, start_s, end_s)]),
                split=split,
            )
        )
    return DatasetManifest(examples=tuple(examples), seed=seed)


# ── file formats ─────────────────────────────────────────────────────


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    """Read a JSON array of {video_id, start_s, end_s, instruction, annotator?}."""
    raw = json.loads(Path(path).read_text())
    return [
        AnnotationRecord(
            video_id=r["video_id"],
            start_s=float(r["start_s"]),
            end_s=float(r["end_s"]),
            instruction=r["instruction"],
            annotator=r.get("annotator"),
        )
        for r in raw
    ]


def save_annotations(records: list[AnnotationRecord], path: str | Path) -> None:
    rows = []
    for r in records:
        row = {
            "video_id": r.video_id,
            "start_s": r.start_s,
            "end_s": r.end_s,
            "instruction": r.instruction,
        }
        if r.annotator is not None:
            row["annotator"] = r.annotator
        rows.append(row)
    Path(path).write_text(json.dumps(rows, indent=2))


def save_dataset(manifest: DatasetManifest, out_dir: str | Path) -> Path:
    """Persist clips plus a line-delimited manifest; returns the manifest path.

    Layout: out/clips/<clip_id>.json, out/manifest.jsonl with one
    {clip_path, instruction, split} record per line, and out/dataset_meta.json
    carrying the seed and separator.
    """
    out = Path(out_dir)
    (out / "clips").mkdir(parents=True, exist_ok=True)
    lines = []
    for ex in manifest.examples:
        rel = f"clips/{ex.clip.clip_id}.json"
        skeleton.save_clip(ex.clip, out / rel)
        lines.append(
            json.dumps(
                {"clip_path": rel, "instruction": ex.instruction, "split": ex.split.value}
            )
        )
    manifest_path = out / "manifest.jsonl"
    manifest_path.write_text("\n".join(lines) + ("\n" if lines else ""))
    (out / "dataset_meta.json").write_text(
        json.dumps({"seed": manifest.seed, "separator": manifest.separator}, indent=2)
    )
    return manifest_path


def load_dataset(in_dir: str | Path) -> DatasetManifest:
    in_dir = Path(in_dir)
    meta = {"seed": 0, "separator": SEPARATOR}
    meta_path = in_dir / "dataset_meta.json"
    if meta_path.exists():
        meta.update(json.loads(meta_path.read_text()))
    examples = []
    for line in (in_dir / "manifest.jsonl").read_text().splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        clip = skeleton.load_clip(in_dir / row["clip_path"])
        examples.append(
            PairedExample(
                clip=clip, instruction=row["instruction"], split=Split(row["split"])
            )
        )
    return DatasetManifest(
        examples=tuple(examples), seed=meta["seed"], separator=meta["separator"]
    )
