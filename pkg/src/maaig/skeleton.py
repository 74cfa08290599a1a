"""Motion clip data structures: validation, coordinate conversion, time clipping.

A clip is a fixed-rate sequence of 22-joint 3D poses (x, y, z in meters,
z up). Joint order follows the first 22 joints of the SMPL kinematic tree;
joint 0 is the pelvis/root. Clips are tagged either "world" (absolute scene
positions) or "local" (root subtracted per frame, root pinned at the origin).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

N_JOINTS = 22
ROOT_JOINT = 0

JOINT_NAMES = (
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
)

# Parent index per joint, -1 for the root. Used for bone rendering and for
# building pose templates.
PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19)


class Coord(str, Enum):
    WORLD = "world"
    LOCAL = "local"


def round_half_away(x: float) -> int:
    """Round a nonnegative value to the nearest integer, halves away from zero."""
    if x < 0:
        raise ValueError(f"expected nonnegative value, got {x}")
    i = math.floor(x)
    return i + 1 if x - i >= 0.5 else i


@dataclass(frozen=True)
class MotionClip:
    """Immutable fixed-rate sequence of 22-joint frames.

    frames is (n, 22, 3) float64 when well formed; malformed input (ragged
    frames, wrong joint counts) is kept as-is so validate() can report it.
    """

    frames: np.ndarray
    fps: float
    coord: Coord
    clip_id: str = ""

    def __post_init__(self) -> None:
        try:
            arr = np.asarray(self.frames, dtype=np.float64)
        except (ValueError, TypeError):
            arr = np.asarray(self.frames, dtype=object)
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)
        object.__setattr__(self, "coord", Coord(self.coord))

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.fps


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(clip: MotionClip) -> ValidationResult:
    """Check clip invariants; violations are reported as data, not raised."""
    problems: list[str] = []
    if not (isinstance(clip.fps, (int, float)) and math.isfinite(clip.fps) and clip.fps > 0):
        problems.append(f"fps must be a positive finite number, got {clip.fps}")
    if clip.n_frames == 0:
        problems.append("clip has no frames")
        return ValidationResult(tuple(problems))

    well_shaped = (
        isinstance(clip.frames, np.ndarray)
        and clip.frames.dtype == np.float64
        and clip.frames.ndim == 3
        and clip.frames.shape[1:] == (N_JOINTS, 3)
    )
    if well_shaped:
        bad = ~np.isfinite(clip.frames)
        if bad.any():
            for f, j in zip(*np.nonzero(bad.any(axis=2))):
                problems.append(f"frame {f}, joint {j}: non-finite coordinate")
    else:
        for f, frame in enumerate(clip.frames):
            frame_arr = np.asarray(frame, dtype=object)
            if len(frame_arr) != N_JOINTS:
                problems.append(f"frame {f}: expected {N_JOINTS} joints, got {len(frame_arr)}")
                continue
            for j, joint in enumerate(frame_arr):
                coords = np.asarray(joint).ravel()
                if coords.size != 3:
                    problems.append(f"frame {f}, joint {j}: expected 3 coordinates")
                elif not all(math.isfinite(float(c)) for c in coords):
                    problems.append(f"frame {f}, joint {j}: non-finite coordinate")

    if clip.coord is Coord.LOCAL and well_shaped:
        nonzero = np.nonzero(np.any(clip.frames[:, ROOT_JOINT, :] != 0.0, axis=1))[0]
        for f in nonzero:
            problems.append(f"frame {f}: local clip root must be exactly (0, 0, 0)")
    return ValidationResult(tuple(problems))


def world_to_local(clip: MotionClip) -> MotionClip:
    """Subtract each frame's root position from all joints; retag as local."""
    if clip.coord is Coord.LOCAL:
        raise ValueError(f"clip {clip.clip_id!r} is already in local coordinates")
    frames = clip.frames - clip.frames[:, ROOT_JOINT : ROOT_JOINT + 1, :]
    return MotionClip(frames=frames, fps=clip.fps, coord=Coord.LOCAL, clip_id=clip.clip_id)


def translate(clip: MotionClip, offset) -> MotionClip:
    """Shift every joint of every frame by a constant (x, y, z) offset."""
    off = np.asarray(offset, dtype=np.float64).reshape(1, 1, 3)
    return MotionClip(
        frames=clip.frames + off, fps=clip.fps, coord=clip.coord, clip_id=clip.clip_id
    )


def clip_by_time(clip: MotionClip, start_s: float, end_s: float) -> MotionClip:
    """Extract frames with index in [round(start_s*fps), round(end_s*fps)).

    Rounding is half-away-from-zero; the window is clamped to the clip.
    Raises ValueError when the clamped window contains no frames.
    """
    if not 0 <= start_s < end_s:
        raise ValueError(f"need 0 <= start < end, got start={start_s}, end={end_s}")
    i0 = max(0, round_half_away(start_s * clip.fps))
    i1 = min(clip.n_frames, round_half_away(end_s * clip.fps))
    if i0 >= i1:
        raise ValueError(
            f"interval [{start_s}, {end_s}) maps to no frames of clip {clip.clip_id!r} "
            f"({clip.n_frames} frames at {clip.fps} fps)"
        )
    return MotionClip(
        frames=clip.frames[i0:i1], fps=clip.fps, coord=clip.coord, clip_id=clip.clip_id
    )


def save_clip(clip: MotionClip, path: str | Path) -> None:
    """Write a clip as JSON {fps, coord, frames}; doubles round-trip exactly."""
    payload = {
        "fps": clip.fps,
        "coord": clip.coord.value,
        "frames": clip.frames.tolist(),
    }
    Path(path).write_text(json.dumps(payload))


def load_clip(path: str | Path) -> MotionClip:
    path = Path(path)
    payload = json.loads(path.read_text())
    return MotionClip(
        frames=payload["frames"],
        fps=payload["fps"],
        coord=Coord(payload["coord"]),
        clip_id=path.stem,
    )
