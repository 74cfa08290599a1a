"""Parametric synthetic corpora: jump clips with coaching instructions, and a
broader caption-style corpus (walks, turns, stands, jumps) for pretraining.

Every clip is produced in world coordinates with a random global offset per
example, so converting to local coordinates genuinely matters downstream.
Instruction text comes from a deterministic rule oracle over the generating
parameters, never from the realized geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import SEPARATOR, PairedExample, assign_splits
from .skeleton import Coord, MotionClip, round_half_away, translate

GRAVITY = 9.81
REST_ROOT_HEIGHT = 0.95
DEFAULT_FPS = 20.0

# Flaw rules, in report order. A jump is flawed when it under-rotates, flails
# the arms wide, or lands stiff-kneed.
MIN_ROTATIONS = 1.5
MAX_ARM_OFFSET_M = 0.35
MIN_KNEE_FLEX_DEG = 20.0

RULE_UNDER_ROTATED = "increase your rotation speed"
RULE_ARMS_WIDE = "keep your arms closer to your body"
RULE_STIFF_LANDING = "bend your knees more on landing"
NO_FLAW_TEXT = "good jump keep the same form"


class CorpusKind(str, Enum):
    PRETRAIN = "pretrain"
    FINETUNE = "finetune"


@dataclass(frozen=True)
class JumpParams:
    rotations: float
    air_time_s: float
    arm_offset_m: float
    knee_flex_deg: float
    travel_dir: tuple[float, float] = (0.0, 0.0)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.air_time_s <= 0:
            raise ValueError(f"air_time_s must be positive, got {self.air_time_s}")
        if self.rotations < 0:
            raise ValueError(f"rotations must be >= 0, got {self.rotations}")
        if self.arm_offset_m < 0:
            raise ValueError(f"arm_offset_m must be >= 0, got {self.arm_offset_m}")
        if not 0 <= self.knee_flex_deg <= 150:
            raise ValueError(f"knee_flex_deg must be in [0, 150], got {self.knee_flex_deg}")


def oracle_instruction(params: JumpParams) -> str:
    """Deterministic rule-based label; flaws merge with the dataset separator."""
    flaws = []
    if params.rotations < MIN_ROTATIONS:
        flaws.append(RULE_UNDER_ROTATED)
    if params.arm_offset_m > MAX_ARM_OFFSET_M:
        flaws.append(RULE_ARMS_WIDE)
    if params.knee_flex_deg < MIN_KNEE_FLEX_DEG:
        flaws.append(RULE_STIFF_LANDING)
    return SEPARATOR.join(flaws) if flaws else NO_FLAW_TEXT


# ── pose construction ────────────────────────────────────────────────
#
# Axes: x forward (before yaw), y left, z up. Offsets are from the root.


def _rest_offsets(scale: float) -> np.ndarray:
    """Static 22-joint template (pelvis at the origin), limb lengths * scale."""
    o = np.zeros((22, 3))
    o[1] = (0.00, 0.09, -0.06)   # left_hip
    o[2] = (0.00, -0.09, -0.06)  # right_hip
    o[3] = (0.00, 0.00, 0.11)    # spine1
    o[4] = (0.00, 0.10, -0.45)   # left_knee
    o[5] = (0.00, -0.10, -0.45)  # right_knee
    o[6] = (0.00, 0.00, 0.23)    # spine2
    o[7] = (0.00, 0.10, -0.86)   # left_ankle
    o[8] = (0.00, -0.10, -0.86)  # right_ankle
    o[9] = (0.00, 0.00, 0.35)    # spine3
    o[10] = (0.13, 0.10, -0.92)  # left_foot
    o[11] = (0.13, -0.10, -0.92) # right_foot
    o[12] = (0.00, 0.00, 0.48)   # neck
    o[13] = (0.00, 0.07, 0.41)   # left_collar
    o[14] = (0.00, -0.07, 0.41)  # right_collar
    o[15] = (0.00, 0.00, 0.60)   # head
    o[16] = (0.00, 0.17, 0.43)   # left_shoulder
    o[17] = (0.00, -0.17, 0.43)  # right_shoulder
    return o * scale


def _arm_offsets(arm_radius: float, scale: float) -> np.ndarray:
    """Elbow/wrist offsets for hands held at arm_radius from the root."""
    o = np.zeros((22, 3))
    for wrist, elbow, shoulder, side in ((20, 18, 16, 1.0), (21, 19, 17, -1.0)):
        hand_dir = np.array([0.25, side * 0.85, 0.25])
        hand_dir /= np.linalg.norm(hand_dir)
        w = arm_radius * hand_dir
        s = np.array([0.0, side * 0.17, 0.43]) * scale
        o[wrist] = w
        o[elbow] = 0.4 * s + 0.6 * w + np.array([0.03, 0.0, 0.02])
    return o


def _yaw_matrix(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _frame_count(duration_s: float, fps: float) -> int:
    return round_half_away(duration_s * fps) + 1


JITTER_STD = 0.015
# Joints that never receive jitter: the root anchors the coordinate system
# and the hip axis carries the exact yaw schedule.
_CLEAN_JOINTS = (0, 1, 2)


def _jitter(frames: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Small per-frame observation noise on everything but root and hips."""
    noise = rng.normal(0.0, JITTER_STD, size=frames.shape)
    noise[:, _CLEAN_JOINTS, :] = 0.0
    return frames + noise


def gen_motion(params: JumpParams, fps: float = DEFAULT_FPS) -> MotionClip:
    """Jump clip: ballistic root arc over air_time_s, linear yaw schedule
    totalling 2*pi*rotations, limbs from the template plus seeded jitter.

    Deterministic in (params, fps); rng_seed varies the initial facing, a
    small limb-length scale, and the per-frame limb jitter. Root and hip
    joints stay noise-free so the arc and yaw schedule are exact.
    """
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    rng = np.random.default_rng(params.rng_seed)
    yaw0 = rng.uniform(0.0, 2.0 * math.pi)
    scale = rng.uniform(0.96, 1.04)

    T = params.air_time_s
    n = _frame_count(T, fps)
    v0 = GRAVITY * T / 2.0

    dir_xy = np.asarray(params.travel_dir, dtype=np.float64)
    norm = np.linalg.norm(dir_xy)
    travel = np.zeros(3)
    if norm > 0:
        travel[:2] = dir_xy / norm  # 1 m/s ground speed along travel_dir

    base = _rest_offsets(scale) + _arm_offsets(params.arm_offset_m, scale)
    theta = math.radians(params.knee_flex_deg)

    frames = np.empty((n, 22, 3))
    for i in range(n):
        t = i / fps
        root = np.array(
            [travel[0] * t, travel[1] * t, REST_ROOT_HEIGHT + v0 * t - 0.5 * GRAVITY * t * t]
        )
        offsets = base.copy()
        # Landing preparation: knees drive forward and ankles tuck upward
        # over the back half of the arc.
        ramp = min(1.0, max(0.0, (t / T - 0.5) / 0.5)) if T > 0 else 0.0
        flex = theta * ramp
        knee_fwd = 0.45 * math.sin(flex / 2.0)
        ankle_up = 0.45 * math.sin(flex / 2.0)
        for knee, ankle, foot in ((4, 7, 10), (5, 8, 11)):
            offsets[knee, 0] += knee_fwd
            offsets[ankle, 2] += ankle_up
            offsets[foot, 2] += ankle_up
        yaw = yaw0 + 2.0 * math.pi * params.rotations * (t / T)
        frames[i] = root + offsets @ _yaw_matrix(yaw).T
    frames = _jitter(frames, rng)
    clip_id = f"jump_{params.rng_seed}"
    return MotionClip(frames=frames, fps=fps, coord=Coord.WORLD, clip_id=clip_id)


def _gen_stand(duration_s: float, yaw0: float, scale: float, fps: float) -> np.ndarray:
    n = _frame_count(duration_s, fps)
    offsets = _rest_offsets(scale) + _arm_offsets(0.25, scale)
    pose = np.array([0.0, 0.0, REST_ROOT_HEIGHT]) + offsets @ _yaw_matrix(yaw0).T
    return np.repeat(pose[None, :, :], n, axis=0)


def _gen_walk(
    duration_s: float, speed: float, yaw0: float, scale: float, fps: float
) -> np.ndarray:
    n = _frame_count(duration_s, fps)
    base = _rest_offsets(scale) + _arm_offsets(0.25, scale)
    rot = _yaw_matrix(yaw0)
    heading = rot @ np.array([1.0, 0.0, 0.0])
    cadence = 1.6  # strides per second
    frames = np.empty((n, 22, 3))
    for i in range(n):
        t = i / fps
        root = heading * speed * t + np.array([0.0, 0.0, REST_ROOT_HEIGHT])
        offsets = base.copy()
        swing = 0.22 * math.sin(2.0 * math.pi * cadence * t)
        for knee, ankle, foot, sign in ((4, 7, 10, 1.0), (5, 8, 11, -1.0)):
            offsets[knee, 0] += 0.5 * sign * swing
            offsets[ankle, 0] += sign * swing
            offsets[foot, 0] += sign * swing
        frames[i] = root + offsets @ rot.T
    return frames


def _gen_turn(
    duration_s: float, turns: float, yaw0: float, scale: float, fps: float
) -> np.ndarray:
    n = _frame_count(duration_s, fps)
    base = _rest_offsets(scale) + _arm_offsets(0.25, scale)
    frames = np.empty((n, 22, 3))
    for i in range(n):
        t = i / fps
        yaw = yaw0 + 2.0 * math.pi * turns * (t / duration_s)
        frames[i] = np.array([0.0, 0.0, REST_ROOT_HEIGHT]) + base @ _yaw_matrix(yaw).T
    return frames


_COUNT_WORDS = {0.5: "halfway", 1.0: "once", 1.5: "one and a half times", 2.0: "twice"}


def _pretrain_example(rng: np.random.Generator, fps: float, clip_id: str) -> tuple[MotionClip, str]:
    yaw0 = rng.uniform(0.0, 2.0 * math.pi)
    scale = rng.uniform(0.96, 1.04)
    family = rng.choice(["jump", "walk", "turn", "stand"], p=[0.4, 0.25, 0.25, 0.1])
    if family == "stand":
        frames = _gen_stand(rng.uniform(0.8, 1.4), yaw0, scale, fps)
        caption = "a person stands still"
    elif family == "walk":
        speed = rng.choice([0.6, 1.0, 1.5])
        frames = _gen_walk(rng.uniform(1.0, 1.6), speed, yaw0, scale, fps)
        manner = {0.6: " slowly", 1.0: "", 1.5: " quickly"}[float(speed)]
        caption = f"a person walks forward{manner}"
    elif family == "turn":
        turns = float(rng.choice([1.0, 2.0]))
        frames = _gen_turn(rng.uniform(1.0, 1.6), turns, yaw0, scale, fps)
        caption = f"a person turns around {'once' if turns == 1.0 else 'twice'}"
    else:
        rotations = float(rng.choice([0.5, 1.0, 1.5, 2.0]))
        arm_wide = bool(rng.random() < 0.5)
        knee_bent = bool(rng.random() < 0.5)
        params = JumpParams(
            rotations=rotations,
            air_time_s=float(rng.uniform(0.95, 1.15)),
            arm_offset_m=0.50 if arm_wide else 0.15,
            knee_flex_deg=45.0 if knee_bent else 8.0,
            travel_dir=_random_dir(rng),
            rng_seed=int(rng.integers(2**31)),
        )
        clip = gen_motion(params, fps)
        arms = "wide arms" if arm_wide else "arms close to the body"
        knees = "bent" if knee_bent else "straight"
        caption = (
            f"a person jumps and turns {_COUNT_WORDS[rotations]} "
            f"with {arms} and lands with {knees} knees"
        )
        return (
            MotionClip(frames=clip.frames, fps=fps, coord=Coord.WORLD, clip_id=clip_id),
            caption,
        )
    frames = _jitter(frames, rng)
    return MotionClip(frames=frames, fps=fps, coord=Coord.WORLD, clip_id=clip_id), caption


def _random_dir(rng: np.random.Generator) -> tuple[float, float]:
    if rng.random() < 0.2:
        return (0.0, 0.0)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return (math.cos(angle), math.sin(angle))


def _finetune_params(rng: np.random.Generator) -> JumpParams:
    # Each rule side is sampled with a margin around its threshold so labels
    # stay separable; air time varies just enough that yaw rate is a usable
    # cue without collapsing to a constant.
    under_rotated = rng.random() < 0.40
    arms_wide = rng.random() < 0.40
    stiff_landing = rng.random() < 0.35
    return JumpParams(
        rotations=float(rng.uniform(0.85, 1.38) if under_rotated else rng.uniform(1.62, 2.15)),
        air_time_s=float(rng.uniform(0.98, 1.10)),
        arm_offset_m=float(rng.uniform(0.39, 0.58) if arms_wide else rng.uniform(0.12, 0.31)),
        knee_flex_deg=float(rng.uniform(5.0, 16.0) if stiff_landing else rng.uniform(24.0, 55.0)),
        travel_dir=_random_dir(rng),
        rng_seed=int(rng.integers(2**31)),
    )


def gen_corpus(
    kind: CorpusKind | str, n: int, seed: int, fps: float = DEFAULT_FPS
) -> list[PairedExample]:
    """Deterministic corpus of n (world clip, text) pairs with 90/10 splits.

    Per-example generators are seeded by (seed, index, kind) so generation
    is order-independent and reproducible.
    """
    kind = CorpusKind(kind)
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    kind_tag = 0 if kind is CorpusKind.PRETRAIN else 1
    splits = assign_splits(n, seed)
    examples: list[PairedExample] = []
    for i in range(n):
        rng = np.random.default_rng([seed, i, kind_tag])
        clip_id = f"{kind.value}-{i:05d}"
        if kind is CorpusKind.PRETRAIN:
            clip, text = _pretrain_example(rng, fps, clip_id)
        else:
            params = _finetune_params(rng)
            clip = gen_motion(params, fps)
            clip = MotionClip(frames=clip.frames, fps=fps, coord=Coord.WORLD, clip_id=clip_id)
            text = oracle_instruction(params)
        offset = rng.uniform(-5.0, 5.0, size=3)
        examples.append(
            PairedExample(clip=translate(clip, offset), instruction=text, split=splits[i])
        )
    return examples
