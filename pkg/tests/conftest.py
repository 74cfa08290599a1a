import dataclasses

import numpy as np
import pytest

from maaig import synth, tokens, training
from maaig.dataset import Split
from maaig.model import load_checkpoint
from maaig.skeleton import Coord, MotionClip
from maaig.tokens import encode


@pytest.fixture(scope="session")
def small_vocab() -> tokens.Vocabulary:
    texts = [
        synth.RULE_UNDER_ROTATED,
        synth.RULE_ARMS_WIDE,
        synth.RULE_STIFF_LANDING,
        synth.NO_FLAW_TEXT,
        "a person jumps and turns once with wide arms",
    ]
    return tokens.train_vocab(texts)


def grid_clip(n_frames: int = 6, fps: float = 20.0, seed: int = 3) -> MotionClip:
    """World clip whose coordinates are exact multiples of 2^-10.

    On such a grid, adding an exactly-representable offset and subtracting the
    root are both exact in float64, so coordinate-conversion invariants can be
    asserted bitwise.
    """
    rng = np.random.default_rng(seed)
    quanta = rng.integers(-2048, 2048, size=(n_frames, 22, 3))
    frames = quanta.astype(np.float64) / 1024.0
    return MotionClip(frames=frames, fps=fps, coord=Coord.WORLD, clip_id="grid")


@pytest.fixture(scope="session")
def overfit_artifacts(tmp_path_factory):
    """One (clip, instruction) pair memorized by a desk-scale model.

    Shared by the acceptance overfit criterion, the service /generate tests,
    and the CLI generate test; training it once keeps the suite fast.
    """
    out = tmp_path_factory.mktemp("overfit")
    example = synth.gen_corpus("finetune", 1, seed=123)[0]
    local = dataclasses.replace(
        training.localize_examples([example])[0], split=Split.TRAIN
    )
    vocab = tokens.train_vocab(
        [
            synth.RULE_UNDER_ROTATED,
            synth.RULE_ARMS_WIDE,
            synth.RULE_STIFF_LANDING,
            synth.NO_FLAW_TEXT,
        ]
    )
    config = training.TrainConfig(
        stage="scratch", arch="t5", coord="local", steps=500, batch_size=1, lr=1e-3, seed=0
    )
    report = training.train(config, [local], vocab, out)
    model, _ = load_checkpoint(report.checkpoint_path)
    return {
        "example_world": example,
        "example_local": local,
        "vocab": vocab,
        "report": report,
        "model": model,
        "checkpoint": report.checkpoint_path,
        "target_ids": encode(vocab, example.instruction, add_bos_eos=True),
    }
