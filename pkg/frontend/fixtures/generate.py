"""Regenerate the shipped overfit fixture used by the UI integration test.

Trains a desk-scale model to memorize one synthetic (clip, instruction) pair
and stores the world-coordinate clip, the checkpoint, and the expected text.

Run from the repository root:  python3 frontend/fixtures/generate.py
"""

import dataclasses
import json
import shutil
import tempfile
from pathlib import Path

from maaig import skeleton, synth, tokens, training
from maaig.dataset import Split

HERE = Path(__file__).parent


def main() -> None:
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
    with tempfile.TemporaryDirectory() as tmp:
        report = training.train(config, [local], vocab, tmp)
        shutil.copy(report.checkpoint_path, HERE / "checkpoint.pt")

    clips_dir = HERE / "clips"
    clips_dir.mkdir(exist_ok=True)
    skeleton.save_clip(example.clip, clips_dir / "demo.json")
    (HERE / "meta.json").write_text(
        json.dumps(
            {
                "clip_id": "demo",
                "duration_s": example.clip.duration_s,
                "fps": example.clip.fps,
                "instruction": example.instruction,
            },
            indent=2,
        )
    )
    print(f"fixture written to {HERE} (instruction: {example.instruction!r})")


if __name__ == "__main__":
    main()
