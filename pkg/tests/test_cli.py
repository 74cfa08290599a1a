import json

import pytest

from maaig import dataset, skeleton, synth
from maaig.cli import main


def run(argv):
    return main(argv)


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as err:
        run(["frobnicate"])
    assert err.value.code == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_invalid_flag_exits_2():
    with pytest.raises(SystemExit) as err:
        run(["synth", "--kind", "nonsense", "--n", "1", "--seed", "0", "--out", "x"])
    assert err.value.code == 2


def test_runtime_failure_exits_1(tmp_path, capsys):
    code = run(
        ["evaluate", "--pred", str(tmp_path / "missing.txt"), "--ref", str(tmp_path / "missing.txt"), "--out", str(tmp_path)]
    )
    assert code == 1
    assert "error" in capsys.readouterr().err.lower()


def test_synth_writes_corpus(tmp_path):
    out = tmp_path / "corpus"
    assert run(["synth", "--kind", "finetune", "--n", "12", "--seed", "5", "--out", str(out)]) == 0
    manifest = dataset.load_dataset(out)
    assert len(manifest.examples) == 12
    assert (out / "clips").exists()


def test_build_dataset_cli(tmp_path):
    clips_dir = tmp_path / "clips"
    clips_dir.mkdir()
    for i in range(3):
        clip = synth.gen_motion(
            synth.JumpParams(
                rotations=1.0, air_time_s=1.0, arm_offset_m=0.2,
                knee_flex_deg=30.0, rng_seed=i,
            )
        )
        skeleton.save_clip(clip, clips_dir / f"vid{i}.json")
    annotations = [
        {"video_id": f"vid{i}", "start_s": 0.1, "end_s": 0.9, "instruction": f"note {i}"}
        for i in range(3)
    ]
    ann_path = tmp_path / "annotations.json"
    ann_path.write_text(json.dumps(annotations))
    out = tmp_path / "built"
    code = run(
        ["build-dataset", "--clips", str(clips_dir), "--annotations", str(ann_path), "--seed", "1", "--out", str(out)]
    )
    assert code == 0
    built = dataset.load_dataset(out)
    assert len(built.examples) == 3


def test_evaluate_cli_writes_report_and_figure(tmp_path):
    pred = tmp_path / "pred.txt"
    ref = tmp_path / "ref.txt"
    pred.write_text("good jump keep the same form\nincrease your rotation speed\n")
    ref.write_text("good jump keep the same form\nincrease your rotation speed\n")
    out = tmp_path / "report"
    assert run(["evaluate", "--pred", str(pred), "--ref", str(ref), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["bleu_1"] == 1.0
    assert report["rouge_l"] == 1.0
    assert (out / "report.txt").exists()
    assert (out / "report.png").stat().st_size > 0


def test_train_cli_smoke(tmp_path):
    data = tmp_path / "data"
    assert run(["synth", "--kind", "finetune", "--n", "10", "--seed", "3", "--out", str(data)]) == 0
    out = tmp_path / "run"
    code = run(
        [
            "train", "--stage", "scratch", "--arch", "t5", "--coord", "local",
            "--data", str(data), "--seed", "0", "--out", str(out), "--steps", "3",
            "--batch-size", "4",
        ]
    )
    assert code == 0
    assert (out / "checkpoint.pt").exists()
    assert (out / "loss_curve.png").exists()
    assert (out / "vocab.json").exists()


def test_generate_cli_prints_memorized_instruction(tmp_path, capsys, overfit_artifacts):
    clip_path = tmp_path / "probe.json"
    skeleton.save_clip(overfit_artifacts["example_world"].clip, clip_path)
    code = run(["generate", "--ckpt", str(overfit_artifacts["checkpoint"]), "--clip", str(clip_path)])
    assert code == 0
    out = capsys.readouterr().out.strip()
    assert out == overfit_artifacts["example_world"].instruction
