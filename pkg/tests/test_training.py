import dataclasses

import pytest
import torch

from maaig import synth, tokens, training
from maaig.dataset import Split
from maaig.model import init_params, load_checkpoint, save_checkpoint
from maaig.training import TrainConfig, TrainingDiverged, grad_check, tiny_config, train


@pytest.fixture(scope="module")
def corpus():
    examples = training.localize_examples(synth.gen_corpus("finetune", 12, seed=50))
    vocab = tokens.train_vocab([e.instruction for e in examples])
    train_split = [dataclasses.replace(e, split=Split.TRAIN) for e in examples]
    return train_split, vocab


def quick_config(**kw):
    defaults = dict(
        stage="scratch", arch="t5", coord="local", steps=5, batch_size=4, lr=1e-3, seed=0
    )
    defaults.update(kw)
    return TrainConfig(**defaults)


def test_config_validation():
    with pytest.raises(ValueError):
        quick_config(stage="finetune")  # needs init_from
    with pytest.raises(ValueError):
        quick_config(stage="warmup")
    with pytest.raises(ValueError):
        quick_config(steps=0)
    with pytest.raises(ValueError):
        quick_config(lr=0.0)


def test_train_writes_artifacts(tmp_path, corpus):
    examples, vocab = corpus
    report = train(quick_config(), examples, vocab, tmp_path)
    assert (tmp_path / "checkpoint.pt").exists()
    assert (tmp_path / "loss_curve.csv").exists()
    assert (tmp_path / "loss_curve.png").stat().st_size > 0
    assert (tmp_path / "train_report.json").exists()
    assert len(report.loss_curve) == 5
    steps = [s for s, _ in report.loss_curve]
    assert steps == sorted(steps)
    assert report.wall_time_s > 0


def test_train_deterministic(tmp_path, corpus):
    examples, vocab = corpus
    a = train(quick_config(steps=8), examples, vocab, tmp_path / "a")
    b = train(quick_config(steps=8), examples, vocab, tmp_path / "b")
    assert a.loss_curve == b.loss_curve
    ma, _ = load_checkpoint(a.checkpoint_path)
    mb, _ = load_checkpoint(b.checkpoint_path)
    for (name, pa), (_, pb) in zip(ma.state_dict().items(), mb.state_dict().items()):
        assert torch.equal(pa, pb), name


def test_train_rejects_test_split(tmp_path, corpus):
    examples, vocab = corpus
    tainted = examples[:-1] + [dataclasses.replace(examples[-1], split=Split.TEST)]
    with pytest.raises(ValueError, match="test-tagged"):
        train(quick_config(), tainted, vocab, tmp_path)


def test_train_rejects_coord_mismatch(tmp_path, corpus):
    examples, vocab = corpus
    with pytest.raises(ValueError, match="coord"):
        train(quick_config(coord="world"), examples, vocab, tmp_path)


def test_train_rejects_empty(tmp_path, corpus):
    _, vocab = corpus
    with pytest.raises(ValueError):
        train(quick_config(), [], vocab, tmp_path)


def test_finetune_resumes_and_tracks_lineage(tmp_path, corpus):
    examples, vocab = corpus
    first = train(quick_config(seed=3), examples, vocab, tmp_path / "pre")
    cfg = quick_config(stage="finetune", seed=4, init_from=first.checkpoint_path)
    second = train(cfg, examples, vocab, tmp_path / "ft")
    _, meta = load_checkpoint(second.checkpoint_path)
    assert meta["seed_lineage"] == [3, 4]


def test_finetune_rejects_vocab_mismatch(tmp_path, corpus):
    examples, vocab = corpus
    first = train(quick_config(), examples, vocab, tmp_path / "pre")
    other_vocab = tokens.train_vocab(["completely different words here"])
    cfg = quick_config(stage="finetune", init_from=first.checkpoint_path)
    with pytest.raises(ValueError, match="vocabulary"):
        train(cfg, examples, other_vocab, tmp_path / "ft")


def test_divergence_aborts_with_step(tmp_path, corpus):
    examples, vocab = corpus
    # A checkpoint with a NaN weight makes the very first loss non-finite.
    model = init_params(
        dataclasses.replace(
            tiny_config(), vocab_size=vocab.size, dropout=0.1, max_tokens=32, max_frames=64
        ),
        seed=0,
    )
    with torch.no_grad():
        model.out_proj.weight[0, 0] = float("nan")
    ckpt = tmp_path / "bad.pt"
    save_checkpoint(model, ckpt, [0], vocab.words)
    cfg = quick_config(stage="finetune", init_from=str(ckpt))
    with pytest.raises(TrainingDiverged) as err:
        train(cfg, examples, vocab, tmp_path / "out")
    assert err.value.step == 0


def test_grad_check_recomputation_is_exact():
    # Identical recomputation in float64: zero perturbation, zero error.
    from maaig.model import forward_loss
    from maaig.tokens import BOS, EOS

    model = init_params(tiny_config(), seed=0).double()
    model.eval()
    clip = training.localize_examples(synth.gen_corpus("finetune", 1, seed=60))[0].clip
    a = float(forward_loss(model, clip, [BOS, 5, 6, EOS])[0].detach())
    b = float(forward_loss(model, clip, [BOS, 5, 6, EOS])[0].detach())
    assert a == b


def test_grad_check_requires_dropout_zero():
    with pytest.raises(ValueError):
        grad_check(dataclasses.replace(tiny_config(), dropout=0.1))


def test_grad_check_step_size_sanity():
    # Looser step gives a worse (or equal) error; recorded, not load-bearing.
    fine = grad_check(seed=1, h=1e-4)
    coarse = grad_check(seed=1, h=1e-2)
    assert fine < 1e-4
    assert coarse >= fine
