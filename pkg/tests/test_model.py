import decimal
import itertools
import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from conftest import grid_clip
from maaig import synth
from maaig.model import (
    ARCH_T5,
    ARCH_TRANSFORMER,
    ModelConfig,
    MotionToText,
    beam_decode,
    embed_motion,
    flatten_frames,
    forward_loss,
    greedy_decode,
    init_params,
    load_checkpoint,
    save_checkpoint,
    subsample_indices,
)
from maaig.skeleton import Coord, MotionClip, translate, world_to_local
from maaig.tokens import BOS, EOS, PAD
from maaig.training import _collate

ARCHS = (ARCH_TRANSFORMER, ARCH_T5)


def small_config(arch=ARCH_T5, vocab_size=16, dropout=0.0, **kw):
    defaults = dict(
        vocab_size=vocab_size,
        d_model=16,
        n_layers_enc=1,
        n_layers_dec=1,
        n_heads=2,
        d_ff=32,
        max_frames=32,
        max_tokens=12,
        dropout=dropout,
        arch=arch,
    )
    defaults.update(kw)
    return ModelConfig(**defaults)


def fixture_clip(seed=0, n=None):
    clip = synth.gen_motion(
        synth.JumpParams(
            rotations=1.7, air_time_s=1.0, arm_offset_m=0.3,
            knee_flex_deg=25.0, travel_dir=(1.0, 0.0), rng_seed=seed,
        ),
        fps=20.0,
    )
    return world_to_local(clip)


# ── config ───────────────────────────────────────────────────────────


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(d_model=15)  # not divisible by heads
    with pytest.raises(ValueError):
        small_config(dropout=1.0)
    with pytest.raises(ValueError):
        small_config(arch="rnn")
    with pytest.raises(ValueError):
        small_config(n_layers_enc=0)


def test_paper_scale_preset():
    cfg = ModelConfig.paper_scale(vocab_size=100)
    assert cfg.d_model == 512
    assert cfg.arch == ARCH_T5


# ── embedding and subsampling ────────────────────────────────────────


def test_embed_zero_frame_zero_bias_is_zero():
    model = init_params(small_config(), seed=0)
    with torch.no_grad():
        model.frame_proj.bias.zero_()
    clip = MotionClip(frames=np.zeros((3, 22, 3)), fps=20.0, coord=Coord.LOCAL)
    out = embed_motion(model, clip)
    assert torch.equal(out, torch.zeros_like(out))


def test_embed_affine_identity():
    model = init_params(small_config(), seed=1).double()
    rng = np.random.default_rng(0)
    x = rng.standard_normal((1, 22, 3))
    y = rng.standard_normal((1, 22, 3))
    a, b = 0.7, -1.3

    def emb(frames):
        clip = MotionClip(frames=frames, fps=20.0, coord=Coord.WORLD)
        return embed_motion(model, clip)[0]

    zero = emb(np.zeros((1, 22, 3)))
    lhs = emb(a * x + b * y) - zero
    rhs = a * (emb(x) - zero) + b * (emb(y) - zero)
    assert torch.allclose(lhs, rhs, atol=1e-9)


def oracle_subsample(n, m):
    if n <= m:
        return list(range(n))
    if m == 1:
        return [0]
    step = (n - 1) / (m - 1)
    out = []
    for k in range(m):
        x = decimal.Decimal(k * step)
        out.append(int(x.quantize(decimal.Decimal(1), rounding=decimal.ROUND_HALF_UP)))
    return out


def test_subsample_long_clip_oracle():
    idx = subsample_indices(300, 128)
    assert idx == oracle_subsample(300, 128)
    assert len(idx) == 128
    assert idx[0] == 0 and idx[-1] == 299
    assert all(b > a for a, b in zip(idx, idx[1:]))


@pytest.mark.parametrize("n,m", [(5, 10), (10, 10), (11, 10), (64, 7), (1000, 64), (2, 1)])
def test_subsample_matches_oracle(n, m):
    assert subsample_indices(n, m) == oracle_subsample(n, m)


def test_flatten_frames_joint_major():
    frames = np.arange(66, dtype=np.float64).reshape(1, 22, 3)
    clip = MotionClip(frames=frames, fps=20.0, coord=Coord.WORLD)
    flat = flatten_frames(clip, 8)
    assert flat.shape == (1, 66)
    assert list(flat[0][:6]) == [0, 1, 2, 3, 4, 5]  # j0 x,y,z then j1 x,y,z


def test_flatten_frames_rejects_invalid():
    clip = MotionClip(frames=[[[0.0] * 3] * 21], fps=20.0, coord=Coord.WORLD)
    with pytest.raises(ValueError):
        flatten_frames(clip, 8)


# ── forward_loss ─────────────────────────────────────────────────────


@pytest.mark.parametrize("arch", ARCHS)
def test_uniform_logits_loss_is_log_vocab(arch):
    cfg = small_config(arch=arch, vocab_size=16)
    model = init_params(cfg, seed=0)
    with torch.no_grad():
        model.out_proj.weight.zero_()
        model.out_proj.bias.zero_()
    model.eval()
    loss, logits = forward_loss(model, fixture_clip(), [BOS, 5, 6, 7, EOS])
    assert torch.equal(logits, torch.zeros_like(logits))
    assert float(loss.detach()) == pytest.approx(math.log(16), abs=1e-6)


def test_loss_is_permutation_sensitive():
    model = init_params(small_config(), seed=3)
    model.eval()
    clip = fixture_clip()
    base, _ = forward_loss(model, clip, [BOS, 5, 6, 7, 8, EOS])
    shuffled, _ = forward_loss(model, clip, [BOS, 7, 5, 8, 6, EOS])
    assert abs(float(base.detach()) - float(shuffled.detach())) > 1e-6


def test_forward_loss_preconditions():
    model = init_params(small_config(), seed=0)
    clip = fixture_clip()
    with pytest.raises(ValueError):
        forward_loss(model, clip, [5, 6, EOS])  # no BOS
    with pytest.raises(ValueError):
        forward_loss(model, clip, [BOS, 5, 6])  # no EOS
    with pytest.raises(ValueError):
        forward_loss(model, clip, [BOS] + [5] * 20 + [EOS])  # cap exceeded


@pytest.mark.parametrize("arch", ARCHS)
def test_pad_tail_leaves_loss_unchanged(arch):
    model = init_params(small_config(arch=arch), seed=2)
    model.eval()
    flat = flatten_frames(fixture_clip(), 32)
    ids = [BOS, 5, 6, 7, EOS]
    items = [(flat, ids)]
    frames, fv, dec_in, dec_valid, gold = _collate(items, torch.float32)
    from maaig.model import masked_cross_entropy

    loss_a = masked_cross_entropy(model(frames, fv, dec_in, dec_valid), gold)
    padded = [(flat, ids + [PAD] * 4)]
    frames, fv, dec_in, dec_valid, gold = _collate(padded, torch.float32)
    loss_b = masked_cross_entropy(model(frames, fv, dec_in, dec_valid), gold)
    assert abs(float(loss_a.detach()) - float(loss_b.detach())) < 1e-12


@pytest.mark.parametrize("arch", ARCHS)
def test_causality(arch):
    model = init_params(small_config(arch=arch), seed=4)
    model.eval()
    clip = fixture_clip()
    target = [BOS, 5, 6, 7, 8, 9, EOS]
    _, logits = forward_loss(model, clip, target)
    perturbed = list(target)
    t = 3
    perturbed[t] = 10
    _, logits_p = forward_loss(model, clip, perturbed)
    assert torch.equal(logits[:t], logits_p[:t])
    assert not torch.equal(logits[t:], logits_p[t:])


@pytest.mark.parametrize("arch", ARCHS)
def test_pad_frames_never_influence_outputs(arch):
    # Same batch twice, differing only in the values stored at padded frame
    # slots; every logit must be bit-identical.
    model = init_params(small_config(arch=arch), seed=5)
    model.eval()
    flat = flatten_frames(fixture_clip(), 32)
    s = flat.shape[0]
    ids = [BOS, 5, 6, EOS]

    def run(pad_value):
        frames = torch.full((1, s + 4, 66), pad_value, dtype=torch.float32)
        frames[0, :s] = torch.as_tensor(flat, dtype=torch.float32)
        valid = torch.zeros(1, s + 4, dtype=torch.bool)
        valid[0, :s] = True
        dec = torch.tensor([ids[:-1]])
        return model(frames, valid, dec, dec != PAD)

    assert torch.equal(run(0.0), run(777.0))


# ── decoding ─────────────────────────────────────────────────────────


def test_greedy_cap_and_determinism():
    model = init_params(small_config(), seed=6)
    clip = fixture_clip()
    out = greedy_decode(model, clip, max_tokens=1)
    assert len(out) == 2 and out[0] == BOS
    assert greedy_decode(model, clip) == greedy_decode(model, clip)


def test_beam_one_equals_greedy_on_fixture_set():
    model = init_params(small_config(), seed=7)
    for ex in synth.gen_corpus("finetune", 20, seed=40):
        clip = world_to_local(ex.clip)
        assert beam_decode(model, clip, beam=1) == greedy_decode(model, clip)


def sequence_score(model, clip, ids):
    """Length-normalized log-probability under the same convention as beam."""
    from maaig.model import _clip_tensors

    model.eval()
    with torch.no_grad():
        frames, fv = _clip_tensors(model, clip)
        memory = model.encode(frames, fv)
        total = 0.0
        for i in range(1, len(ids)):
            dec = torch.tensor([ids[:i]])
            valid = torch.ones_like(dec, dtype=torch.bool)
            logits = model.decode(dec, valid, memory, fv)
            logprobs = F.log_softmax(logits[0, -1].double(), dim=-1)
            total += float(logprobs[ids[i]])
        return total / (len(ids) - 1)


def test_beam_search_never_scores_below_greedy():
    model = init_params(small_config(), seed=8)
    for ex in synth.gen_corpus("finetune", 5, seed=41):
        clip = world_to_local(ex.clip)
        greedy_score = sequence_score(model, clip, greedy_decode(model, clip))
        beam_ids = beam_decode(model, clip, beam=4)
        assert sequence_score(model, clip, beam_ids) >= greedy_score - 1e-12


def test_beam_exhaustive_matches_brute_force():
    cfg = small_config(vocab_size=5, max_tokens=3)
    model = init_params(cfg, seed=9)
    clip = fixture_clip()

    candidates = []
    for length in (1, 2, 3):
        for seq in itertools.product(range(5), repeat=length):
            if EOS in seq[:-1]:
                continue  # generation would have stopped earlier
            if seq[-1] != EOS and length != 3:
                continue  # unfinished sequences only survive at the cap
            candidates.append([BOS, *seq])
    best = max(
        candidates,
        key=lambda ids: (sequence_score(model, clip, ids), [-t for t in ids]),
    )
    got = beam_decode(model, clip, beam=125, max_tokens=3)
    assert sequence_score(model, clip, got) == pytest.approx(
        sequence_score(model, clip, best), abs=1e-12
    )
    assert got == best


def test_beam_rejects_bad_width():
    model = init_params(small_config(), seed=0)
    with pytest.raises(ValueError):
        beam_decode(model, fixture_clip(), beam=0)


# ── init and parameter counts ────────────────────────────────────────


def test_init_deterministic_and_norm_scales():
    a = init_params(small_config(), seed=11)
    b = init_params(small_config(), seed=11)
    for (name, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
        assert torch.equal(pa, pb), name
    c = init_params(small_config(), seed=12)
    assert any(
        not torch.equal(pa, pc)
        for (_, pa), (_, pc) in zip(a.named_parameters(), c.named_parameters())
    )
    for name, p in a.named_parameters():
        if p.dim() == 1 and name.endswith(".weight"):
            assert torch.equal(p, torch.ones_like(p)), name
        if name.endswith(".bias"):
            assert torch.equal(p, torch.zeros_like(p)), name


def closed_form_count(cfg: ModelConfig) -> int:
    d, f, V, H = cfg.d_model, cfg.d_ff, cfg.vocab_size, cfg.n_heads
    ff = d * f + f + f * d + d
    ln = 2 * d
    if cfg.arch == ARCH_TRANSFORMER:
        attn = 4 * (d * d + d)
        enc_layer = attn + ff + 2 * ln
        dec_layer = 2 * attn + ff + 3 * ln
        extra = 0
    else:
        attn = 4 * d * d
        enc_layer = attn + ff + 2 * ln
        dec_layer = 2 * attn + ff + 3 * ln
        extra = 2 * ln + 2 * (32 * H)  # final stack norms + relative bias tables
    return (
        (66 * d + d)
        + V * d
        + (d * V + V)
        + cfg.n_layers_enc * enc_layer
        + cfg.n_layers_dec * dec_layer
        + extra
    )


@pytest.mark.parametrize("arch", ARCHS)
def test_parameter_count_closed_form(arch):
    cfg = ModelConfig(
        vocab_size=64, d_model=64, n_layers_enc=2, n_layers_dec=2,
        n_heads=4, d_ff=128, arch=arch,
    )
    model = MotionToText(cfg)
    assert model.num_parameters() == closed_form_count(cfg)


# ── composition with coordinate conversion ───────────────────────────


@pytest.mark.parametrize("arch", ARCHS)
def test_logits_invariant_to_world_translation(arch):
    # Grid-valued world clip: translation cancels exactly under root
    # subtraction, so local inputs and hence logits match bit for bit.
    model = init_params(small_config(arch=arch), seed=13)
    model.eval()
    clip = grid_clip(8)
    moved = translate(clip, (7.0, -2.0, 4.0))
    target = [BOS, 5, 6, 7, EOS]
    _, logits_a = forward_loss(model, world_to_local(clip), target)
    _, logits_b = forward_loss(model, world_to_local(moved), target)
    assert torch.equal(logits_a, logits_b)


# ── checkpoints ──────────────────────────────────────────────────────


def test_checkpoint_round_trip(tmp_path):
    model = init_params(small_config(), seed=14)
    model.eval()
    clip = fixture_clip()
    target = [BOS, 5, 6, EOS]
    _, before = forward_loss(model, clip, target)
    path = tmp_path / "model.pt"
    save_checkpoint(model, path, seed_lineage=[14], vocab_words=("a", "b"))
    loaded, meta = load_checkpoint(path)
    _, after = forward_loss(loaded, clip, target)
    assert torch.equal(before, after)
    assert meta["seed_lineage"] == [14]
    assert meta["vocab_words"] == ["a", "b"]
    assert meta["config"]["d_model"] == 16


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.pt"
    torch.save({"something": 1}, path)
    with pytest.raises(ValueError):
        load_checkpoint(path)
