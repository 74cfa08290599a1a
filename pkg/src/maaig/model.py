"""Motion-conditioned encoder-decoder.

A linear layer projects each flattened 66-value skeleton frame (22 joints,
joint-major x,y,z) into the model width; a transformer encoder reads the
frame sequence and a transformer decoder emits instruction tokens. Two
architecture variants share every contract:

- "transformer": sinusoidal absolute positions, post-layer-norm residual
  blocks, biased attention projections.
- "t5": bucketed relative-position biases in self-attention, pre-layer-norm
  with a final stack norm, bias-free attention projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from . import skeleton
from .skeleton import MotionClip, round_half_away
from .tokens import PAD, BOS, EOS

INPUT_DIM = 66  # 22 joints * (x, y, z)

ARCH_TRANSFORMER = "transformer"
ARCH_T5 = "t5"

REL_POS_BUCKETS = 32
REL_POS_MAX_DISTANCE = 128


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    n_layers_enc: int = 2
    n_layers_dec: int = 2
    n_heads: int = 4
    d_ff: int = 128
    max_frames: int = 64
    max_tokens: int = 32
    dropout: float = 0.1
    arch: str = ARCH_T5

    def __post_init__(self) -> None:
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        for name in ("vocab_size", "d_model", "n_layers_enc", "n_layers_dec", "n_heads", "d_ff", "max_frames", "max_tokens"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.arch not in (ARCH_TRANSFORMER, ARCH_T5):
            raise ValueError(f"unknown arch {self.arch!r}")

    @classmethod
    def paper_scale(cls, vocab_size: int, arch: str = ARCH_T5) -> "ModelConfig":
        """Full-width preset (512-d embedding) kept for reference runs."""
        return cls(
            vocab_size=vocab_size,
            d_model=512,
            n_layers_enc=6,
            n_layers_dec=6,
            n_heads=8,
            d_ff=2048,
            max_frames=512,
            max_tokens=64,
            arch=arch,
        )


def subsample_indices(n: int, max_frames: int) -> list[int]:
    """Uniformly spaced frame indices including first and last."""
    if n <= max_frames:
        return list(range(n))
    if max_frames == 1:
        return [0]
    step = (n - 1) / (max_frames - 1)
    return [round_half_away(k * step) for k in range(max_frames)]


def flatten_frames(clip: MotionClip, max_frames: int) -> np.ndarray:
    """(n, 22, 3) -> (min(n, max_frames), 66), joint-major then x,y,z."""
    result = skeleton.validate(clip)
    if not result.ok:
        raise ValueError(f"invalid clip: {result.violations[0]}")
    idx = subsample_indices(clip.n_frames, max_frames)
    return clip.frames[idx].reshape(len(idx), INPUT_DIM)


def _sinusoid_table(length: int, d_model: int) -> torch.Tensor:
    position = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, d_model, 2, dtype=torch.float64) * (-math.log(10000.0) / d_model)
    )
    table = torch.zeros(length, d_model, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table.to(torch.get_default_dtype())


def _relative_position_bucket(
    relative_position: torch.Tensor,
    bidirectional: bool,
    num_buckets: int = REL_POS_BUCKETS,
    max_distance: int = REL_POS_MAX_DISTANCE,
) -> torch.Tensor:
    """Map signed key-minus-query offsets to bucket ids (log-spaced far away)."""
    ret = torch.zeros_like(relative_position)
    if bidirectional:
        num_buckets //= 2
        ret = ret + (relative_position > 0).long() * num_buckets
        n = relative_position.abs()
    else:
        n = (-relative_position).clamp(min=0)
    max_exact = num_buckets // 2
    is_small = n < max_exact
    large = max_exact + (
        torch.log(n.clamp(min=1).float() / max_exact)
        / math.log(max_distance / max_exact)
        * (num_buckets - max_exact)
    ).long()
    large = torch.minimum(large, torch.full_like(large, num_buckets - 1))
    return ret + torch.where(is_small, n, large)


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int, dropout: float, bias: bool):
        super().__init__()
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.wq = nn.Linear(d_model, d_model, bias=bias)
        self.wk = nn.Linear(d_model, d_model, bias=bias)
        self.wv = nn.Linear(d_model, d_model, bias=bias)
        self.wo = nn.Linear(d_model, d_model, bias=bias)
        self.dropout = nn.Dropout(dropout)

    def forward(self, q, k, v, mask=None, pos_bias=None):
        # q: (B, Lq, D); k, v: (B, Lk, D); mask additive (B|1, 1, Lq|1, Lk);
        # pos_bias (1, H, Lq, Lk).
        B, Lq, _ = q.shape
        Lk = k.shape[1]
        qh = self.wq(q).view(B, Lq, self.n_heads, self.d_head).transpose(1, 2)
        kh = self.wk(k).view(B, Lk, self.n_heads, self.d_head).transpose(1, 2)
        vh = self.wv(v).view(B, Lk, self.n_heads, self.d_head).transpose(1, 2)
        scores = qh @ kh.transpose(-2, -1) / math.sqrt(self.d_head)
        if pos_bias is not None:
            scores = scores + pos_bias
        if mask is not None:
            scores = scores + mask
        weights = self.dropout(torch.softmax(scores, dim=-1))
        out = (weights @ vh).transpose(1, 2).reshape(B, Lq, self.n_heads * self.d_head)
        return self.wo(out)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, d_ff: int, dropout: float):
        super().__init__()
        self.lin1 = nn.Linear(d_model, d_ff)
        self.lin2 = nn.Linear(d_ff, d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x):
        return self.lin2(self.dropout(F.relu(self.lin1(x))))


class _Sublayer(nn.Module):
    """Residual wrapper switching between post-norm and pre-norm placement."""

    def __init__(self, d_model: int, dropout: float, pre_norm: bool):
        super().__init__()
        self.norm = nn.LayerNorm(d_model)
        self.dropout = nn.Dropout(dropout)
        self.pre_norm = pre_norm

    def forward(self, x, fn):
        if self.pre_norm:
            return x + self.dropout(fn(self.norm(x)))
        return self.norm(x + self.dropout(fn(x)))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        pre = cfg.arch == ARCH_T5
        bias = cfg.arch == ARCH_TRANSFORMER
        self.attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, cfg.dropout, bias)
        self.ff = FeedForward(cfg.d_model, cfg.d_ff, cfg.dropout)
        self.sub_attn = _Sublayer(cfg.d_model, cfg.dropout, pre)
        self.sub_ff = _Sublayer(cfg.d_model, cfg.dropout, pre)

    def forward(self, x, mask, pos_bias):
        x = self.sub_attn(x, lambda h: self.attn(h, h, h, mask, pos_bias))
        return self.sub_ff(x, self.ff)


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        pre = cfg.arch == ARCH_T5
        bias = cfg.arch == ARCH_TRANSFORMER
        self.self_attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, cfg.dropout, bias)
        self.cross_attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, cfg.dropout, bias)
        self.ff = FeedForward(cfg.d_model, cfg.d_ff, cfg.dropout)
        self.sub_self = _Sublayer(cfg.d_model, cfg.dropout, pre)
        self.sub_cross = _Sublayer(cfg.d_model, cfg.dropout, pre)
        self.sub_ff = _Sublayer(cfg.d_model, cfg.dropout, pre)

    def forward(self, x, self_mask, self_bias, memory, memory_mask):
        x = self.sub_self(x, lambda h: self.self_attn(h, h, h, self_mask, self_bias))
        x = self.sub_cross(x, lambda h: self.cross_attn(h, memory, memory, memory_mask))
        return self.sub_ff(x, self.ff)


class MotionToText(nn.Module):
    """Frame projection + encoder over motion + decoder over tokens."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        cfg = config
        self.frame_proj = nn.Linear(INPUT_DIM, cfg.d_model)
        self.tok_emb = nn.Embedding(cfg.vocab_size, cfg.d_model)
        self.out_proj = nn.Linear(cfg.d_model, cfg.vocab_size)
        self.drop = nn.Dropout(cfg.dropout)
        self.enc_layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.n_layers_enc))
        self.dec_layers = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.n_layers_dec))
        if cfg.arch == ARCH_T5:
            self.enc_rel_bias = nn.Embedding(REL_POS_BUCKETS, cfg.n_heads)
            self.dec_rel_bias = nn.Embedding(REL_POS_BUCKETS, cfg.n_heads)
            self.enc_final_norm = nn.LayerNorm(cfg.d_model)
            self.dec_final_norm = nn.LayerNorm(cfg.d_model)
        else:
            table = _sinusoid_table(max(cfg.max_frames, cfg.max_tokens + 2), cfg.d_model)
            self.register_buffer("pos_table", table)

    # ── masks and biases ─────────────────────────────────────────

    def _pad_mask(self, valid: torch.Tensor) -> torch.Tensor:
        # (B, L) bool -> additive (B, 1, 1, L)
        mask = torch.zeros(valid.shape, dtype=self.frame_proj.weight.dtype, device=valid.device)
        mask = mask.masked_fill(~valid, float("-inf"))
        return mask[:, None, None, :]

    def _rel_bias(self, table: nn.Embedding, lq: int, lk: int, bidirectional: bool) -> torch.Tensor:
        device = table.weight.device
        rel = torch.arange(lk, device=device)[None, :] - torch.arange(lq, device=device)[:, None]
        buckets = _relative_position_bucket(rel, bidirectional=bidirectional)
        return table(buckets).permute(2, 0, 1).unsqueeze(0)  # (1, H, Lq, Lk)

    # ── forward paths ────────────────────────────────────────────

    def encode(self, frames: torch.Tensor, frame_valid: torch.Tensor) -> torch.Tensor:
        cfg = self.config
        x = self.frame_proj(frames)
        pos_bias = None
        if cfg.arch == ARCH_T5:
            pos_bias = self._rel_bias(self.enc_rel_bias, x.shape[1], x.shape[1], True)
        else:
            x = x + self.pos_table[: x.shape[1]]
        x = self.drop(x)
        mask = self._pad_mask(frame_valid)
        for layer in self.enc_layers:
            x = layer(x, mask, pos_bias)
        if cfg.arch == ARCH_T5:
            x = self.enc_final_norm(x)
        return x

    def decode(
        self,
        tokens: torch.Tensor,
        token_valid: torch.Tensor,
        memory: torch.Tensor,
        memory_valid: torch.Tensor,
    ) -> torch.Tensor:
        cfg = self.config
        L = tokens.shape[1]
        x = self.tok_emb(tokens) * math.sqrt(cfg.d_model)
        self_bias = None
        if cfg.arch == ARCH_T5:
            self_bias = self._rel_bias(self.dec_rel_bias, L, L, False)
        else:
            x = x + self.pos_table[:L]
        x = self.drop(x)

        causal = torch.full((L, L), float("-inf"), dtype=x.dtype, device=x.device).triu(1)
        self_mask = causal[None, None] + self._pad_mask(token_valid)
        memory_mask = self._pad_mask(memory_valid)
        for layer in self.dec_layers:
            x = layer(x, self_mask, self_bias, memory, memory_mask)
        if cfg.arch == ARCH_T5:
            x = self.dec_final_norm(x)
        return self.out_proj(x)

    def forward(
        self,
        frames: torch.Tensor,
        frame_valid: torch.Tensor,
        dec_tokens: torch.Tensor,
        dec_valid: torch.Tensor,
    ) -> torch.Tensor:
        memory = self.encode(frames, frame_valid)
        return self.decode(dec_tokens, dec_valid, memory, frame_valid)

    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())


def init_params(config: ModelConfig, seed: int) -> MotionToText:
    """Seeded deterministic init: 2D+ weights ~ N(0, 1/fan_in) with fan_in the
    trailing dimension, norm scales 1, biases and relative-bias tables 0."""
    model = MotionToText(config)
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, p in model.named_parameters():
            if "rel_bias" in name:
                p.zero_()
            elif p.dim() >= 2:
                p.normal_(0.0, 1.0 / math.sqrt(p.shape[-1]), generator=g)
            elif name.endswith(".weight"):
                p.fill_(1.0)  # LayerNorm scales
            else:
                p.zero_()
    return model


# ── single-clip operations ───────────────────────────────────────────


def _clip_tensors(model: MotionToText, clip: MotionClip) -> tuple[torch.Tensor, torch.Tensor]:
    flat = flatten_frames(clip, model.config.max_frames)
    dtype = model.frame_proj.weight.dtype
    frames = torch.as_tensor(flat, dtype=dtype).unsqueeze(0)
    valid = torch.ones(1, frames.shape[1], dtype=torch.bool)
    return frames, valid


def embed_motion(model: MotionToText, clip: MotionClip) -> torch.Tensor:
    """Affine frame embedding only: (min(n, max_frames), d_model)."""
    frames, _ = _clip_tensors(model, clip)
    with torch.no_grad():
        return model.frame_proj(frames)[0]


def forward_loss(
    model: MotionToText, clip: MotionClip, target: list[int]
) -> tuple[torch.Tensor, torch.Tensor]:
    """Teacher-forced loss for one (clip, token sequence) pair.

    target must start with BOS and end with EOS; loss is the mean token
    cross-entropy over non-PAD target positions. Returns (loss, logits) with
    logits[i] predicting target[i + 1].
    """
    if len(target) < 2 or target[0] != BOS or target[-1] != EOS:
        raise ValueError("target must begin with BOS and end with EOS")
    if len(target) - 1 > model.config.max_tokens:
        raise ValueError(
            f"target of {len(target)} tokens exceeds max_tokens={model.config.max_tokens}"
        )
    frames, frame_valid = _clip_tensors(model, clip)
    tokens = torch.tensor([target], dtype=torch.long)
    dec_in = tokens[:, :-1]
    gold = tokens[:, 1:]
    logits = model(frames, frame_valid, dec_in, dec_in != PAD)
    loss = masked_cross_entropy(logits, gold)
    return loss, logits[0]


def masked_cross_entropy(logits: torch.Tensor, gold: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy over positions where gold != PAD."""
    flat = logits.reshape(-1, logits.shape[-1])
    labels = gold.reshape(-1)
    keep = labels != PAD
    ce = F.cross_entropy(flat[keep], labels[keep], reduction="mean")
    return ce


def greedy_decode(
    model: MotionToText, clip: MotionClip, max_tokens: int | None = None
) -> list[int]:
    """From BOS, repeatedly append the argmax token (ties -> lowest id) until
    EOS or max_tokens generated tokens."""
    max_tokens = model.config.max_tokens if max_tokens is None else max_tokens
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            frames, frame_valid = _clip_tensors(model, clip)
            memory = model.encode(frames, frame_valid)
            ids = [BOS]
            for _ in range(max_tokens):
                dec = torch.tensor([ids], dtype=torch.long)
                valid = torch.ones_like(dec, dtype=torch.bool)
                logits = model.decode(dec, valid, memory, frame_valid)
                ids.append(int(torch.argmax(logits[0, -1])))
                if ids[-1] == EOS:
                    break
            return ids
    finally:
        model.train(was_training)


def beam_decode(
    model: MotionToText, clip: MotionClip, beam: int, max_tokens: int | None = None
) -> list[int]:
    """Beam search under length-normalized log-probability.

    Hypotheses are ranked in-flight by cumulative log-probability and the
    final pick maximizes total_logp / generated_length; beam=1 reproduces
    greedy_decode exactly (shared tie-breaking toward lower token ids).
    """
    if beam < 1:
        raise ValueError(f"beam must be >= 1, got {beam}")
    max_tokens = model.config.max_tokens if max_tokens is None else max_tokens
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            frames, frame_valid = _clip_tensors(model, clip)
            memory = model.encode(frames, frame_valid)
            actives: list[tuple[list[int], float]] = [([BOS], 0.0)]
            finished: list[tuple[list[int], float]] = []
            for _ in range(max_tokens):
                dec = torch.tensor([ids for ids, _ in actives], dtype=torch.long)
                valid = torch.ones_like(dec, dtype=torch.bool)
                mem = memory.expand(len(actives), -1, -1)
                mem_valid = frame_valid.expand(len(actives), -1)
                logits = model.decode(dec, valid, mem, mem_valid)
                logprobs = F.log_softmax(logits[:, -1, :].double(), dim=-1)
                cands = [
                    (ids + [tok], lp + float(logprobs[i, tok]))
                    for i, (ids, lp) in enumerate(actives)
                    for tok in range(model.config.vocab_size)
                ]
                cands.sort(key=lambda c: (-c[1], c[0]))
                actives = []
                for ids, lp in cands[:beam]:
                    (finished if ids[-1] == EOS else actives).append((ids, lp))
                if not actives:
                    break
            pool = finished + actives
            best = max(pool, key=lambda c: (c[1] / (len(c[0]) - 1), [-t for t in c[0]]))
            return best[0]
    finally:
        model.train(was_training)


def beam_score(ids: list[int], total_logp: float) -> float:
    """Length-normalized score used for final beam selection."""
    return total_logp / (len(ids) - 1)


# ── checkpoints ──────────────────────────────────────────────────────


def save_checkpoint(
    model: MotionToText,
    path: str | Path,
    seed_lineage: list[int],
    vocab_words: tuple[str, ...] | list[str],
    extra: dict | None = None,
) -> None:
    payload = {
        "format": "maaig.checkpoint",
        "version": 1,
        "config": asdict(model.config),
        "seed_lineage": list(seed_lineage),
        "vocab_words": list(vocab_words),
        "state": model.state_dict(),
    }
    if extra:
        payload["extra"] = extra
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path: str | Path) -> tuple[MotionToText, dict]:
    payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    if payload.get("format") != "maaig.checkpoint":
        raise ValueError(f"{path} is not a model checkpoint")
    model = MotionToText(ModelConfig(**payload["config"]))
    model.load_state_dict(payload["state"])
    model.eval()
    meta = {k: v for k, v in payload.items() if k != "state"}
    return model, meta
