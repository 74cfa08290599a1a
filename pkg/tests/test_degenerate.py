"""Single-frame clips are valid everywhere downstream."""

import numpy as np

from maaig import skeleton
from maaig.model import embed_motion, flatten_frames, greedy_decode, init_params
from maaig.skeleton import Coord, MotionClip, clip_by_time, validate, world_to_local
from maaig.tokens import BOS, EOS
from test_model import small_config


def one_frame_clip(coord=Coord.WORLD):
    rng = np.random.default_rng(8)
    return MotionClip(frames=rng.standard_normal((1, 22, 3)), fps=20.0, coord=coord)


def test_one_frame_clip_validates_and_converts():
    clip = one_frame_clip()
    assert validate(clip).ok
    local = world_to_local(clip)
    assert validate(local).ok
    assert local.n_frames == 1


def test_one_frame_clip_roundtrips(tmp_path):
    clip = one_frame_clip()
    skeleton.save_clip(clip, tmp_path / "one.json")
    loaded = skeleton.load_clip(tmp_path / "one.json")
    assert np.array_equal(loaded.frames, clip.frames)


def test_one_frame_clip_feeds_the_model():
    clip = world_to_local(one_frame_clip())
    model = init_params(small_config(), seed=0)
    assert flatten_frames(clip, 32).shape == (1, 66)
    assert embed_motion(model, clip).shape == (1, 16)
    out = greedy_decode(model, clip, max_tokens=4)
    assert out[0] == BOS and len(out) <= 6


def test_clip_by_time_can_yield_one_frame():
    clip = MotionClip(frames=np.zeros((40, 22, 3)), fps=20.0, coord=Coord.WORLD)
    sub = clip_by_time(clip, 1.0, 1.04)  # [20, 21): exactly one frame
    assert sub.n_frames == 1


def test_forward_loss_on_one_frame_clip():
    from maaig.model import forward_loss

    clip = world_to_local(one_frame_clip())
    model = init_params(small_config(), seed=1)
    model.eval()
    loss, logits = forward_loss(model, clip, [BOS, 5, EOS])
    assert float(loss.detach()) > 0
    assert logits.shape == (2, 16)
