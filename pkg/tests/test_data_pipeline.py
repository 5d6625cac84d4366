import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vsrgan.data_pipeline import (
    ClipWindow,
    center_crop_to_multiple,
    extract_frames,
    ingest_clip,
    load_split,
    make_pair,
    prepare_corpus,
    save_split,
    split_dataset,
    window_clip,
)
from vsrgan.errors import BadIndex, BadRatios, DimensionMismatch, EmptyCorpus, UnreadableSource
from vsrgan.frames import Clip, Frame, save_frame
from vsrgan.optical_flow import FlowMap

from .conftest import random_frame
from .oracles import center_crop_oracle


def _zero_flows(n, h, w):
    return [FlowMap.zero(h, w) for _ in range(n)]


def test_ingest_directory(tmp_path):
    rng = np.random.default_rng(0)
    d = tmp_path / "clip"
    for i in range(7):
        save_frame(random_frame(rng, 8, 6), d / f"{i:06d}.png")
    clip = ingest_clip(d)
    assert len(clip) == 7
    assert (clip[0].height, clip[0].width, clip[0].channels) == (8, 6, 3)


def test_ingest_empty_directory(tmp_path):
    d = tmp_path / "empty"
    d.mkdir()
    with pytest.raises(UnreadableSource):
        ingest_clip(d)


def test_ingest_single_image(tmp_path):
    rng = np.random.default_rng(1)
    d = tmp_path / "one"
    save_frame(random_frame(rng, 5, 5), d / "000000.png")
    assert len(ingest_clip(d)) == 1


def test_ingest_missing_source(tmp_path):
    with pytest.raises(UnreadableSource):
        ingest_clip(tmp_path / "nope")


def test_extract_frames_writes_padded_indices(tmp_path):
    rng = np.random.default_rng(2)
    src = tmp_path / "src"
    for i in range(3):
        save_frame(random_frame(rng, 4, 4), src / f"{i}.png")
    out = tmp_path / "out"
    clip = extract_frames(src, out)
    assert len(clip) == 3
    assert sorted(p.name for p in out.iterdir()) == ["000000.png", "000001.png", "000002.png"]


def test_make_pair_exact_division():
    rng = np.random.default_rng(3)
    lr, hr = make_pair(random_frame(rng, 128, 128), 4)
    assert (lr.height, lr.width) == (32, 32)
    assert (hr.height, hr.width) == (128, 128)


def test_make_pair_crops_to_multiple():
    rng = np.random.default_rng(4)
    src = random_frame(rng, 130, 129)
    lr, hr = make_pair(src, 4)
    assert (hr.height, hr.width) == (128, 128)
    assert (lr.height, lr.width) == (32, 32)
    np.testing.assert_array_equal(hr.pixels, center_crop_oracle(src.pixels, 4))


def test_make_pair_constant_value():
    lr, hr = make_pair(Frame(np.full((16, 16, 3), 0.5)), 4)
    np.testing.assert_allclose(lr.pixels, 0.5, atol=1e-6)


def test_make_pair_deterministic():
    rng = np.random.default_rng(5)
    src = random_frame(rng, 64, 48)
    a = make_pair(src, 4)
    b = make_pair(src, 4)
    assert np.array_equal(a[0].pixels, b[0].pixels)
    assert np.array_equal(a[1].pixels, b[1].pixels)


def test_center_crop_matches_oracle():
    rng = np.random.default_rng(6)
    f = random_frame(rng, 37, 22)
    out = center_crop_to_multiple(f, 4)
    np.testing.assert_array_equal(out.pixels, center_crop_oracle(f.pixels, 4))


def test_split_sizes_and_determinism():
    ids = [f"c{i}" for i in range(10)]
    s1 = split_dataset(ids, (0.8, 0.1, 0.1), seed=42)
    s2 = split_dataset(ids, (0.8, 0.1, 0.1), seed=42)
    assert (len(s1.train), len(s1.val), len(s1.test)) == (8, 1, 1)
    assert s1.train == s2.train and s1.val == s2.val and s1.test == s2.test


def test_split_single_clip_goes_to_train():
    s = split_dataset(["only"], (0.8, 0.1, 0.1), seed=0)
    assert (s.train, s.val, s.test) == (["only"], [], [])


def test_split_bad_ratios():
    with pytest.raises(BadRatios):
        split_dataset(["a"], (0.5, 0.1, 0.1), seed=0)


def test_split_empty_corpus():
    with pytest.raises(EmptyCorpus):
        split_dataset([], (0.8, 0.1, 0.1), seed=0)


@given(
    st.integers(1, 24),
    st.integers(0, 2**31 - 1),
    st.sampled_from([(0.8, 0.1, 0.1), (0.5, 0.25, 0.25), (1.0, 0.0, 0.0)]),
)
@settings(max_examples=60, deadline=None)
def test_split_partition_property(n, seed, ratios):
    ids = [f"c{i}" for i in range(n)]
    s = split_dataset(ids, ratios, seed)
    merged = s.train + s.val + s.test
    assert sorted(merged) == sorted(ids)
    assert len(set(merged)) == n
    # floor allocations for val/test, remainder to train
    assert len(s.val) == int(n * ratios[1])
    assert len(s.test) == int(n * ratios[2])


def test_split_manifest_roundtrip(tmp_path):
    s = split_dataset([f"c{i}" for i in range(7)], (0.8, 0.1, 0.1), seed=9)
    path = tmp_path / "split.json"
    save_split(s, path)
    back = load_split(path)
    assert back == s
    raw = json.loads(path.read_text())
    assert set(raw) == {"seed", "train", "val", "test"}


def _clip(n_frames: int, h: int = 6, w: int = 6) -> Clip:
    rng = np.random.default_rng(7)
    return Clip([random_frame(rng, h, w) for _ in range(n_frames)], clip_id="c")


def test_window_full_history():
    clip = _clip(7)
    win = window_clip(clip, 6, 6, _zero_flows(6, 6, 6))
    assert win.n == 6
    for k, frame in enumerate(win.neighbors_lr, start=1):
        assert np.array_equal(frame.pixels, clip[6 - k].pixels)


def test_window_edge_padding_repeats_first_frame():
    clip = _clip(7)
    win = window_clip(clip, 0, 6, _zero_flows(6, 6, 6))
    for frame in win.neighbors_lr:
        assert np.array_equal(frame.pixels, clip[0].pixels)


def test_window_partial_history():
    clip = _clip(7)
    win = window_clip(clip, 3, 2, _zero_flows(2, 6, 6))
    assert np.array_equal(win.neighbors_lr[0].pixels, clip[2].pixels)
    assert np.array_equal(win.neighbors_lr[1].pixels, clip[1].pixels)


def test_window_bad_index():
    clip = _clip(3)
    with pytest.raises(BadIndex):
        window_clip(clip, 3, 1, _zero_flows(1, 6, 6))
    with pytest.raises(BadIndex):
        window_clip(clip, -1, 1, _zero_flows(1, 6, 6))


def test_window_invariants_property():
    clip = _clip(5)
    for t in range(5):
        for n in (1, 2, 6):
            win = window_clip(clip, t, n, _zero_flows(n, 6, 6))
            assert len(win.neighbors_lr) == len(win.flows) == win.n == n
            for f in win.neighbors_lr:
                assert (f.height, f.width) == (6, 6)


def test_window_rejects_misaligned_flows():
    clip = _clip(4)
    with pytest.raises(DimensionMismatch):
        window_clip(clip, 2, 2, _zero_flows(1, 6, 6))
    with pytest.raises(DimensionMismatch):
        ClipWindow(
            target_lr=clip[0],
            neighbors_lr=[clip[1]],
            flows=[FlowMap.zero(3, 3)],
        )


def test_window_hr_scale_relation():
    rng = np.random.default_rng(8)
    lr = Clip([random_frame(rng, 4, 4) for _ in range(2)], clip_id="lr")
    hr = Clip([random_frame(rng, 16, 16) for _ in range(2)], clip_id="hr")
    win = window_clip(lr, 1, 1, _zero_flows(1, 4, 4), hr)
    assert win.target_hr.height == 4 * win.target_lr.height


def test_prepare_corpus_layout_and_idempotence(toy_root, tmp_path):
    out = tmp_path / "prepared"
    split = prepare_corpus(toy_root, out, n_neighbors=2, ratios=(0.5, 0.25, 0.25), seed=0)
    assert sorted(split.all_ids()) == [f"clip_{i:02d}" for i in range(4)]
    assert (out / "split.json").exists()
    for kind in ("lr", "hr"):
        assert (out / kind / split.train[0] / "000000.png").exists()
    flow_files = sorted(p.relative_to(out) for p in (out / "flows").rglob("*.flo1"))
    stamp = {p: (out / p).read_bytes() for p in flow_files}

    split2 = prepare_corpus(toy_root, out, n_neighbors=2, ratios=(0.5, 0.25, 0.25), seed=0)
    assert split2 == split
    flow_files2 = sorted(p.relative_to(out) for p in (out / "flows").rglob("*.flo1"))
    assert flow_files2 == flow_files
    for p in flow_files:
        assert (out / p).read_bytes() == stamp[p]


def test_prepared_corpus_window_matches_manual(prepared_corpus):
    split = prepared_corpus.split
    cid = split.train[0]
    win = prepared_corpus.window(cid, 2, 2)
    assert win.n == 2
    assert win.clip_id == cid and win.t == 2
    assert win.target_hr is not None
    assert win.target_hr.height == 4 * win.target_lr.height
