import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vsrgan.errors import BadIndex, DimensionMismatch, IdenticalInputs, TooSmall
from vsrgan.frames import Frame
from vsrgan.metrics import FrameScore, MetricReport, psnr, score_pair, ssim, temporal_profile

from .conftest import random_frame
from .oracles import psnr_oracle, sequence_oracle, ssim_oracle


def test_psnr_uniform_offsets():
    base = Frame(np.full((16, 16, 3), 0.25))
    for step, want in ((1, 48.13), (16, 24.05)):
        other = Frame(np.full((16, 16, 3), 0.25 + step / 255.0))
        assert psnr(base, other) == pytest.approx(want, abs=0.01)


def test_psnr_identical_raises():
    rng = np.random.default_rng(0)
    f = random_frame(rng, 8, 8)
    with pytest.raises(IdenticalInputs):
        psnr(f, Frame(f.pixels.copy()))


def test_psnr_dimension_mismatch():
    rng = np.random.default_rng(1)
    with pytest.raises(DimensionMismatch):
        psnr(random_frame(rng, 8, 8), random_frame(rng, 8, 9))


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_psnr_symmetric_and_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    a, b = random_frame(rng, 6, 6), random_frame(rng, 6, 6)
    fwd = psnr(a, b)
    assert fwd == psnr(b, a)
    assert fwd == pytest.approx(psnr_oracle(a.pixels, b.pixels), abs=1e-9)


def test_psnr_monotone_in_noise_amplitude():
    rng = np.random.default_rng(2)
    base = Frame(np.clip(rng.random((12, 12, 3)), 0.2, 0.8))
    noise = rng.standard_normal((12, 12, 3))
    noise /= np.abs(noise).max()
    values = []
    for amp in (1, 2, 4, 8):
        noisy = Frame(np.clip(base.pixels + amp / 255.0 * noise, 0.0, 1.0))
        values.append(psnr(base, noisy))
    assert values == sorted(values, reverse=True)
    assert len(set(values)) == 4


def test_ssim_self_similarity_exact():
    rng = np.random.default_rng(3)
    f = random_frame(rng, 16, 16)
    assert ssim(f, Frame(f.pixels.copy())) == pytest.approx(1.0, abs=1e-9)


def test_ssim_constant_pair_matches_oracle():
    a = Frame(np.full((12, 12, 3), 0.2))
    b = Frame(np.full((12, 12, 3), 0.8))
    assert ssim(a, b) == pytest.approx(ssim_oracle(a.pixels, b.pixels), abs=1e-9)


def test_ssim_inverted_pair_matches_oracle():
    rng = np.random.default_rng(4)
    a = random_frame(rng, 13, 12)
    b = Frame(1.0 - a.pixels)
    assert ssim(a, b) == pytest.approx(ssim_oracle(a.pixels, b.pixels), abs=1e-9)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=10, deadline=None)
def test_ssim_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = random_frame(rng, 12, 12), random_frame(rng, 12, 12)
    v = ssim(a, b)
    assert v == pytest.approx(ssim(b, a), abs=1e-9)
    assert -1.0 <= v <= 1.0


def test_ssim_too_small():
    rng = np.random.default_rng(5)
    with pytest.raises(TooSmall):
        ssim(random_frame(rng, 10, 16), random_frame(rng, 10, 16))


def test_score_pair_perfect_match():
    rng = np.random.default_rng(6)
    f = random_frame(rng, 12, 12)
    score = score_pair(f, Frame(f.pixels.copy()))
    assert score.perfect and score.psnr_db is None and score.ssim == 1.0


def test_metric_report_means_match_recomputation():
    scores = [FrameScore(30.0, 0.9), FrameScore(40.0, 0.8), FrameScore(None, 1.0)]
    report = MetricReport.from_scores("clip", scores)
    assert report.mean_psnr_db == pytest.approx(sequence_oracle([30.0, 40.0]), abs=1e-9)
    assert report.mean_ssim == pytest.approx(sequence_oracle([0.9, 0.8, 1.0]), abs=1e-9)
    d = report.to_dict()
    assert d["clip_id"] == "clip" and len(d["per_frame"]) == 3


def test_metric_report_all_perfect():
    report = MetricReport.from_scores("clip", [FrameScore(None, 1.0)] * 2)
    assert report.mean_psnr_db is None and report.mean_ssim == 1.0


def test_temporal_profile_stacks_rows():
    rng = np.random.default_rng(7)
    frames = [random_frame(rng, 8, 10) for _ in range(7)]
    profile = temporal_profile(frames, row=3)
    assert (profile.height, profile.width) == (7, 10)
    for t, f in enumerate(frames):
        np.testing.assert_array_equal(profile.pixels[t], f.pixels[3])


def test_temporal_profile_static_scene():
    rng = np.random.default_rng(8)
    f = random_frame(rng, 8, 8)
    profile = temporal_profile([f] * 5, row=2)
    for t in range(5):
        np.testing.assert_array_equal(profile.pixels[t], profile.pixels[0])


def test_temporal_profile_flags_anomalous_frame():
    rng = np.random.default_rng(9)
    f = random_frame(rng, 8, 8)
    frames = [f] * 5
    frames[2] = random_frame(rng, 8, 8)
    profile = temporal_profile(frames, row=4)
    mismatches = [t for t in range(5) if not np.array_equal(profile.pixels[t], f.pixels[4])]
    assert mismatches == [2]


def test_temporal_profile_bad_index():
    rng = np.random.default_rng(10)
    frames = [random_frame(rng, 8, 8)]
    with pytest.raises(BadIndex):
        temporal_profile(frames, row=8)
    with pytest.raises(BadIndex):
        temporal_profile(frames, row=-1)
    with pytest.raises(BadIndex):
        temporal_profile([], row=0)


def test_temporal_profile_mixed_sizes():
    rng = np.random.default_rng(11)
    with pytest.raises(DimensionMismatch):
        temporal_profile([random_frame(rng, 8, 8), random_frame(rng, 8, 9)], row=0)
