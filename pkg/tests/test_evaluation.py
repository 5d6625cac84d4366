import json

import numpy as np
import pytest

from vsrgan.data_pipeline import DatasetSplit
from vsrgan.discriminator import DiscriminatorConfig
from vsrgan.evaluation import (
    LATTICE,
    BicubicBaseline,
    FrameDirectoryModel,
    GeneratorModel,
    GroundTruthOracle,
    ablation_report,
    evaluate_clip,
    pick_eval_clip,
    quantize_frame,
)
from vsrgan.frames import save_frame
from vsrgan.generator import GeneratorConfig
from vsrgan.trainer import AblationMode, TrainConfig, bundle_from_state, make_state

from .conftest import random_frame


def test_quantize_frame_is_8bit_grid():
    rng = np.random.default_rng(0)
    f = random_frame(rng, 6, 6)
    q = quantize_frame(f)
    np.testing.assert_array_equal(q.pixels, np.round(f.pixels * 255.0) / 255.0)
    assert np.array_equal(quantize_frame(q).pixels, q.pixels)


def _eval_setup(prepared_corpus):
    split = prepared_corpus.split
    cid = split.test[0] if split.test else split.train[0]
    return cid, prepared_corpus.lr_clip(cid), prepared_corpus.hr_clip(cid), prepared_corpus.flow_store


def test_ground_truth_oracle_is_perfect(prepared_corpus):
    cid, lr, hr, flows = _eval_setup(prepared_corpus)
    report = evaluate_clip(GroundTruthOracle(), lr, hr, flows, n=2)
    assert report.mean_psnr_db is None
    assert all(s.perfect for s in report.per_frame)
    assert report.mean_ssim == 1.0


def test_bicubic_baseline_report(prepared_corpus):
    cid, lr, hr, flows = _eval_setup(prepared_corpus)
    report = evaluate_clip(BicubicBaseline(scale=4), lr, hr, flows, n=2)
    assert len(report.per_frame) == len(lr)
    assert report.mean_psnr_db is not None and report.mean_psnr_db > 10.0
    assert 0.0 <= report.mean_ssim <= 1.0


def test_evaluate_clip_quantizes_model_output(prepared_corpus, tmp_path):
    cid, lr, hr, flows = _eval_setup(prepared_corpus)
    model = BicubicBaseline(scale=4)
    report = evaluate_clip(model, lr, hr, flows, n=2)

    # an explicit save-to-PNG/reload roundtrip must reproduce the scores
    sr_dir = tmp_path / "sr" / cid
    for t in range(len(lr)):
        window = prepared_corpus.window(cid, t, 2, with_hr=False)
        save_frame(model(window), sr_dir / f"{t:06d}.png")
    replay = FrameDirectoryModel(sr_dir)
    report2 = evaluate_clip(replay, lr, hr, flows, n=2)
    for a, b in zip(report.per_frame, report2.per_frame):
        assert a.psnr_db == pytest.approx(b.psnr_db, abs=0.05)
        assert a.ssim == pytest.approx(b.ssim, abs=1e-3)


def test_evaluate_clip_crop_border(prepared_corpus):
    cid, lr, hr, flows = _eval_setup(prepared_corpus)
    full = evaluate_clip(BicubicBaseline(scale=4), lr, hr, flows, n=2)
    cropped = evaluate_clip(BicubicBaseline(scale=4), lr, hr, flows, n=2, crop_border=4)
    assert cropped.mean_psnr_db != full.mean_psnr_db


def test_evaluate_clip_rejects_misaligned_clips(prepared_corpus):
    from vsrgan.errors import DimensionMismatch
    from vsrgan.frames import Clip

    cid, lr, hr, flows = _eval_setup(prepared_corpus)
    short_hr = Clip(hr.frames[:-1], clip_id=cid)
    with pytest.raises(DimensionMismatch):
        evaluate_clip(BicubicBaseline(scale=4), lr, short_hr, flows, n=2)


def test_generator_model_runs(prepared_corpus):
    cid, lr, hr, flows = _eval_setup(prepared_corpus)
    gen_c, disc_c = GeneratorConfig.tiny(), DiscriminatorConfig.tiny()
    train_c = TrainConfig(max_steps=0, seed=0)
    bundle = bundle_from_state(make_state(gen_c, disc_c, train_c), gen_c, disc_c, train_c)
    model = GeneratorModel.from_bundle(bundle)
    report = evaluate_clip(model, lr, hr, flows, n=2)
    assert len(report.per_frame) == len(lr)
    assert np.isfinite(report.mean_psnr_db)


def test_pick_eval_clip_priority(prepared_corpus):
    assert pick_eval_clip(prepared_corpus) == prepared_corpus.split.val[0]


def test_pick_eval_clip_empty():
    from vsrgan.errors import EmptyCorpus

    class FakeCorpus:
        split = DatasetSplit(train=[], val=[], test=[], seed=0)

    with pytest.raises(EmptyCorpus):
        pick_eval_clip(FakeCorpus())


def test_ablation_lattice_order():
    assert [m.value for m in LATTICE] == [
        "l1_only", "mse_only", "adv", "adv_mse", "adv_mse_perc", "full",
    ]


def test_ablation_report_zero_steps(prepared_corpus):
    gen_c, disc_c = GeneratorConfig.tiny(), DiscriminatorConfig.tiny()
    base = TrainConfig(max_steps=0, batch_size=2, seed=0)
    report = ablation_report([AblationMode.L1_ONLY], prepared_corpus, 0, gen_c, disc_c, base)
    assert len(report.rows) == 1
    row = report.rows[0]
    assert row.mode == AblationMode.L1_ONLY.value
    assert row.psnr_db is None or np.isfinite(row.psnr_db)
    table = report.to_table()
    assert "l1_only" in table


def test_ablation_report_determinism_and_serialization(prepared_corpus):
    gen_c, disc_c = GeneratorConfig.tiny(), DiscriminatorConfig.tiny()
    base = TrainConfig(max_steps=0, batch_size=2, seed=0)
    modes = [AblationMode.L1_ONLY, AblationMode.ADV]
    a = ablation_report(modes, prepared_corpus, 2, gen_c, disc_c, base)
    b = ablation_report(modes, prepared_corpus, 2, gen_c, disc_c, base)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)
    assert a.to_table() == b.to_table()
    d = a.to_dict()
    assert [row["mode"] for row in d["rows"]] == ["l1_only", "adv"]
    assert "logs" not in d
