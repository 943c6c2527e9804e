import math
import shutil

import numpy as np
import pytest

from conftest import NAT5
from wsdsr import InvalidInputError, defaults, harness
from wsdsr.harness import PROTOCOL, SkipImage
from wsdsr.image import psnr, quantize8, read_png, trim_border, write_png
from wsdsr.resample import downsample, upsample


@pytest.fixture
def small_set(tmp_path, natural_crop):
    d = tmp_path / "set"
    d.mkdir()
    write_png(d / "a.png", natural_crop[:48, :48])
    write_png(d / "b.png", natural_crop[16:, 16:])
    return d


def test_protocol_steps_in_order(natural_crop):
    rec = harness.evaluate_image(natural_crop, 4, iterations=2)
    assert rec.steps == PROTOCOL
    assert rec.K == 2 and rec.time_s > 0


def test_bicubic_solver_reproduces_baseline_pipeline(natural_crop):
    z = natural_crop[:62, :61]  # forces trimming to 60x60
    rec = harness.evaluate_image(z, 4, solver="bicubic")
    gt = quantize8(z[:60, :60])
    lr = quantize8(downsample(gt, 4))
    want = psnr(trim_border(quantize8(upsample(lr, 4)), 4), trim_border(gt, 4))
    assert rec.psnr == want and rec.K == 0


def test_quantizing_ground_truth_matters(natural_crop):
    z = natural_crop + 0.37  # off-grid ground truth
    gt_q, lr_q, _ = harness.protocol_pair(z, 2)
    gt_raw, lr_raw, _ = harness.protocol_pair(z, 2, quantize_gt=False)
    assert not np.array_equal(gt_q[0], gt_raw[0])
    assert not np.array_equal(lr_q[0], lr_raw[0])


def test_constant_image_gives_infinite_psnr():
    rec = harness.evaluate_image(np.full((48, 48), 90.0), 4)
    assert math.isinf(rec.psnr) and rec.K == 20


def test_colour_input_uses_luma(rng, natural_crop):
    rgb = np.stack([natural_crop, natural_crop * 0.8 + 10, 255 - natural_crop], axis=-1)
    rec = harness.evaluate_image(rgb, 2, iterations=3)
    rec_c = harness.evaluate_image(rgb, 2, "y-ycbcr", iterations=3)
    assert math.isfinite(rec.psnr) and math.isfinite(rec_c.psnr)


def test_too_small_is_skipped():
    with pytest.raises(SkipImage):
        harness.evaluate_image(np.zeros((10, 10)), 4)


def test_unknown_solver(natural_crop):
    with pytest.raises(InvalidInputError):
        harness.evaluate_image(natural_crop, 2, solver="magic")


def test_oracle_on_constant_equals_normal():
    z = np.full((48, 48), 77.0)
    a = harness.evaluate_image(z, 4)
    b = harness.oracle_match_run(z, 4)
    assert a.psnr == b.psnr


def test_oracle_dimension_mismatch(natural_crop):
    with pytest.raises(InvalidInputError):
        harness.oracle_match_run(natural_crop, 4, source=np.zeros((60, 64)))


def test_oracle_from_own_output_is_close():
    # needs a realistically sized image: a 16x16 LR input has too few patches
    z = read_png(NAT5 / "astronaut.png")
    p = defaults(4)
    normal, out = harness.evaluate_image(z, 4, params=p, return_output=True)
    own = harness.oracle_match_run(z, 4, p, source=out)
    assert abs(own.psnr - normal.psnr) <= 0.2


def test_single_image_dir(tmp_path, natural_crop):
    d = tmp_path / "one"
    d.mkdir()
    write_png(d / "x.png", natural_crop)
    run = harness.run_benchmark(d, 4, iterations=3)
    assert len(run.records) == 1 and run.mean_psnr == run.records[0].psnr


def test_mean_excludes_infinite(tmp_path, natural_crop):
    d = tmp_path / "mix"
    d.mkdir()
    write_png(d / "flat.png", np.full((48, 48), 30.0))
    write_png(d / "real.png", natural_crop)
    run = harness.run_benchmark(d, 4, iterations=3)
    assert run.infinite == ["flat"]
    assert run.mean_psnr == next(r.psnr for r in run.records if r.name == "real")
    assert "excluded" in harness.format_table(run)


def test_skipped_images_are_reported(small_set):
    write_png(small_set / "tiny.png", np.zeros((8, 8)))
    run = harness.run_benchmark(small_set, 4, iterations=2)
    assert [n for n, _ in run.skipped] == ["tiny"]
    assert len(run.records) == 2


def test_csv_deterministic_apart_from_time(small_set):
    def strip(text):
        return [ln.split(",")[:2] + ln.split(",")[3:] for ln in text.splitlines()]

    a = harness.to_csv(harness.run_benchmark(small_set, 4, iterations=4))
    b = harness.to_csv(harness.run_benchmark(small_set, 4, iterations=4))
    assert strip(a) == strip(b)
    assert a.splitlines()[0] == "name,psnr,time,K"
    assert [ln.split(",")[0] for ln in a.splitlines()[1:]] == ["a", "b", "mean"]


def test_oracle_dir_benchmark(small_set, tmp_path):
    gt = tmp_path / "gt"
    shutil.copytree(small_set, gt)
    run = harness.run_benchmark(small_set, 4, iterations=3, oracle_dir=gt)
    assert len(run.records) == 2


def test_manifest_lists_expected_files(small_set):
    (small_set / "manifest.txt").write_text("# expected\nb.png\na.png\n")
    assert [p.name for p in harness.list_images(small_set)] == ["b.png", "a.png"]
    (small_set / "manifest.txt").write_text("a.png\nmissing.png\n")
    with pytest.raises(InvalidInputError, match="missing.png"):
        harness.list_images(small_set)


def test_empty_or_missing_dir(tmp_path):
    with pytest.raises(InvalidInputError):
        harness.run_benchmark(tmp_path, 4)
    with pytest.raises(InvalidInputError):
        harness.run_benchmark(tmp_path / "nope", 4)


def test_ablation_switches():
    p = defaults(4)
    assert not harness.apply_ablation(p, "reuse=off").reuse
    assert harness.apply_ablation(p, "wiener2d=dct").wiener_2d == "dct"
    g = harness.apply_ablation(p, "search=global").wiener
    assert g.ns0 == g.ns_max >= 1 << 20
    assert harness.apply_ablation(p, "search=local").wiener.ns_max == 12
    assert harness.apply_ablation(p, "search=incremental") == p
    for bad in ("reuse=maybe", "search=spiral", "wiener2d=fft", "color=on"):
        with pytest.raises(InvalidInputError):
            harness.apply_ablation(p, bad)
