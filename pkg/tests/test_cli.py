import subprocess
import sys

import numpy as np
import pytest

from wsdsr.cli import main
from wsdsr.config import defaults, serialize
from wsdsr.image import read_png, write_png


@pytest.fixture
def gray_png(tmp_path, natural_crop):
    path = tmp_path / "in.png"
    write_png(path, natural_crop[:32, :32])
    return path


def test_upscale_gray(tmp_path, gray_png):
    out = tmp_path / "out.png"
    assert main(["upscale", str(gray_png), "--scale", "2", "--iterations", "3", "-o", str(out)]) == 0
    assert read_png(out).shape == (64, 64)


def test_upscale_colour_profiles(tmp_path, natural_crop):
    rgb = np.stack([natural_crop, 255 - natural_crop, natural_crop * 0.5], axis=-1)[:24, :24]
    src = tmp_path / "c.png"
    write_png(src, rgb)
    for prof in ("y", "y-ycbcr", "y-rgb"):
        out = tmp_path / f"{prof}.png"
        assert main(["upscale", str(src), "--scale", "2", "--profile", prof, "--iterations", "2", "-o", str(out)]) == 0
        assert read_png(out).shape == (48, 48, 3)


def test_dump_config(capsys, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("alpha=1.5\n")
    assert main(["upscale", "x.png", "--scale", "4", "--config", str(cfg), "--dump-config"]) == 0
    text = capsys.readouterr().out
    assert "alpha=1.5" in text
    assert text.replace("alpha=1.5", "alpha=1.75") == serialize(defaults(4))


def test_bench_writes_csv(tmp_path, gray_png, capsys):
    csv = tmp_path / "r.csv"
    code = main(["bench", str(gray_png.parent), "--scale", "2", "--iterations", "2", "-q",
                 "--ablation", "reuse=off", "--csv", str(csv)])
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "name,psnr,time,K" and lines[1].startswith("in,")
    assert "mean" in capsys.readouterr().out


def test_psnr_command(tmp_path, gray_png, capsys):
    assert main(["psnr", str(gray_png), str(gray_png)]) == 0
    assert capsys.readouterr().out.strip() == "inf"
    other = tmp_path / "o.png"
    write_png(other, np.clip(read_png(gray_png) + 1, 0, 255))
    assert main(["psnr", str(gray_png), str(other), "--trim", "2"]) == 0
    assert float(capsys.readouterr().out) > 40


def test_errors_exit_nonzero(tmp_path, gray_png, capsys):
    cfg = tmp_path / "bad.txt"
    cfg.write_text("nope=1\n")
    assert main(["upscale", str(gray_png), "--scale", "2", "--config", str(cfg), "-o", "x.png"]) == 2
    assert "nope" in capsys.readouterr().err
    assert main(["bench", str(tmp_path / "missing"), "--scale", "2", "--csv", "x.csv"]) == 2
    with pytest.raises(SystemExit):
        main(["upscale", str(gray_png), "--scale", "0.5", "-o", "x.png"])


def test_console_script_entry_point(gray_png):
    res = subprocess.run([sys.executable, "-m", "wsdsr.cli", "psnr", str(gray_png), str(gray_png)],
                         capture_output=True, text=True, env={"SR_THREADS": "1", "PATH": ""})
    assert res.returncode == 0 and res.stdout.strip() == "inf"
