import os
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
NAT5 = ROOT / "data" / "nat5"


@pytest.fixture(scope="session")
def natural_crop():
    """A 64x64 quantized luma crop with real texture (from the camera image)."""
    from wsdsr.image import read_png

    z = read_png(NAT5 / "camera.png")
    return z[96:160, 80:144].copy()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance verdicts: printed as they happen and again in the final summary
VERDICTS: dict[int, str] = {}


@pytest.fixture
def criterion(capsys):
    def report(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        VERDICTS[number] = line
        with capsys.disabled():
            print("\n" + line, flush=True)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
