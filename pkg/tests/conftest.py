"""Shared builders plus the acceptance-criteria summary hook."""

import re

import numpy as np
import pytest

from wifiprox.core import Fingerprint, ProximityClass
from wifiprox.pairing import make_pair

_CRITERIA_LABELS = {
    1: "balanced-accuracy arithmetic reproduces reference confusion rates",
    2: "feature registry pins 323 finite features on a fuzz corpus",
    3: "extract is swap-invariant coordinate-for-coordinate",
    4: "least-squares calibration oracle on exact affine pairs",
    5: "fitted (A, B) matches brute-force grid search",
    6: "correlation coefficients match textbook formulas",
    7: "mRMR first pick and MI values match hand computation",
    8: "specialized beats generic across synthetic density regimes",
    9: "pipeline rerun is byte-identical",
    10: "sub-burst medians match hand oracle; ninth scan unused",
    11: "PR curve endpoint and monotonicity properties",
    12: "wide-CSV adapter ingests public-dataset layouts",
}

_results: dict[int, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "setup" and report.skipped:
        m = re.search(r"test_criterion_(\d+)", report.nodeid)
        if m:
            _results[int(m.group(1))] = "SKIP"
    if report.when != "call":
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
        report.outcome, report.outcome.upper()
    )
    _results[int(m.group(1))] = outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        label = _CRITERIA_LABELS.get(num, "")
        terminalreporter.write_line(f"criterion {num:2d}: {_results[num]:4s} {label}")


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def bss(i: int) -> str:
    """Short readable BSSID for tests: bss(1) -> 00:00:00:00:00:01."""
    return ":".join(f"{(i >> (8 * k)) & 0xFF:02x}" for k in range(5, -1, -1))


def make_fp(
    id="fp1",
    readings=None,
    position=(0.0, 0.0),
    floor=("ds", "0", "0"),
    device="pixel-4",
    burst_id=None,
    scan_index=None,
):
    if readings is None:
        readings = {bss(1): -50.0, bss(2): -60.0}
    return Fingerprint(
        id=id,
        readings=readings,
        position=position,
        floor_key=floor,
        device_model=device,
        burst_id=burst_id,
        scan_index=scan_index,
    )


def pair_of(readings_a, readings_b, *, device_a="pixel-4", device_b="pixel-4",
            distance=1.0, label=ProximityClass.CLOSE):
    a = make_fp(id="a", readings=readings_a, device=device_a)
    b = make_fp(id="b", readings=readings_b, position=(distance, 0.0), device=device_b)
    return make_pair(a, b, distance, label)


def random_readings(rng: np.random.Generator, n_aps: int, id_pool=60) -> dict:
    ids = rng.choice(id_pool, size=n_aps, replace=False)
    return {bss(int(i) + 1): float(rng.integers(-95, -30)) for i in ids}


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
