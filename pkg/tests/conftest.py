import json
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
FIXTURE_CONFIG = ROOT / "configs" / "fixture.json"
PLANTED_BAND = (4, 28)


def band_iou(zone, band=PLANTED_BAND):
    s, e = zone
    inter = max(0, min(e, band[1]) - max(s, band[0]))
    return inter / ((e - s) + (band[1] - band[0]) - inter)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixture_dict():
    return json.loads(FIXTURE_CONFIG.read_text())


@pytest.fixture
def small_config_dict():
    """A fast end-to-end configuration (tiny budgets, same structure as the fixture)."""
    return {
        "dataset": {"synthetic": {"K": 20, "num_classes": 3, "samples_per_class": 30, "band": [2, 18],
                                  "ar_order": 1, "coefs": [[0.9], [-0.9], [0.0]]}},
        "seed": 3,
        "K_prime": 40,
        "shuffle": False,
        "probe_iterations": 20,
        "agent": {"n_episodes": 4, "n_steps": 10, "warmup": 8, "batch_size": 8},
        "classifier": {"hidden": 6, "fc_width": 6, "n_iter": 30},
        "reward": {"subsample": 40},
    }


ACCEPTANCE_LINES = {}


@pytest.fixture
def verdict():
    """Record the one-line outcome of an acceptance criterion, then enforce it."""

    def record(number, passed, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
