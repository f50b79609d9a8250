"""Shared fixtures: the pinned calibration values and a small synthetic task
reused across test modules."""

import json
from pathlib import Path

import pytest

from plrefine import SyntheticSpec, synth_generate

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def calibration():
    with open(FIXTURES / "calibration.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def small_task():
    """C=5, d=16 task, small enough for fast end-to-end runs."""
    spec = SyntheticSpec(C=5, d=16, labeled_per_class=3, unlabeled_per_class=12, seed=3)
    return synth_generate(spec)
