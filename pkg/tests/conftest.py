"""Shared fixtures: tiny handcrafted datasets and the acceptance-line report.

Acceptance tests record one PASS/FAIL line per criterion through the
``acceptance`` fixture; the lines are replayed in a terminal section after
the run so they stay visible even when every test passes.
"""

from __future__ import annotations

import numpy as np
import pytest

from oodseg import tensor_store

from dsutil import build_dataset, grid_sample

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def record(criterion: str, passed: bool, detail: str = ""):
        status = "PASS" if passed else "FAIL"
        line = f"[acceptance] {status} — {criterion}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE_LINES.append(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tiny_manifest(tmp_path):
    """Two val_id samples + two test samples (with OOD and ignore pixels)."""
    rng = np.random.default_rng(42)
    samples = [
        grid_sample(rng, "val_000", "val_id", "low_light"),
        grid_sample(rng, "val_001", "val_id", "high_light"),
        grid_sample(rng, "test_000", "test", "low_light", ood_pixels=10, ignore_pixels=4),
        grid_sample(rng, "test_001", "test", "high_light", ood_pixels=6, ignore_pixels=2),
    ]
    path = build_dataset(tmp_path / "data", samples, num_classes=3)
    return tensor_store.load_manifest(path)
