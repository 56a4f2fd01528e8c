"""Shared fixtures and the acceptance-criteria reporter."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _synth import linear_bits_library, two_cluster_library, utility_library

_ACCEPTANCE_LINES: list[str] = []


class AcceptanceRecorder:
    """Records one PASS/FAIL/SKIP line per acceptance criterion."""

    def check(self, number: int, name: str, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number:02d} [{name}] {status}"
        if detail:
            line += f" - {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    def skip(self, number: int, name: str, reason: str) -> None:
        _ACCEPTANCE_LINES.append(f"criterion {number:02d} [{name}] SKIP - {reason}")
        pytest.skip(reason)


@pytest.fixture(scope="session")
def acceptance() -> AcceptanceRecorder:
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def metrics_library_10k():
    """10,000 records, standard-normal utilities, utility-as-embedding."""
    utilities = np.random.default_rng(2024).normal(size=10_000)
    return utility_library(utilities, embeddings=utilities[:, None].astype(np.float32))


@pytest.fixture(scope="session")
def linear_library_50k():
    """50,000 molecules with a sparse linear atom-pair-bit signal, SNR 3."""
    return linear_bits_library(50_000, seed=777)


@pytest.fixture(scope="session")
def cluster_library():
    """Tight high-utility cluster over a diffuse low-utility background."""
    return two_cluster_library(seed=42)
