import numpy as np
import pytest

from core import settings


@pytest.fixture(autouse=True)
def runLogs(tmp_path, monkeypatch):
    """Keep JSONL run logs out of the working tree."""
    folder = tmp_path / "logs"
    monkeypatch.setattr(settings, "LOG_RUNS", str(folder))
    return folder


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
