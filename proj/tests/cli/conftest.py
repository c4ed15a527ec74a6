import json
import os
import subprocess
from pathlib import Path

import pytest

TINY = {
    "seed": 3,
    "corpus_size": 48,
    "image_height": 16,
    "image_width": 16,
    "hidden_channels": 6,
    "encoder_layers": 3,
    "decoder_layers": 2,
    "teacher_budgets": [1, 2, 3],
    "convergence_budget": 4,
    "alpha1": 0.05,
    "alpha2": 0.0,
    "mu1": 10,
    "mu2": 8,
    "stage_cap": 3,
    "total_budget": 9,
    "min_epochs": 2,
    "smoothing_window": 1,
    "patience": 2,
    "detector_epochs": 1,
}


@pytest.fixture(scope="session")
def stcl_bin():
    path = os.environ.get("STCL_CLI") or str(Path(__file__).resolve().parents[2] / "build" / "tools" / "stcl")
    if not Path(path).exists():
        pytest.skip(f"stcl binary not found at {path}")
    return path


@pytest.fixture
def run(stcl_bin, tmp_path):
    def _run(*args):
        return subprocess.run([stcl_bin, *map(str, args)], cwd=tmp_path, capture_output=True, text=True)

    return _run


@pytest.fixture
def tiny_config(tmp_path):
    def _write(**overrides):
        path = tmp_path / f"config_{len(list(tmp_path.glob('config_*.json')))}.json"
        path.write_text(json.dumps({**TINY, **overrides}))
        return path

    return _write
