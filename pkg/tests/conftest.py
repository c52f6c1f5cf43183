import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vcflock.runner import run_ref  # noqa: E402

PRESETS = ("linear-3", "curve-3", "rotate-3", "reconfig-4to3", "line-2",
           "scale-12")


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    """One artifact run per preset, shared across the whole session."""
    base = tmp_path_factory.mktemp("preset-runs")
    results = {}
    for name in PRESETS:
        results[name] = run_ref(name, base / name)[0]
    return results
