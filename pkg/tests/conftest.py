import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wetrelay.channel import SystemParams, build_normalized_channel

settings.register_profile("wetrelay", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("wetrelay")


@pytest.fixture(scope="session")
def paper_params():
    """Reference scenario: 10 m source-relay hop, 200 m to the destination, P_C = 1 mW."""
    return SystemParams()


@pytest.fixture(scope="session")
def paper_channel(paper_params):
    return build_normalized_channel(paper_params)


@pytest.fixture(scope="session")
def fig_grid():
    return np.logspace(-2, np.log10(5.0), 20)


class PresetRuns:
    """Preset sweeps run once per session through the command line, in bits/symbol."""

    def __init__(self, root):
        self.root = root
        self._done = {}

    def __call__(self, name):
        if name not in self._done:
            import csv

            from wetrelay.cli import main

            out = self.root / f"{name}.csv"
            code = main(["sweep", "--preset", name, "--units", "bpsymbol", "--workers", "1", "--out", str(out)])
            assert code == 0
            with open(out, newline="") as fh:
                rows = list(csv.DictReader(fh))
            self._done[name] = (out, rows)
        return self._done[name]


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    return PresetRuns(tmp_path_factory.mktemp("presets"))
