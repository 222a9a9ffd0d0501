import os

import numpy as np
import pytest

from weakpde.experiments import ExperimentConfig, load_base_field, prepare_field
from weakpde.ks import SimulationConfig, simulate_ks

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line[1])


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    store = request.config.stash[ACCEPTANCE_KEY]

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        store.append((number, line))

    return record


@pytest.fixture(scope="session")
def cache_dir(request):
    return str(request.config.cache.mkdir("weakpde-data"))


@pytest.fixture(scope="session")
def reference_config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def reference_base(reference_config, cache_dir):
    """Full-resolution KS run on L_x = 32 pi, T = 500 (cached between sessions)."""
    return load_base_field(reference_config, cache_dir)


@pytest.fixture(scope="session")
def reference_data(reference_base, reference_config):
    """Reference grid: delta_x ~ 0.196, delta_t = 1."""
    return prepare_field(reference_base, reference_config)


@pytest.fixture(scope="session")
def small_ks():
    """Cheap KS field for fast end-to-end checks: 257 x 101 at delta_t = 0.25."""
    cfg = SimulationConfig(n_x=256, dt=0.005, T=25.0, transient=20.0, save_stride=50, seed=1)
    return simulate_ks(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tmp_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def pytest_collection_modifyitems(config, items):
    if os.environ.get("WEAKPDE_SKIP_SLOW"):
        skip = pytest.mark.skip(reason="WEAKPDE_SKIP_SLOW set")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip)
