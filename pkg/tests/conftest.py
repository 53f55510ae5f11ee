import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lastdrawdown.densities import ProcessSpec  # noqa: E402
from lastdrawdown.montecarlo import SimConfig, simulate  # noqa: E402

MC_SEED = 20240521

# wall-clock seconds spent building each shared sample, for runtime checks
SIM_SECONDS = {}


@pytest.fixture(scope="session")
def sample_sr1_million():
    """10^6 daily-step paths at SR=1, T=10; shared by every large-sample check."""
    start = time.perf_counter()
    sample = simulate(SimConfig(ProcessSpec(1.0, 10.0), n_paths=1_000_000, seed=MC_SEED))
    SIM_SECONDS["sr1"] = time.perf_counter() - start
    return sample


@pytest.fixture(scope="session")
def sample_sr16_million():
    return simulate(SimConfig(ProcessSpec(1.6, 10.0), n_paths=1_000_000, seed=MC_SEED + 1))
