import numpy as np
import pytest

from pathlib import Path

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN
