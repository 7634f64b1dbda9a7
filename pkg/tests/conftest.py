import warnings
from pathlib import Path

import pytest

SCENARIO_PATH = (
    Path(__file__).resolve().parents[1] / "src" / "fieldfab" / "data" / "synthetic.toml"
)


@pytest.fixture(scope="session")
def synthetic_scenario():
    from fieldfab import load_scenario

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return load_scenario(SCENARIO_PATH)


@pytest.fixture(scope="session")
def synthetic_bundle(synthetic_scenario):
    """One full pipeline run shared by read-only tests."""
    from fieldfab import generate

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return generate(synthetic_scenario, {"seed_spacing": 100.0, "population": 5000.0})
