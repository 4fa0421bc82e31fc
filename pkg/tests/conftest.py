from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from hmisim import load_configuration, load_scenario

SCRIPTED_DIR = Path(__file__).parent / "data"
PKG_DATA = Path(str(resources.files("hmisim") / "data"))


@pytest.fixture(scope="session")
def demo_config():
    return load_configuration(PKG_DATA / "demo_tasks.csv", PKG_DATA / "demo_elements.yaml")


@pytest.fixture(scope="session")
def optimized_config():
    return load_configuration(
        PKG_DATA / "demo_tasks_optimized.csv", PKG_DATA / "demo_elements.yaml"
    )


@pytest.fixture(scope="session")
def demo_scenario():
    return load_scenario(PKG_DATA / "demo_scenario.yaml")


@pytest.fixture(scope="session")
def scripted_config():
    return load_configuration(
        SCRIPTED_DIR / "scripted_tasks.csv", SCRIPTED_DIR / "scripted_elements.yaml"
    )


@pytest.fixture(scope="session")
def scripted_scenario():
    return load_scenario(SCRIPTED_DIR / "scripted_scenario.yaml")
