"""Shared fixtures: both example problems and the grid atlases.

Everything here is session scoped because the pendulum terminal set and
the fine grid atlas are the two expensive builds in the suite.
"""

from pathlib import Path

import pytest

from regionalmpc import complete_ocp, load_config
from regionalmpc.atlas import enumerate_by_grid
from regionalmpc.condense import build_condensed_qp

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def ex1():
    return build_condensed_qp(complete_ocp(load_config(CONFIG_DIR / "ex1.json")))


@pytest.fixture(scope="session")
def pend():
    return build_condensed_qp(complete_ocp(load_config(CONFIG_DIR / "pendulum.json")))


@pytest.fixture(scope="session")
def atlas201(ex1):
    # fine grid over the state box; shared by the atlas and batch tests
    return enumerate_by_grid(ex1, ex1.spec.Xset, 201)


@pytest.fixture(scope="session")
def atlas101e(ex1):
    # coarser grid with family enrichment, for the containment property
    return enumerate_by_grid(ex1, ex1.spec.Xset, 101, enrich_families=True)
