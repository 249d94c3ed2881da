import pytest

import numpy as np

from ReplicaBF.consts import SSRP_PATH
from ReplicaBF.models.study import StudyPair
from ReplicaBF.services.ingest import load_study_pairs


@pytest.fixture
def worked_study() -> StudyPair:
    """z_o = 3, z_r = 2.5, c = 1"""
    return StudyPair.from_zstat(3.0, 2.5, 1.0, label="worked")


@pytest.fixture(scope="session")
def ssrp_studies() -> dict[str, StudyPair]:
    return {pair.label: pair for pair in load_study_pairs(SSRP_PATH)}


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240101)
