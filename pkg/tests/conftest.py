import pytest

from semcast import case_study_path, load_scenario
from semcast.significance import compute_significance_set
from semcast.transcode import GaParams


@pytest.fixture(scope="session")
def case_study():
    return load_scenario(case_study_path())


@pytest.fixture(scope="session")
def case_sig(case_study):
    return compute_significance_set(case_study)


@pytest.fixture(scope="session")
def fast_ga():
    # Small population keeps multi-run tests quick; determinism is per-seed.
    return GaParams(population_size=16, generations=30, rng_seed=0)
