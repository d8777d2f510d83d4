import os
import sys

import hypothesis
import numpy as np
import pytest

# Keep test runs quiet and off the filesystem before any src module builds its logger
os.environ.setdefault("LAB_LOG_TO_FILE", "0")
os.environ.setdefault("LAB_LOG_LEVEL", "WARNING")

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def region_rule():
    from src.model.geometry import dense_rule

    return dense_rule(128, 256)
