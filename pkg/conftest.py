"""
ANASTAARS test configuration
Puts backend/ on the import path and gates the long acceptance runs
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), 'backend'))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance run, needs ANASTAARS_RUN_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if os.getenv('ANASTAARS_RUN_SLOW') == '1':
        return
    skip_slow = pytest.mark.skip(reason="set ANASTAARS_RUN_SLOW=1 to run")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20250101)
