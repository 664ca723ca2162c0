import os
import shutil

import pytest


def pytest_addoption(parser):
    parser.addoption("--vip3de", action="store", default=None, help="path to the vip3de executable")


@pytest.fixture(scope="session")
def exe(request):
    path = request.config.getoption("--vip3de") or os.environ.get("VIP3DE_BIN") or shutil.which("vip3de")
    if not path:
        pytest.skip("vip3de executable not given")
    return path
