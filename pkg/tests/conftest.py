import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for `helpers`

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fixture_manifest() -> Path:
    return DATA_DIR / "fixture" / "manifest.json"


@pytest.fixture(scope="session")
def golden_report() -> Path:
    return DATA_DIR / "golden" / "report.json"
