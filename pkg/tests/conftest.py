import sys
from pathlib import Path

import pytest

# Allow `import oracles` from any test module regardless of invocation dir.
sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


def problem_path(name: str) -> Path:
    return FIXTURES / "problems" / f"{name}.yaml"


def code_path(name: str) -> Path:
    return FIXTURES / "codes" / f"{name}.yaml"


def config_path(name: str) -> Path:
    return FIXTURES / "configs" / f"{name}.yaml"
