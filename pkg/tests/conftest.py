from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
EXAMPLE_DEAL = ROOT / "deals" / "cmo_example.deal"


@pytest.fixture
def example_text() -> str:
    return EXAMPLE_DEAL.read_text()
