import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from docforge.gateway import ModelEndpointConfig
from docforge.mockserver import MockModelServer


@pytest.fixture(scope="session")
def mock_server():
    with MockModelServer() as server:
        yield server


@pytest.fixture
def mock(mock_server):
    mock_server.reset()
    return mock_server


@pytest.fixture
def endpoints(mock):
    return ModelEndpointConfig(base_url=mock.base_url, request_timeout=10.0, max_retries=2)
