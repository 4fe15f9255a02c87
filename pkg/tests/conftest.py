"""
Shared test fixtures and configuration.
"""

from typing import AsyncGenerator

import pytest
import pytest_asyncio
from httpx import ASGITransport, AsyncClient

from app.core.config import get_settings
from app.main import app
from app.services.indexcode import IndexCode, new_circulant
from workers.celery_app import celery_app


@pytest.fixture
def qam16_code() -> IndexCode:
    """The 16-QAM code with generators (1,-2) and (-2,1)."""
    return new_circulant(4, 2, (1, -2))


@pytest.fixture
def m8_code() -> IndexCode:
    """The best M=8, K=2 circulant code, first row (1,2)."""
    return new_circulant(8, 2, (1, 2))


@pytest.fixture
def settings_env(monkeypatch):
    """Set environment overrides and rebuild the cached settings."""

    def apply(**values):
        for name, value in values.items():
            monkeypatch.setenv(name.upper(), str(value))
        get_settings.cache_clear()
        return get_settings()

    yield apply
    get_settings.cache_clear()


@pytest.fixture
def eager_celery():
    """Run Celery tasks in-process."""
    celery_app.conf.task_always_eager = True
    celery_app.conf.task_eager_propagates = True
    yield celery_app
    celery_app.conf.task_always_eager = False
    celery_app.conf.task_eager_propagates = False


@pytest_asyncio.fixture
async def client() -> AsyncGenerator[AsyncClient, None]:
    """Create test client for the ASGI app."""
    async with AsyncClient(
        transport=ASGITransport(app=app),
        base_url="http://test",
    ) as client:
        yield client
