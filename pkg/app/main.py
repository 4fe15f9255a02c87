import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.core.config import get_settings
from app.routers import capacity, codes, health, search, simulate

settings = get_settings()
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    # Startup: route service logs through the configured level
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logger.info(
        f"{settings.app_name} starting ({settings.environment}, threads={settings.threads}, "
        f"search_budget={settings.search_budget})"
    )
    yield


app = FastAPI(
    title=settings.app_name,
    description="Evaluation, search and simulation of Z_M-linear QAM index codes",
    version="0.1.0",
    lifespan=lifespan,
)

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)

# Include routers
app.include_router(health.router, tags=["health"])
app.include_router(codes.router, prefix="/codes", tags=["codes"])
app.include_router(capacity.router, prefix="/capacity", tags=["capacity"])
app.include_router(search.router, prefix="/search", tags=["search"])
app.include_router(simulate.router, prefix="/simulate", tags=["simulate"])
