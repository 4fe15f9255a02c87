import logging

from fastapi import APIRouter, status

from app.core.errors import IndexCodeError, to_http_exception
from app.routers.search import job_record
from app.schemas import JobRecord, SimulateRequest
from app.services.indexcode import make_subset

logger = logging.getLogger(__name__)
router = APIRouter()


@router.post("/jobs", response_model=JobRecord, status_code=status.HTTP_202_ACCEPTED)
def submit_simulation(request: SimulateRequest):
    """Queue Monte-Carlo error-rate curves on the Celery workers"""
    try:
        code = request.code.to_code()
        for S in request.subsets:
            make_subset(S, code.K)
    except IndexCodeError as exc:
        raise to_http_exception(exc) from exc

    from workers.tasks import run_simulation
    job = run_simulation.delay(request.model_dump())
    logger.info(f"Queued simulation job {job.id} for {code.describe()}")
    return JobRecord(job_id=job.id, status="queued")


@router.get("/jobs/{job_id}", response_model=JobRecord)
def get_simulation_job(job_id: str):
    """Get a simulation job's state and result"""
    return job_record(job_id)
