import logging

from fastapi import APIRouter, HTTPException, status

from app.core.config import get_settings
from app.core.errors import IndexCodeError, to_http_exception
from app.schemas import JobRecord, SearchResultRecord, SearchSpecRecord
from app.services.search import candidate_count, search_circulant
from workers.celery_app import celery_app

logger = logging.getLogger(__name__)
router = APIRouter()


def job_record(job_id: str) -> JobRecord:
    """State of a Celery job, with its result once it has finished."""
    result = celery_app.AsyncResult(job_id)
    state = result.state
    if state == "SUCCESS":
        return JobRecord(job_id=job_id, status="completed", result=result.result)
    if state == "FAILURE":
        return JobRecord(job_id=job_id, status="failed", error=str(result.result))
    return JobRecord(job_id=job_id, status=state.lower())


@router.post("", response_model=SearchResultRecord)
def run_search(record: SearchSpecRecord):
    """
    Synchronous search for small specs.

    Larger searches belong in a job (POST /search/jobs); specs whose candidate
    space exceeds the search budget are rejected here.
    """
    try:
        spec = record.to_spec()
        result = search_circulant(spec)
    except IndexCodeError as exc:
        raise to_http_exception(exc) from exc
    return SearchResultRecord.from_result(result)


@router.post("/jobs", response_model=JobRecord, status_code=status.HTTP_202_ACCEPTED)
def submit_search(record: SearchSpecRecord, checkpoint: str | None = None):
    """Queue an exhaustive search on the Celery workers"""
    try:
        total = candidate_count(record.to_spec())
    except IndexCodeError as exc:
        raise to_http_exception(exc) from exc
    if total > get_settings().search_budget and checkpoint is None:
        raise HTTPException(
            status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
            detail=f"{total} candidates exceed the search budget; give a checkpoint path",
        )

    from workers.tasks import run_search as run_search_task
    job = run_search_task.delay(record.model_dump(), checkpoint)
    logger.info(f"Queued search job {job.id} for M={record.M} K={record.K}")
    return JobRecord(job_id=job.id, status="queued")


@router.get("/jobs/{job_id}", response_model=JobRecord)
def get_search_job(job_id: str):
    """Get a search job's state and result"""
    return job_record(job_id)
