"""
Celery tasks for long-running searches and simulations.

Both tasks take and return plain JSON records so results can be read back
through the API or fed to the CLI with ``--json-in``.

Features:
- Exponential backoff retries for transient failures (I/O, broker)
- Domain errors (invalid code, budget) fail immediately
- Dead letter queue handling (configured in celery_app.py)
"""

import logging

from app.core.errors import IndexCodeError
from app.schemas import SearchResultRecord, SearchSpecRecord, SimResultRecord, SimulateRequest
from app.services.awgnsim import ChannelConfig, SnrConvention, simulate
from app.services.search import search_circulant
from workers.celery_app import celery_app

logger = logging.getLogger(__name__)


def exponential_backoff(retry_count: int, base_delay: int = 10, max_delay: int = 600) -> int:
    """
    Calculate exponential backoff delay.

    Args:
        retry_count: Current retry attempt (0-indexed)
        base_delay: Base delay in seconds
        max_delay: Maximum delay cap in seconds

    Returns:
        Delay in seconds: base_delay * 2^retry_count, capped at max_delay
    """
    delay = base_delay * (2 ** retry_count)
    return min(delay, max_delay)


@celery_app.task(bind=True, max_retries=3)
def run_search(self, spec: dict, checkpoint: str | None = None):
    """
    Exhaustive circulant search for one (M, K).
    With a checkpoint path a retried task resumes where the failed one stopped.
    """
    record = SearchSpecRecord.model_validate(spec)
    logger.info(f"Starting search job for M={record.M} K={record.K}")
    try:
        result = search_circulant(record.to_spec(), checkpoint=checkpoint)
    except IndexCodeError:
        raise
    except Exception as exc:
        logger.error(f"Error in search job M={record.M} K={record.K}: {exc}")
        countdown = exponential_backoff(self.request.retries)
        logger.info(f"Retrying search in {countdown}s (attempt {self.request.retries + 1}/{self.max_retries})")
        raise self.retry(exc=exc, countdown=countdown)

    logger.info(f"Search job for M={record.M} K={record.K} finished: Γ={result.best_gamma_db}")
    return SearchResultRecord.from_result(result).model_dump(mode="json")


@celery_app.task(bind=True, max_retries=3)
def run_simulation(self, request: dict):
    """Monte-Carlo error-rate curves for every requested side-information set."""
    req = SimulateRequest.model_validate(request)
    code = req.code.to_code()
    cfg = ChannelConfig(
        snr_db_points=tuple(req.snr_db_points),
        trials_per_point=req.trials_per_point,
        seed=req.seed,
        snr_convention=SnrConvention(req.snr_convention),
        max_errors=req.max_errors,
        threads=req.threads,
    )
    logger.info(f"Starting simulation job for {code.describe()} ({len(req.subsets)} receivers)")
    try:
        results = [simulate(code, S, cfg) for S in req.subsets]
    except IndexCodeError:
        raise
    except Exception as exc:
        logger.error(f"Error in simulation job for {code.describe()}: {exc}")
        countdown = exponential_backoff(self.request.retries)
        logger.info(f"Retrying simulation in {countdown}s (attempt {self.request.retries + 1}/{self.max_retries})")
        raise self.retry(exc=exc, countdown=countdown)

    return SimResultRecord.from_results(results).model_dump(mode="json")
