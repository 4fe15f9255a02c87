import json
import logging

from celery import Celery, signals
from kombu import Exchange, Queue

from app.core.config import get_settings

logger = logging.getLogger(__name__)

redis_url = get_settings().redis_url

FAILED_JOBS_KEY = "qam_index:failed_jobs"
FAILED_JOBS_KEPT = 1000

jobs_exchange = Exchange("jobs", type="direct")
dead_letter_exchange = Exchange("dead_letter", type="direct")


def job_queue(name: str) -> Queue:
    """A work queue whose rejected messages are routed to the dead letter queue."""
    return Queue(
        name,
        exchange=jobs_exchange,
        routing_key=name,
        queue_arguments={
            "x-dead-letter-exchange": "dead_letter",
            "x-dead-letter-routing-key": "dead_letter",
        },
    )


# Searches can run for hours; simulations are shorter and get their own queue
# so one long search does not hold up curve requests.
search_queue = job_queue("search")
simulate_queue = job_queue("simulate")
dead_letter_queue = Queue("dead_letter", exchange=dead_letter_exchange, routing_key="dead_letter")

celery_app = Celery(
    "qam_index_codes",
    broker=redis_url,
    backend=redis_url,
    include=["workers.tasks"],
)

celery_app.conf.update(
    task_serializer="json",
    accept_content=["json"],
    result_serializer="json",
    timezone="UTC",
    enable_utc=True,

    # Job records
    task_track_started=True,
    result_extended=True,
    result_expires=7 * 24 * 3600,

    # Limits
    task_time_limit=6 * 3600,
    task_soft_time_limit=6 * 3600 - 300,
    worker_prefetch_multiplier=1,  # one CPU-bound job per worker process

    # A job lost with its worker is redelivered; searches resume from their checkpoint
    task_acks_late=True,
    task_reject_on_worker_lost=True,

    task_queues=[search_queue, simulate_queue, dead_letter_queue],
    task_routes={
        "workers.tasks.run_search": {"queue": "search", "routing_key": "search"},
        "workers.tasks.run_simulation": {"queue": "simulate", "routing_key": "simulate"},
    },
    task_default_queue="simulate",
    task_default_exchange="jobs",
    task_default_routing_key="simulate",
    task_store_errors_even_if_ignored=True,
)


@signals.task_failure.connect
def handle_task_failure(sender=None, task_id=None, exception=None,
                        args=None, kwargs=None, traceback=None, einfo=None, **kw):
    """
    Record a search or simulation job that failed for good.
    The job's arguments are kept in Redis so it can be resubmitted.
    """
    logger.error(f"Job {sender.name}[{task_id}] failed: {exception}")

    if celery_app.conf.task_always_eager:
        return
    try:
        import redis

        r = redis.from_url(redis_url)
        r.lpush(
            FAILED_JOBS_KEY,
            json.dumps(
                {
                    "task_id": task_id,
                    "job": sender.name.rsplit(".", 1)[-1],
                    "args": args,
                    "kwargs": kwargs,
                    "exception": f"{type(exception).__name__}: {exception}",
                    "traceback": str(einfo) if einfo else None,
                },
                default=str,
            ),
        )
        r.ltrim(FAILED_JOBS_KEY, 0, FAILED_JOBS_KEPT - 1)
    except Exception as e:
        logger.error(f"Could not record failed job {task_id} in Redis: {e}")


@signals.task_retry.connect
def handle_task_retry(sender=None, reason=None, request=None, **kw):
    logger.warning(f"Job {sender.name}[{request.id}] retrying: {reason}")
