from fastapi import APIRouter

from workers.celery_app import celery_app

router = APIRouter()


@router.get("/health")
async def health_check():
    """Basic health check endpoint"""
    return {"status": "healthy"}


@router.get("/health/worker")
async def worker_health_check():
    """Celery broker health check endpoint"""
    try:
        replies = celery_app.control.ping(timeout=1.0)
        return {"status": "healthy", "workers": len(replies)}
    except Exception as e:
        return {"status": "unhealthy", "workers": 0, "error": str(e)}
