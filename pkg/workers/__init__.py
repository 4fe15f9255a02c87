# Celery app and search/simulation tasks
