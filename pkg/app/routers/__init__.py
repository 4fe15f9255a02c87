from app.routers import capacity, codes, health, search, simulate

__all__ = ["capacity", "codes", "health", "search", "simulate"]
