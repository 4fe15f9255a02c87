import math

from fastapi import APIRouter, HTTPException, Query, status
from pydantic import BaseModel

from app.core.errors import IndexCodeError, to_http_exception
from app.services.awgnsim import capacity_min_snr_db
from app.services.indexcode import make_subset

router = APIRouter()


class CapacityResponse(BaseModel):
    rates: list[float]
    subset: list[int]
    min_snr_db: float | None  # None: no minimum SNR


def _parse_list(text: str, kind: type) -> list:
    try:
        return [kind(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"Expected comma-separated values, got {text!r}",
        )


@router.get("", response_model=CapacityResponse)
async def minimum_snr(
    rates: str = Query(..., description="R_1,...,R_K in b/dim"),
    subset: str = Query("", description="known message indices, e.g. 1,3"),
):
    """Minimum SNR at which a receiver knowing ``subset`` can decode the rest"""
    rate_values = _parse_list(rates, float)
    try:
        S = make_subset(_parse_list(subset, int), len(rate_values), proper=False)
        snr_db = capacity_min_snr_db(rate_values, S)
    except IndexCodeError as exc:
        raise to_http_exception(exc) from exc
    return CapacityResponse(
        rates=rate_values,
        subset=sorted(S),
        min_snr_db=snr_db if math.isfinite(snr_db) else None,
    )
