import logging

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel

from app.core.errors import IndexCodeError, to_http_exception
from app.schemas import CodeRecord, DecodeRequest, EncodeRequest, GainReportRecord
from app.services.gain import gamma
from app.services.indexcode import (
    SideInfoSet,
    decode_no_side_info,
    decode_with_side_info,
    encode,
    make_subset,
)

logger = logging.getLogger(__name__)
router = APIRouter()


class CodewordResponse(BaseModel):
    code: CodeRecord
    message: list[int]
    codeword: list[int]


class MessageResponse(BaseModel):
    code: CodeRecord
    subset: list[int]
    message: list[int]


@router.post("/eval", response_model=GainReportRecord)
def evaluate_code(record: CodeRecord, verify: bool = False):
    """
    Side information gain of a code.

    Returns d_S^2 and the normalised gain for every proper nonempty subset and
    their minimum Γ in dB/b/dim.
    """
    try:
        report = gamma(record.to_code(), verify=verify)
    except IndexCodeError as exc:
        raise to_http_exception(exc) from exc
    return GainReportRecord.from_report(report)


@router.post("/encode", response_model=CodewordResponse)
def encode_message(request: EncodeRequest):
    """Map a message tuple to its constellation point"""
    try:
        x = encode(request.code.to_code(), request.message)
    except IndexCodeError as exc:
        raise to_http_exception(exc) from exc
    return CodewordResponse(code=request.code, message=request.message, codeword=list(x))


@router.post("/decode", response_model=MessageResponse)
def decode_received(request: DecodeRequest):
    """Nearest-point decoding, within the subcode when side information is given"""
    try:
        code = request.code.to_code()
        S = make_subset(request.subset, code.K)
        if S:
            if request.side_values is None:
                raise HTTPException(status_code=400, detail="side_values are required with a subset")
            side = SideInfoSet(S=S, values=tuple(request.side_values))
            w = decode_with_side_info(code, request.received, side)
        else:
            w = decode_no_side_info(code, request.received)
    except IndexCodeError as exc:
        raise to_http_exception(exc) from exc
    return MessageResponse(code=request.code, subset=sorted(S), message=list(w))
