from fastapi import APIRouter, Query

from app.models.api import CodeEntry, CodesResponse
from app.services.codes import codebook, format_code, make_layout
from app.utils.exceptions import InvalidRangeError, InvalidSpecError
from app.utils.logger import logger

MAX_CODES_PER_REQUEST = 4096

router = APIRouter(prefix="/api/codes", tags=["codes"])


@router.get("", response_model=CodesResponse)
def list_codes(
    batch: int = Query(..., ge=1),
    start: int = Query(..., ge=1),
    end: int = Query(..., ge=1),
    index_bits: int = Query(16, ge=1, le=63),
    primes: str = Query("3,5,7,11"),
    prefix_bits: int = Query(8, ge=1, le=63),
    prefix_prime: int = Query(3),
):
    """
    Codes of indices start..end (inclusive) in a batch, as +/- strings
    """
    if end - start + 1 > MAX_CODES_PER_REQUEST:
        raise InvalidRangeError(
            message=f"At most {MAX_CODES_PER_REQUEST} codes per request",
            detail=f"Requested {end - start + 1}",
        )
    try:
        prime_list = [int(p) for p in primes.split(",") if p.strip()]
    except ValueError:
        raise InvalidSpecError(message=f"Primes must be comma separated integers, got '{primes}'")
    layout = make_layout(index_bits, prime_list, prefix_bits, prefix_prime)
    rows = codebook(batch, start, end, layout)
    logger.debug(f"Served {len(rows)} codes for batch {batch}", extra={"start": start, "end": end})
    return CodesResponse(
        batch=batch,
        length=layout.length,
        codes=[CodeEntry(index=i, code=format_code(row)) for i, row in enumerate(rows, start=start)],
    )
