"""
Exhaustive search for circulant encoding matrices with the largest Γ.

Candidates are first rows (v_1, ..., v_K). Scaling a whole code by a unit does
not change any subcode as a set, so v_1 may be restricted to one representative
per unit orbit of Z_M (the divisors of M, with M itself written as 0). The
remaining K-1 entries run lexicographically in symmetric order, -M/2 first.

The candidate index range is split into static blocks. Each block keeps its
own best bound, which can only be staler than the global one, so pruning
affects speed and never the result. Block results are merged by maximum Γ
followed by lexicographic order of the first rows.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from app.core.config import get_settings
from app.core.errors import BudgetExceededError, InvalidCodeError, InvalidConfigError
from app.schemas import CheckpointRecord, GainKeyRecord
from app.services.gain import GainKey, gamma_key
from app.services.indexcode import IndexCode, new_circulant, new_code
from app.services.modring import _det_rows, as_modulus, is_unit, smod

logger = logging.getLogger(__name__)

FirstRow = tuple[int, ...]


class FirstEntryPolicy(str, Enum):
    ORBIT_REPRESENTATIVES = "orbit_representatives"
    ALL = "all"


class TiePolicy(str, Enum):
    FIRST = "first"
    ALL = "all"


@dataclass(frozen=True)
class SearchSpec:
    M: int
    K: int
    first_entry_policy: FirstEntryPolicy = FirstEntryPolicy.ORBIT_REPRESENTATIVES
    tie_policy: TiePolicy = TiePolicy.FIRST
    budget: int | None = None
    tie_cap: int | None = None
    threads: int = 1
    prune: bool = True
    full_matrix: bool = False

    def __post_init__(self) -> None:
        if self.M < 2 or self.K < 2:
            raise InvalidConfigError(f"search needs M >= 2 and K >= 2, got M={self.M} K={self.K}")
        if self.threads < 1:
            raise InvalidConfigError(f"threads must be positive, got {self.threads}")

    def resolved_budget(self) -> int:
        return self.budget if self.budget is not None else get_settings().search_budget

    def resolved_tie_cap(self) -> int:
        return self.tie_cap if self.tie_cap is not None else get_settings().tie_cap

    def spec_hash(self) -> str:
        """Identity of the candidate space and result rules (not of budgets or threads)."""
        payload = {
            "M": self.M,
            "K": self.K,
            "first_entry_policy": self.first_entry_policy.value,
            "tie_policy": self.tie_policy.value,
            "full_matrix": self.full_matrix,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class SearchResult:
    spec: SearchSpec
    best_gamma_db: float | None
    best_key: GainKey | None
    best_codes: list[FirstRow]
    candidates_examined: int
    candidates_valid: int
    elapsed_seconds: float
    complete: bool = True
    next_index: int = 0
    total_candidates: int = 0


@dataclass
class _BlockResult:
    best_key: GainKey | None = None
    best_codes: list[FirstRow] = field(default_factory=list)
    examined: int = 0
    valid: int = 0


def orbit_representatives(M: int) -> tuple[int, ...]:
    """One element per orbit of Z_M under unit multiplication: divisors of M, then 0."""
    modulus = as_modulus(M)
    divisors = [d for d in range(1, modulus.M) if modulus.M % d == 0]
    return tuple(divisors) + (0,)


def first_entries(spec: SearchSpec) -> list[int]:
    if spec.first_entry_policy is FirstEntryPolicy.ORBIT_REPRESENTATIVES:
        return [smod(d, spec.M) for d in orbit_representatives(spec.M)]
    return list(as_modulus(spec.M).representatives())


def _free_entries(spec: SearchSpec) -> int:
    return spec.K * spec.K - 1 if spec.full_matrix else spec.K - 1


def candidate_count(spec: SearchSpec) -> int:
    return len(first_entries(spec)) * spec.M ** _free_entries(spec)


def candidate_at(spec: SearchSpec, index: int, heads: list[int] | None = None) -> FirstRow:
    """Entries of candidate ``index``: first row for circulant search, flattened matrix otherwise."""
    heads = heads if heads is not None else first_entries(spec)
    free = _free_entries(spec)
    span = spec.M**free
    head, rest = divmod(index, span)
    low = -(spec.M // 2)
    digits = []
    for _ in range(free):
        rest, digit = divmod(rest, spec.M)
        digits.append(low + digit)
    return (heads[head], *reversed(digits))


def build_candidate(spec: SearchSpec, entries: FirstRow) -> IndexCode:
    if spec.full_matrix:
        rows = [entries[i * spec.K : (i + 1) * spec.K] for i in range(spec.K)]
        return new_code(spec.M, rows)
    return new_circulant(spec.M, spec.K, entries)


def _unit_det(spec: SearchSpec, entries: FirstRow) -> bool:
    if spec.full_matrix:
        rows = [list(entries[i * spec.K : (i + 1) * spec.K]) for i in range(spec.K)]
    else:
        rows = [[entries[(j - i) % spec.K] for j in range(spec.K)] for i in range(spec.K)]
    return is_unit(_det_rows(rows, spec.M), spec.M)


def _offer(block: _BlockResult, key: GainKey, entries: FirstRow, tie_cap: int) -> None:
    if block.best_key is None or block.best_key < key:
        block.best_key = key
        block.best_codes = [entries]
    elif key == block.best_key:
        bisect.insort(block.best_codes, entries)
        del block.best_codes[tie_cap:]


def _scan_block(spec: SearchSpec, start: int, stop: int) -> _BlockResult:
    """Evaluate candidates [start, stop) with a block-local pruning bound."""
    block = _BlockResult()
    heads = first_entries(spec)
    tie_cap = spec.resolved_tie_cap()
    for index in range(start, stop):
        entries = candidate_at(spec, index, heads)
        block.examined += 1
        if not _unit_det(spec, entries):
            continue
        block.valid += 1
        try:
            code = build_candidate(spec, entries)
        except InvalidCodeError:
            continue
        floor = block.best_key if spec.prune else None
        key = gamma_key(code, floor=floor)
        if key is not None:
            _offer(block, key, entries, tie_cap)
    return block


def _merge(blocks: list[_BlockResult], tie_cap: int) -> _BlockResult:
    merged = _BlockResult()
    for block in blocks:
        merged.examined += block.examined
        merged.valid += block.valid
        if block.best_key is None:
            continue
        for entries in block.best_codes:
            _offer(merged, block.best_key, entries, tie_cap)
    return merged


def _partition(start: int, stop: int, parts: int) -> list[tuple[int, int]]:
    size = max(1, -(-(stop - start) // parts))
    return [(lo, min(lo + size, stop)) for lo in range(start, stop, size)]


def _run_range(
    spec: SearchSpec, start: int, stop: int, pool: ProcessPoolExecutor | None
) -> _BlockResult:
    if stop <= start:
        return _BlockResult()
    if pool is None:
        return _scan_block(spec, start, stop)
    ranges = _partition(start, stop, spec.threads * 4)
    blocks = list(pool.map(_scan_block, [spec] * len(ranges), *zip(*ranges)))
    return _merge(blocks, spec.resolved_tie_cap())


def _load_checkpoint(path: Path, spec: SearchSpec) -> tuple[int, _BlockResult]:
    if not path.exists():
        return 0, _BlockResult()
    record = CheckpointRecord.model_validate_json(path.read_text())
    if record.spec_hash != spec.spec_hash():
        raise InvalidConfigError(f"checkpoint {path} belongs to a different search")
    block = _BlockResult(
        best_key=record.best_key.to_key() if record.best_key else None,
        best_codes=[tuple(row) for row in record.best_codes],
        examined=record.examined,
        valid=record.valid,
    )
    logger.info(f"Resuming search {record.spec_hash} from candidate {record.next_index}")
    return record.next_index, block


def _save_checkpoint(path: Path, spec: SearchSpec, next_index: int, block: _BlockResult) -> None:
    record = CheckpointRecord(
        spec_hash=spec.spec_hash(),
        next_index=next_index,
        best_key=(
            GainKeyRecord(d_sq=block.best_key.d_sq, size=block.best_key.size)
            if block.best_key
            else None
        ),
        best_codes=[list(row) for row in block.best_codes],
        examined=block.examined,
        valid=block.valid,
    )
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(record.model_dump_json(indent=2))
    tmp.replace(path)


def search_circulant(spec: SearchSpec, checkpoint: Path | str | None = None) -> SearchResult:
    """
    Exhaustive maximisation of Γ over circulant (or, for tiny sizes, all) matrices.

    Without a checkpoint the whole space must fit the budget. With one, at most
    ``budget`` candidates are examined per call and progress is saved, so a long
    search is finished by calling again with the same checkpoint file.
    """
    started = time.perf_counter()
    total = candidate_count(spec)
    budget = spec.resolved_budget()
    tie_cap = spec.resolved_tie_cap()
    path = Path(checkpoint) if checkpoint is not None else None

    start, merged = (0, _BlockResult()) if path is None else _load_checkpoint(path, spec)
    remaining = total - start
    if remaining > budget and path is None:
        raise BudgetExceededError("search candidates", remaining, budget)
    stop = min(total, start + budget)

    logger.info(
        f"Searching M={spec.M} K={spec.K}: candidates {start}..{stop} of {total} "
        f"({spec.first_entry_policy.value}, threads={spec.threads})"
    )
    interval = get_settings().checkpoint_interval if path is not None else stop - start
    cursor = start
    # one pool for the whole call; checkpoint chunks reuse its workers
    pool = None
    if spec.threads > 1 and stop > start:
        pool = ProcessPoolExecutor(max_workers=spec.threads)
    try:
        while cursor < stop:
            chunk_stop = min(stop, cursor + max(1, interval))
            merged = _merge([merged, _run_range(spec, cursor, chunk_stop, pool)], tie_cap)
            cursor = chunk_stop
            if path is not None:
                _save_checkpoint(path, spec, cursor, merged)
    finally:
        if pool is not None:
            pool.shutdown()

    complete = cursor >= total
    if not complete:
        logger.warning(f"Search budget reached at candidate {cursor} of {total}; result is partial")

    codes = merged.best_codes[:1] if spec.tie_policy is TiePolicy.FIRST else merged.best_codes
    best_db = merged.best_key.db(spec.M, spec.K) if merged.best_key else None
    result = SearchResult(
        spec=spec,
        best_gamma_db=best_db,
        best_key=merged.best_key,
        best_codes=list(codes),
        candidates_examined=merged.examined,
        candidates_valid=merged.valid,
        elapsed_seconds=time.perf_counter() - started,
        complete=complete,
        next_index=cursor,
        total_candidates=total,
    )
    if best_db is not None:
        logger.info(f"Best Γ for M={spec.M} K={spec.K}: {best_db:.2f} dB/b/dim, {codes[0]}")
    return result
