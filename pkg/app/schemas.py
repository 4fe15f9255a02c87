"""
JSON records shared by the CLI, the HTTP routers and the Celery tasks.

Every record the CLI prints with ``--json`` can be read back by
``load_code_json`` so evaluation, codec and simulation runs can be chained.
"""

from __future__ import annotations

import json
from typing import TYPE_CHECKING, Any, Literal

from pydantic import BaseModel, ValidationError, model_validator

from app.core.errors import InvalidCodeError, InvalidConfigError
from app.services.awgnsim import SimResult
from app.services.gain import GainKey, GainReport
from app.services.indexcode import IndexCode, new_circulant, new_code

if TYPE_CHECKING:
    from app.services.search import SearchResult, SearchSpec


class CodeRecord(BaseModel):
    M: int
    K: int
    first_row: list[int] | None = None
    matrix: list[list[int]] | None = None

    @model_validator(mode="after")
    def _one_description(self) -> CodeRecord:
        if self.first_row is None and self.matrix is None:
            raise ValueError("a code needs either first_row or matrix")
        return self

    def to_code(self) -> IndexCode:
        if self.first_row is not None:
            return new_circulant(self.M, self.K, self.first_row)
        assert self.matrix is not None
        if len(self.matrix) != self.K:
            raise InvalidCodeError(f"matrix has {len(self.matrix)} rows, expected K={self.K}")
        return new_code(self.M, self.matrix)

    @classmethod
    def from_code(cls, code: IndexCode) -> CodeRecord:
        return cls(
            M=code.M,
            K=code.K,
            first_row=list(code.first_row) if code.circulant else None,
            matrix=[list(row) for row in code.generators],
        )


class GainKeyRecord(BaseModel):
    d_sq: int
    size: int

    def to_key(self) -> GainKey:
        return GainKey(d_sq=self.d_sq, size=self.size)


class GainEntryRecord(BaseModel):
    subset: list[int]
    rate: float
    d_sq: int
    gain_db: float
    method: str


class GainReportRecord(BaseModel):
    code: CodeRecord
    per_message_rate: float
    entries: list[GainEntryRecord]
    gamma_db: float
    argmin: list[list[int]]

    @classmethod
    def from_report(cls, report: GainReport) -> GainReportRecord:
        return cls(
            code=CodeRecord.from_code(report.code),
            per_message_rate=report.per_message_rate,
            entries=[
                GainEntryRecord(
                    subset=sorted(e.subset),
                    rate=e.rate,
                    d_sq=e.d_sq,
                    gain_db=e.gain_db,
                    method=e.method.value,
                )
                for e in report.entries
            ],
            gamma_db=report.gamma_db,
            argmin=[sorted(S) for S in report.argmin],
        )


class SearchSpecRecord(BaseModel):
    M: int
    K: int
    first_entry_policy: Literal["orbit_representatives", "all"] = "orbit_representatives"
    tie_policy: Literal["first", "all"] = "first"
    budget: int | None = None
    threads: int = 1
    prune: bool = True
    full_matrix: bool = False

    def to_spec(self) -> SearchSpec:
        from app.services.search import FirstEntryPolicy, SearchSpec, TiePolicy

        return SearchSpec(
            M=self.M,
            K=self.K,
            first_entry_policy=FirstEntryPolicy(self.first_entry_policy),
            tie_policy=TiePolicy(self.tie_policy),
            budget=self.budget,
            threads=self.threads,
            prune=self.prune,
            full_matrix=self.full_matrix,
        )


class SearchResultRecord(BaseModel):
    spec: SearchSpecRecord
    best_gamma_db: float | None
    best_key: GainKeyRecord | None = None
    best_codes: list[list[int]]
    candidates_examined: int
    candidates_valid: int
    elapsed_seconds: float
    complete: bool
    next_index: int = 0
    total_candidates: int = 0

    @classmethod
    def from_result(cls, result: SearchResult) -> SearchResultRecord:
        spec = result.spec
        return cls(
            spec=SearchSpecRecord(
                M=spec.M,
                K=spec.K,
                first_entry_policy=spec.first_entry_policy.value,
                tie_policy=spec.tie_policy.value,
                budget=spec.budget,
                threads=spec.threads,
                prune=spec.prune,
                full_matrix=spec.full_matrix,
            ),
            best_gamma_db=result.best_gamma_db,
            best_key=(
                GainKeyRecord(d_sq=result.best_key.d_sq, size=result.best_key.size)
                if result.best_key
                else None
            ),
            best_codes=[list(row) for row in result.best_codes],
            candidates_examined=result.candidates_examined,
            candidates_valid=result.candidates_valid,
            elapsed_seconds=result.elapsed_seconds,
            complete=result.complete,
            next_index=result.next_index,
            total_candidates=result.total_candidates,
        )

    def best_code(self) -> IndexCode:
        if not self.best_codes:
            raise InvalidCodeError("search result holds no code")
        entries = self.best_codes[0]
        if self.spec.full_matrix:
            K = self.spec.K
            return new_code(self.spec.M, [entries[i * K : (i + 1) * K] for i in range(K)])
        return new_circulant(self.spec.M, self.spec.K, entries)


class CheckpointRecord(BaseModel):
    spec_hash: str
    next_index: int
    best_key: GainKeyRecord | None = None
    best_codes: list[list[int]] = []
    examined: int = 0
    valid: int = 0


class ChannelConfigRecord(BaseModel):
    snr_db_points: list[float]
    trials_per_point: int
    seed: int
    snr_convention: str
    max_errors: int | None = None
    batch_size: int | None = None
    threads: int = 1


class SimPointRecord(BaseModel):
    subset: list[int]
    snr_db: float
    trials: int
    errors: int
    rate: float
    stderr: float
    per_message_rates: dict[int, float]
    stopped_early: bool


class SimResultRecord(BaseModel):
    code: CodeRecord
    config: ChannelConfigRecord
    rng: str
    points: list[SimPointRecord]

    @classmethod
    def from_results(cls, results: list[SimResult]) -> SimResultRecord:
        if not results:
            raise InvalidConfigError("no simulation results to record")
        head = results[0]
        cfg = head.config
        return cls(
            code=CodeRecord.from_code(head.code),
            config=ChannelConfigRecord(
                snr_db_points=list(cfg.snr_db_points),
                trials_per_point=cfg.trials_per_point,
                seed=cfg.seed,
                snr_convention=cfg.snr_convention.value,
                max_errors=cfg.resolved_max_errors(),
                batch_size=cfg.resolved_batch_size(),
                threads=cfg.threads,
            ),
            rng=head.rng,
            points=[
                SimPointRecord(
                    subset=sorted(result.subset),
                    snr_db=p.snr_db,
                    trials=p.trials,
                    errors=p.errors,
                    rate=p.rate,
                    stderr=p.stderr,
                    per_message_rates=p.per_message_rates,
                    stopped_early=p.stopped_early,
                )
                for result in results
                for p in result.points
            ],
        )


def code_from_payload(payload: dict[str, Any]) -> IndexCode:
    """A code from any record this package emits."""
    try:
        if "best_codes" in payload and "spec" in payload:
            return SearchResultRecord.model_validate(payload).best_code()
        if isinstance(payload.get("code"), dict):
            payload = payload["code"]
        return CodeRecord.model_validate(payload).to_code()
    except ValidationError as exc:
        raise InvalidConfigError(f"not a code record: {exc.errors()[0]['msg']}") from exc


def load_code_json(text: str) -> IndexCode:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise InvalidConfigError("expected a JSON object")
    return code_from_payload(payload)


class EncodeRequest(BaseModel):
    code: CodeRecord
    message: list[int]


class DecodeRequest(BaseModel):
    code: CodeRecord
    received: list[float]
    subset: list[int] = []
    side_values: list[int] | None = None


class SimulateRequest(BaseModel):
    code: CodeRecord
    subsets: list[list[int]] = [[]]
    snr_db_points: list[float]
    trials_per_point: int
    seed: int
    snr_convention: Literal["noise_variance_per_dim", "es_over_n0"] = "noise_variance_per_dim"
    max_errors: int | None = None
    threads: int = 1


class JobRecord(BaseModel):
    job_id: str
    status: str
    result: dict[str, Any] | None = None
    error: str | None = None
