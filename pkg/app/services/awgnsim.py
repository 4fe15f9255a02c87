"""
Monte-Carlo simulation of the Gaussian broadcast channel.

A receiver (SNR, S) sees y = x + offset + z with z i.i.d. Gaussian and decodes
by exhaustive nearest-point search over the subcode consistent with its true
side information a_S. Counted errors are message errors: a trial is wrong when
any unknown message w_k, k not in S, decodes wrongly. Per-message rates are
tallied alongside.

Randomness comes from numpy's Philox counter-based generator. Every batch of
trials owns a substream derived from (seed, SNR point, batch), and batches are
folded in index order, so results do not depend on the thread count.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TextIO

import numpy as np
from scipy.special import erfc

from app.core.config import get_settings
from app.core.errors import InvalidConfigError, NotBracketedError, RateNotResolvedError
from app.services.indexcode import IndexCode, SideInfoSet, Subset, format_subset, make_subset, subcode_arrays
from app.services.lattice import subset_distance
from app.services.modring import smod_array, to_int64

logger = logging.getLogger(__name__)

RNG_NAME = "numpy.random.Philox"
# cap on floats held by one decoding chunk (trials x subcode points x K)
_DECODE_CHUNK = 2**22


class SnrConvention(str, Enum):
    NOISE_VARIANCE_PER_DIM = "noise_variance_per_dim"
    ES_OVER_N0 = "es_over_n0"


@dataclass(frozen=True)
class ChannelConfig:
    snr_db_points: tuple[float, ...]
    trials_per_point: int
    seed: int
    snr_convention: SnrConvention = SnrConvention.NOISE_VARIANCE_PER_DIM
    max_errors: int | None = None
    batch_size: int | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        if self.trials_per_point < 1:
            raise InvalidConfigError(f"need at least one trial per point, got {self.trials_per_point}")
        if not self.snr_db_points:
            raise InvalidConfigError("no SNR points given")
        if not all(math.isfinite(s) for s in self.snr_db_points):
            raise InvalidConfigError(f"SNR points must be finite, got {self.snr_db_points}")
        if self.threads < 1:
            raise InvalidConfigError(f"threads must be positive, got {self.threads}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def resolved_max_errors(self) -> int:
        """Errors after which a point stops; 0 disables early stopping."""
        return self.max_errors if self.max_errors is not None else get_settings().max_errors_per_point

    def resolved_batch_size(self) -> int:
        return self.batch_size if self.batch_size is not None else get_settings().sim_batch_size


@dataclass(frozen=True)
class PointResult:
    snr_db: float
    trials: int
    errors: int
    per_message_errors: dict[int, int]
    stopped_early: bool = False

    @property
    def rate(self) -> float:
        return self.errors / self.trials

    @property
    def stderr(self) -> float:
        p = self.rate
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def per_message_rates(self) -> dict[int, float]:
        return {k: e / self.trials for k, e in self.per_message_errors.items()}


@dataclass
class SimResult:
    code: IndexCode
    subset: Subset
    config: ChannelConfig
    points: list[PointResult] = field(default_factory=list)
    rng: str = RNG_NAME

    @property
    def seed(self) -> int:
        return self.config.seed

    def curve(self) -> tuple[np.ndarray, np.ndarray]:
        """(snr_db, rate) sorted by SNR."""
        ordered = sorted(self.points, key=lambda p: p.snr_db)
        return (
            np.array([p.snr_db for p in ordered], dtype=float),
            np.array([p.rate for p in ordered], dtype=float),
        )


def transmit_offset(code: IndexCode) -> np.ndarray:
    """Per-coordinate shift that makes the constellation zero-mean."""
    return np.full(code.K, 0.5 if code.M % 2 == 0 else 0.0)


def average_energy_per_dim(M: int) -> float:
    """Second moment of centred M-PAM with unit spacing."""
    return (M * M - 1) / 12


def noise_variance(M: int, snr_db: float, convention: SnrConvention) -> float:
    snr = 10 ** (snr_db / 10)
    if convention is SnrConvention.ES_OVER_N0:
        return average_energy_per_dim(M) / snr
    return 1 / snr


def _q(x: float) -> float:
    return 0.5 * float(erfc(x / math.sqrt(2)))


def pam_symbol_error(M: int, sigma_sq: float) -> float:
    """Exact M-PAM symbol error probability with unit spacing."""
    return 2 * (1 - 1 / M) * _q(1 / (2 * math.sqrt(sigma_sq)))


def union_bound_ser(
    code: IndexCode,
    snr_db: float,
    convention: SnrConvention = SnrConvention.NOISE_VARIANCE_PER_DIM,
) -> float:
    """Nearest-neighbour union bound on the message error rate with no side information."""
    return min(1.0, code.K * pam_symbol_error(code.M, noise_variance(code.M, snr_db, convention)))


def exact_grid_ser(
    code: IndexCode,
    snr_db: float,
    convention: SnrConvention = SnrConvention.NOISE_VARIANCE_PER_DIM,
) -> float:
    """Message error rate of the full grid: the K coordinates err independently."""
    p = pam_symbol_error(code.M, noise_variance(code.M, snr_db, convention))
    return 1 - (1 - p) ** code.K


def predicted_gain_db(code: IndexCode, S: Subset) -> float:
    """High-SNR shift of the S curve relative to S = ∅, i.e. 10 log10(d_S^2)."""
    S = make_subset(S, code.K)
    if not S:
        return 0.0
    return 10 * math.log10(subset_distance(code, S).d_sq)


@dataclass(frozen=True)
class _Receiver:
    """Precomputed arrays for one (code, S) receiver."""

    M: int
    K: int
    C: np.ndarray
    known: tuple[int, ...]
    unknown: tuple[int, ...]
    W: np.ndarray  # unknown-message grid, one row per subcode point
    X: np.ndarray  # unreduced partial codewords W G_unknown
    G_known: np.ndarray
    offset: np.ndarray

    @classmethod
    def build(cls, code: IndexCode, S: Subset) -> _Receiver:
        side = SideInfoSet(S=S)
        W, X = subcode_arrays(code, side)
        known = side.indices
        G_known = to_int64([code.generators[k - 1] for k in known]).reshape(len(known), code.K)
        return cls(
            M=code.M,
            K=code.K,
            C=to_int64(code.generators),
            known=tuple(k - 1 for k in known),
            unknown=tuple(k - 1 for k in side.complement(code.K)),
            W=W,
            X=X,
            G_known=G_known,
            offset=transmit_offset(code),
        )

    def decode(self, w: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Decoded unknown messages for each trial, given the true known ones in ``w``."""
        t = w[:, list(self.known)] @ self.G_known
        decoded = np.empty((len(y), len(self.unknown)), dtype=np.int64)
        rows = max(1, _DECODE_CHUNK // (len(self.X) * self.K))
        for start in range(0, len(y), rows):
            stop = start + rows
            points = smod_array(self.X[None, :, :] + t[start:stop, None, :], self.M)
            distances = ((points - y[start:stop, None, :]) ** 2).sum(axis=2)
            decoded[start:stop] = self.W[np.argmin(distances, axis=1)]
        return decoded


def _substream(seed: int, point_index: int, batch_index: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(seed, spawn_key=(point_index, batch_index))
    return np.random.Generator(np.random.Philox(sequence))


def _run_batch(
    receiver: _Receiver,
    seed: int,
    point_index: int,
    batch_index: int,
    size: int,
    sigma: float,
) -> tuple[int, np.ndarray]:
    rng = _substream(seed, point_index, batch_index)
    low = -(receiver.M // 2)
    w = rng.integers(low, low + receiver.M, size=(size, receiver.K), dtype=np.int64)
    noise = rng.standard_normal((size, receiver.K)) * sigma
    x = smod_array(w @ receiver.C, receiver.M)
    y = x + receiver.offset + noise
    decoded = receiver.decode(w, y - receiver.offset)
    wrong = decoded != w[:, list(receiver.unknown)]
    return int(wrong.any(axis=1).sum()), wrong.sum(axis=0)


def _simulate_point(
    receiver: _Receiver, cfg: ChannelConfig, point_index: int, snr_db: float, pool: ThreadPoolExecutor | None
) -> PointResult:
    sigma = math.sqrt(noise_variance(receiver.M, snr_db, cfg.snr_convention))
    batch = cfg.resolved_batch_size()
    max_errors = cfg.resolved_max_errors()
    sizes = [min(batch, cfg.trials_per_point - start) for start in range(0, cfg.trials_per_point, batch)]

    trials = errors = 0
    per_message = np.zeros(len(receiver.unknown), dtype=np.int64)
    stopped = False
    window = cfg.threads
    for first in range(0, len(sizes), window):
        indices = range(first, min(first + window, len(sizes)))
        args = [(receiver, cfg.seed, point_index, i, sizes[i], sigma) for i in indices]
        if pool is None:
            outcomes = [_run_batch(*a) for a in args]
        else:
            outcomes = list(pool.map(lambda a: _run_batch(*a), args))
        for i, (batch_errors, batch_per_message) in zip(indices, outcomes):
            trials += sizes[i]
            errors += batch_errors
            per_message += batch_per_message
            if max_errors and errors >= max_errors:
                stopped = i + 1 < len(sizes)
                break
        if max_errors and errors >= max_errors:
            break

    return PointResult(
        snr_db=snr_db,
        trials=trials,
        errors=errors,
        per_message_errors={k + 1: int(e) for k, e in zip(receiver.unknown, per_message)},
        stopped_early=stopped,
    )


def simulate(code: IndexCode, S: Iterable[int], cfg: ChannelConfig) -> SimResult:
    """Message error rate of receiver (SNR, S) at every SNR point of ``cfg``."""
    S = make_subset(S, code.K)
    receiver = _Receiver.build(code, S)
    logger.info(
        f"Simulating {code.describe()} S={format_subset(S)}: {len(cfg.snr_db_points)} points, "
        f"{cfg.trials_per_point} trials, seed={cfg.seed}, {cfg.snr_convention.value}"
    )
    result = SimResult(code=code, subset=S, config=cfg)
    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    try:
        for point_index, snr_db in enumerate(cfg.snr_db_points):
            point = _simulate_point(receiver, cfg, point_index, float(snr_db), pool)
            logger.debug(
                f"S={format_subset(S)} {snr_db:.2f} dB: {point.errors}/{point.trials} "
                f"(rate {point.rate:.3e})"
            )
            result.points.append(point)
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def snr_at_rate(result: SimResult, target_rate: float) -> float:
    """SNR (dB) where the curve crosses ``target_rate``, interpolating log10(rate) linearly."""
    if not 0 < target_rate < 1:
        raise InvalidConfigError(f"target rate must lie in (0, 1), got {target_rate}")
    snr, rate = result.curve()
    target = math.log10(target_rate)
    for i in range(len(snr) - 1):
        hi, lo = rate[i], rate[i + 1]
        if hi >= target_rate >= lo and lo > 0:
            if hi == lo:
                return float(snr[i])
            log_hi, log_lo = math.log10(hi), math.log10(lo)
            fraction = (log_hi - target) / (log_hi - log_lo)
            return float(snr[i] + fraction * (snr[i + 1] - snr[i]))
        if lo == 0 and hi >= target_rate:
            if hi == target_rate:
                return float(snr[i])
            # zero observed errors only bounds the rate from above
            raise RateNotResolvedError(
                f"curve for S={format_subset(result.subset)} sees no errors at {snr[i + 1]:g} dB; "
                f"more trials are needed to resolve rate {target_rate:g}"
            )
    raise NotBracketedError(
        f"curve for S={format_subset(result.subset)} does not bracket rate {target_rate:g}"
    )


def snr_gap_at(results_a: SimResult, results_b: SimResult, target_rate: float) -> float:
    """How many dB more curve ``a`` needs than curve ``b`` to reach ``target_rate``."""
    return snr_at_rate(results_a, target_rate) - snr_at_rate(results_b, target_rate)


def capacity_min_snr_db(code_rates: Sequence[float], S: Iterable[int]) -> float:
    """
    Smallest SNR at which receiver (SNR, S) can decode everything it lacks.

    1/2 log2(1 + SNR) must exceed sum_k R_k - R_S. Returns -inf when nothing
    is missing, meaning there is no minimum SNR.
    """
    if any(r < 0 for r in code_rates):
        raise InvalidConfigError(f"rates must be nonnegative, got {list(code_rates)}")
    S = make_subset(S, len(code_rates), proper=False)
    excess = sum(code_rates) - sum(code_rates[k - 1] for k in S)
    if excess <= 1e-12:
        return -math.inf
    return 10 * math.log10(2 ** (2 * excess) - 1)


CSV_COLUMNS = ("S", "snr_db", "trials", "errors", "rate", "stderr")


def write_csv(results: Iterable[SimResult], target: Path | str | TextIO) -> None:
    """Write curves as S,snr_db,trials,errors,rate,stderr rows."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as handle:
            write_csv(results, handle)
        return
    writer = csv.writer(target)
    writer.writerow(CSV_COLUMNS)
    for result in results:
        for point in result.points:
            writer.writerow(
                [
                    format_subset(result.subset),
                    f"{point.snr_db:g}",
                    point.trials,
                    point.errors,
                    f"{point.rate:.6e}",
                    f"{point.stderr:.6e}",
                ]
            )
