"""
Side information gain.

For a receiver knowing the messages in S, the squared-distance gain over the
full grid is d_S^2 (d_0 = 1), worth 10 log10(d_S^2) dB, and it is bought with
R_S = (|S|/K) log2 M bits per dimension of side information. The code's
figure of merit Γ is the smallest gain per bit over all proper nonempty S.

Inside searches gains are compared exactly: with M and K fixed,
10 log10(d1)/R1 < 10 log10(d2)/R2  <=>  d1^|S2| < d2^|S1|, so no logarithms
are needed to decide an argmin.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

from app.core.errors import InvalidSubsetError
from app.services.indexcode import IndexCode, Subset, format_subset, make_subset
from app.services.lattice import DistanceMethod, brute_force_distance, subset_distance

logger = logging.getLogger(__name__)

# First rows and Γ (dB/b/dim) of the best circulant codes found by exhaustive search.
BEST_CIRCULANT_CODES: dict[tuple[int, int], tuple[tuple[int, ...], float]] = {
    (4, 2): ((1, -2), 6.02),
    (4, 3): ((1, -2, -2), 4.52),
    (4, 4): ((1, 1, -1, 0), 3.01),
    (4, 5): ((1, -2, 1, -1, 0), 3.76),
    (8, 2): ((1, 2), 4.65),
    (8, 3): ((1, 2, 0), 3.49),
    (8, 4): ((1, 0, 3, 3), 4.01),
    (8, 5): ((1, -1, 2, 2, -3), 4.70),
    (16, 2): ((1, -4), 6.02),
    (16, 3): ((1, 2, -6), 5.24),
    (16, 4): ((1, 4, -6, -8), 5.57),
    (16, 5): ((1, -2, -5, -4, 5), 5.28),
    (32, 2): ((1, 6), 5.85),
    (32, 3): ((1, -10, 14), 5.73),
    (32, 4): ((1, 10, 14, 2), 5.80),
    (32, 5): ((1, -8, -5, 15, -6), 5.77),
    (64, 2): ((1, -28), 6.04),
    (64, 3): ((1, -26, -4), 5.73),
    (64, 4): ((1, -26, 20, 30), 5.85),
    # as listed; this row evaluates to 5.02 (d_{1}^2 = 4)
    (64, 5): ((1, 16, 18, -9, 21), 5.82),
}


@total_ordering
@dataclass(frozen=True)
class GainKey:
    """Exact, log-free stand-in for a gain of 10 log10(d_sq) / ((size/K) log2 M)."""

    d_sq: int
    size: int

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GainKey):
            return NotImplemented
        return self.d_sq**other.size == other.d_sq**self.size

    def __lt__(self, other: GainKey) -> bool:
        return self.d_sq**other.size < other.d_sq**self.size

    def __hash__(self) -> int:
        return hash(self.canonical())

    def canonical(self) -> tuple[int, Fraction]:
        """(r, e/size) with d_sq = r^e and r not a perfect power; equal keys agree."""
        if self.d_sq == 1:
            return 1, Fraction(0)
        for exponent in range(self.d_sq.bit_length(), 0, -1):
            root = round(self.d_sq ** (1 / exponent))
            for r in (root - 1, root, root + 1):
                if r > 1 and r**exponent == self.d_sq:
                    return r, Fraction(exponent, self.size)
        return self.d_sq, Fraction(1, self.size)

    def db(self, M: int, K: int) -> float:
        return 10 * math.log10(self.d_sq) / (self.size / K * math.log2(M))


@dataclass(frozen=True)
class GainEntry:
    subset: Subset
    rate: float
    d_sq: int
    gain_db: float
    method: DistanceMethod


@dataclass(frozen=True)
class GainReport:
    code: IndexCode
    per_message_rate: float
    entries: tuple[GainEntry, ...]
    gamma_db: float
    argmin: tuple[Subset, ...]
    key: GainKey


def rate_of_subset(code: IndexCode, S: Subset) -> float:
    """R_S = (|S|/K) log2 M bits per dimension."""
    S = make_subset(S, code.K, proper=False)
    return len(S) / code.K * math.log2(code.M)


def per_message_rate(code: IndexCode) -> float:
    return math.log2(code.M) / code.K


def proper_subsets(K: int) -> list[Subset]:
    """All nonempty proper subsets of {1..K}, largest first."""
    subsets = []
    for size in range(K - 1, 0, -1):
        subsets.extend(frozenset(c) for c in itertools.combinations(range(1, K + 1), size))
    return subsets


def cyclic_shift(S: Subset, K: int, shift: int = 1) -> Subset:
    return frozenset((k - 1 + shift) % K + 1 for k in S)


def shift_classes(K: int) -> list[list[Subset]]:
    """Proper nonempty subsets grouped into orbits under cyclic shifts."""
    seen: set[Subset] = set()
    classes = []
    for S in proper_subsets(K):
        if S in seen:
            continue
        orbit = sorted({cyclic_shift(S, K, s) for s in range(K)}, key=sorted)
        seen.update(orbit)
        classes.append(orbit)
    return classes


def _check_gain_subset(code: IndexCode, S: Subset) -> Subset:
    S = make_subset(S, code.K)
    if not S:
        raise InvalidSubsetError("gain is defined for nonempty side information only")
    return S


def subset_gain_db(code: IndexCode, S: Subset) -> float:
    """10 log10(d_S^2) / R_S with the exact integer d_S^2."""
    S = _check_gain_subset(code, S)
    distance = subset_distance(code, S)
    return GainKey(distance.d_sq, len(S)).db(code.M, code.K)


def _entry(code: IndexCode, S: Subset, d_sq: int, method: DistanceMethod) -> GainEntry:
    return GainEntry(
        subset=S,
        rate=rate_of_subset(code, S),
        d_sq=d_sq,
        gain_db=GainKey(d_sq, len(S)).db(code.M, code.K),
        method=method,
    )


def gamma(code: IndexCode, verify: bool = False, brute_force: bool = False) -> GainReport:
    """
    Evaluate Γ over all proper nonempty subsets.

    Circulant codes are evaluated on one subset per cyclic-shift class and the
    value is copied to the rest of the class; ``verify`` evaluates every subset.
    ``brute_force`` uses the exhaustive oracle instead of the lattice path.
    """
    logger.info(f"Evaluating side information gain for {code.describe()}")
    entries: dict[Subset, GainEntry] = {}
    for orbit in shift_classes(code.K):
        members = orbit if (verify or not code.circulant) else orbit[:1]
        for S in members:
            distance = brute_force_distance(code, S) if brute_force else subset_distance(code, S)
            entries[S] = _entry(code, S, distance.d_sq, distance.method)
        if not verify and code.circulant:
            head = entries[orbit[0]]
            for S in orbit[1:]:
                entries[S] = _entry(code, S, head.d_sq, head.method)

    ordered = tuple(entries[S] for S in proper_subsets(code.K))
    keys = {e.subset: GainKey(e.d_sq, len(e.subset)) for e in ordered}
    best = min(keys.values())
    argmin = tuple(e.subset for e in ordered if keys[e.subset] == best)
    report = GainReport(
        code=code,
        per_message_rate=per_message_rate(code),
        entries=ordered,
        gamma_db=best.db(code.M, code.K),
        argmin=argmin,
        key=best,
    )
    logger.info(
        f"Γ = {report.gamma_db:.2f} dB/b/dim for {code.describe()} "
        f"(argmin {', '.join(format_subset(S) for S in argmin)})"
    )
    return report


def gamma_key(code: IndexCode, floor: GainKey | None = None) -> GainKey | None:
    """
    Exact Γ key of a circulant code with early exit.

    Returns None as soon as some subset gain drops strictly below ``floor``.
    """
    best: GainKey | None = None
    classes = shift_classes(code.K) if code.circulant else [[S] for S in proper_subsets(code.K)]
    for orbit in classes:
        S = orbit[0]
        key = GainKey(subset_distance(code, S, confirm=False).d_sq, len(S))
        if floor is not None and key < floor:
            return None
        if best is None or key < best:
            best = key
    return best


def render_table(report: GainReport) -> str:
    """Per-subset table followed by an (M, K, first row, Γ) summary row."""
    lines = [f"{'S':<14}{'R_S':>8}{'d_S^2':>8}{'gain dB':>10}  method"]
    for entry in report.entries:
        lines.append(
            f"{format_subset(entry.subset):<14}{entry.rate:>8.3f}{entry.d_sq:>8d}"
            f"{entry.gain_db:>10.2f}  {entry.method.value}"
        )
    code = report.code
    row = "(" + ",".join(str(v) for v in code.first_row) + ")" if code.circulant else str(code.C.rows)
    lines.append("")
    lines.append(f"{'M':>4} {'K':>3}  {'first row':<24}{'Γ':>8}")
    lines.append(f"{code.M:>4} {code.K:>3}  {row:<24}{report.gamma_db:>8.2f}")
    return "\n".join(lines)
