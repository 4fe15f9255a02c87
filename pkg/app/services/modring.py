"""
Exact arithmetic over Z_M with symmetric (zero-centred) representatives.

For even M the representatives are {-M/2, ..., (M-2)/2}; for odd M they are
{-(M-1)/2, ..., (M-1)/2}. Every value produced here lies in that set, so a
vector of Z_M^K is directly a point of the K-dimensional QAM grid.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import numpy as np

from app.core.errors import (
    DimensionMismatchError,
    InvalidModulusError,
    ModulusMismatchError,
    RingOverflowError,
)

logger = logging.getLogger(__name__)

_INT64_MAX = np.iinfo(np.int64).max


@dataclass(frozen=True, order=True)
class Modulus:
    """The ring size M (at least 2)."""

    M: int

    def __post_init__(self) -> None:
        if not isinstance(self.M, int) or self.M < 2:
            raise InvalidModulusError(f"modulus must be an integer >= 2, got {self.M!r}")

    def __int__(self) -> int:
        return self.M

    @property
    def low(self) -> int:
        """Smallest symmetric representative."""
        return -(self.M // 2)

    @property
    def high(self) -> int:
        """Largest symmetric representative."""
        return (self.M - 1) // 2

    def representatives(self) -> range:
        """The symmetric representative set in increasing order."""
        return range(self.low, self.high + 1)

    def reduce(self, a: int) -> int:
        return smod(a, self.M)

    def contains(self, a: int) -> bool:
        return self.low <= a <= self.high


def as_modulus(M: int | Modulus) -> Modulus:
    return M if isinstance(M, Modulus) else Modulus(int(M))


def smod(a: int, M: int) -> int:
    """Symmetric remainder of ``a`` modulo ``M`` as a plain int."""
    r = a % M
    if r > (M - 1) // 2:
        r -= M
    return r


@dataclass(frozen=True)
class RingElement:
    """An element of Z_M held by its symmetric representative."""

    value: int
    modulus: Modulus

    def __post_init__(self) -> None:
        if not self.modulus.contains(self.value):
            raise ValueError(
                f"{self.value} is not a symmetric representative mod {self.modulus.M}"
            )

    def __int__(self) -> int:
        return self.value

    def _other(self, other: RingElement | int) -> int:
        if isinstance(other, RingElement):
            if other.modulus != self.modulus:
                raise ModulusMismatchError(
                    f"mod {self.modulus.M} and mod {other.modulus.M} elements do not mix"
                )
            return other.value
        return int(other)

    def __add__(self, other: RingElement | int) -> RingElement:
        return symmetric_mod(self.value + self._other(other), self.modulus)

    def __sub__(self, other: RingElement | int) -> RingElement:
        return symmetric_mod(self.value - self._other(other), self.modulus)

    def __mul__(self, other: RingElement | int) -> RingElement:
        return symmetric_mod(self.value * self._other(other), self.modulus)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self) -> RingElement:
        return symmetric_mod(-self.value, self.modulus)


@dataclass(frozen=True)
class RingVector:
    """A tuple of Z_M entries sharing one modulus."""

    entries: tuple[int, ...]
    modulus: Modulus

    def __post_init__(self) -> None:
        bad = [e for e in self.entries if not self.modulus.contains(e)]
        if bad:
            raise ValueError(f"entries {bad} are not symmetric representatives mod {self.modulus.M}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __getitem__(self, index: int) -> RingElement:
        return RingElement(self.entries[index], self.modulus)

    @property
    def norm_sq(self) -> int:
        return sum(e * e for e in self.entries)


@dataclass(frozen=True)
class RingMatrix:
    """A rectangular array of Z_M entries; rows are stored as tuples."""

    rows: tuple[tuple[int, ...], ...]
    modulus: Modulus

    def __post_init__(self) -> None:
        if not self.rows:
            raise DimensionMismatchError("matrix has no rows")
        width = len(self.rows[0])
        if any(len(row) != width for row in self.rows):
            raise DimensionMismatchError("matrix rows have different lengths")
        for row in self.rows:
            if any(not self.modulus.contains(e) for e in row):
                raise ValueError(f"row {row} is not reduced mod {self.modulus.M}")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], M: int | Modulus) -> RingMatrix:
        modulus = as_modulus(M)
        return cls(
            rows=tuple(tuple(smod(int(e), modulus.M) for e in row) for row in rows),
            modulus=modulus,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0])

    @property
    def is_square(self) -> bool:
        n, m = self.shape
        return n == m

    def row(self, index: int) -> RingVector:
        return RingVector(self.rows[index], self.modulus)


def symmetric_mod(a: int, M: int | Modulus) -> RingElement:
    """Return the unique representative of ``a`` mod ``M`` in the symmetric set."""
    modulus = as_modulus(M)
    return RingElement(smod(int(a), modulus.M), modulus)


def is_unit(a: RingElement | int, M: int | Modulus | None = None) -> bool:
    """True iff ``a`` is invertible in Z_M, i.e. gcd(|a|, M) = 1."""
    if isinstance(a, RingElement):
        return gcd(abs(a.value), a.modulus.M) == 1
    if M is None:
        raise TypeError("is_unit needs a modulus when given a plain integer")
    return gcd(abs(int(a)), as_modulus(M).M) == 1


def inverse_mod(a: RingElement) -> RingElement:
    """Multiplicative inverse of a unit."""
    if not is_unit(a):
        raise ValueError(f"{a.value} is not a unit mod {a.modulus.M}")
    return symmetric_mod(pow(a.value, -1, a.modulus.M), a.modulus)


def units(M: int | Modulus) -> tuple[int, ...]:
    """All units of Z_M in symmetric order."""
    modulus = as_modulus(M)
    return tuple(a for a in modulus.representatives() if gcd(abs(a), modulus.M) == 1)


def det_mod(C: RingMatrix) -> RingElement:
    """Determinant over Z_M by memoised cofactor expansion, reducing at every step."""
    if not C.is_square:
        raise DimensionMismatchError(f"determinant needs a square matrix, got {C.shape}")
    return symmetric_mod(_det_rows(C.rows, C.modulus.M), C.modulus)


def _det_rows(rows: Sequence[Sequence[int]], M: int) -> int:
    n = len(rows)

    @lru_cache(maxsize=None)
    def expand(r: int, mask: int) -> int:
        # determinant of rows r.. restricted to the columns set in mask
        if r == n:
            return 1
        total = 0
        position = 0
        for c in range(n):
            if mask >> c & 1:
                entry = rows[r][c]
                if entry:
                    term = entry * expand(r + 1, mask & ~(1 << c))
                    total += -term if position & 1 else term
                position += 1
        return smod(total, M)

    return expand(0, (1 << n) - 1)


def adjugate_mod(C: RingMatrix) -> RingMatrix:
    """Classical adjugate over Z_M (transpose of the cofactor matrix)."""
    if not C.is_square:
        raise DimensionMismatchError(f"adjugate needs a square matrix, got {C.shape}")
    n = C.shape[0]
    M = C.modulus.M
    if n == 1:
        return RingMatrix.from_rows([[1]], C.modulus)
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [C.rows[r][c] for c in range(n) if c != j] for r in range(n) if r != i
            ]
            cofactor = _det_rows(minor, M)
            adj[j][i] = -cofactor if (i + j) & 1 else cofactor
    return RingMatrix.from_rows(adj, C.modulus)


def vec_mod(x: Iterable[int], M: int | Modulus) -> RingVector:
    """Reduce an integer vector componentwise; the Euclidean norm never grows."""
    modulus = as_modulus(M)
    return RingVector(tuple(smod(int(e), modulus.M) for e in x), modulus)


def _check_pair(u: RingVector, v: RingVector) -> None:
    if u.modulus != v.modulus:
        raise ModulusMismatchError(f"mod {u.modulus.M} and mod {v.modulus.M} vectors do not mix")
    if len(u) != len(v):
        raise DimensionMismatchError(f"vector lengths {len(u)} and {len(v)} differ")


def vec_add(u: RingVector, v: RingVector) -> RingVector:
    _check_pair(u, v)
    return vec_mod((a + b for a, b in zip(u.entries, v.entries)), u.modulus)


def scalar_mul(a: RingElement | int, v: RingVector) -> RingVector:
    if isinstance(a, RingElement):
        if a.modulus != v.modulus:
            raise ModulusMismatchError(
                f"scalar mod {a.modulus.M} and vector mod {v.modulus.M} do not mix"
            )
        a = a.value
    return vec_mod((a * e for e in v.entries), v.modulus)


def vec_mat_mul(w: RingVector, C: RingMatrix) -> RingVector:
    """Row vector times matrix: sum_k w_k * row_k, reduced mod M."""
    if w.modulus != C.modulus:
        raise ModulusMismatchError(f"vector mod {w.modulus.M} and matrix mod {C.modulus.M}")
    n, m = C.shape
    if len(w) != n:
        raise DimensionMismatchError(f"message length {len(w)} does not match {n} generators")
    return vec_mod(
        (sum(w.entries[k] * C.rows[k][j] for k in range(n)) for j in range(m)),
        C.modulus,
    )


def mat_scale(a: int, C: RingMatrix) -> RingMatrix:
    return RingMatrix.from_rows(([a * e for e in row] for row in C.rows), C.modulus)


def to_int64(values: Iterable[Iterable[int]] | Iterable[int]) -> np.ndarray:
    """Convert nested Python ints to an int64 array, refusing silent wrap-around."""
    array = np.array(values, dtype=object)
    if array.size and int(np.max(np.abs(array))) > _INT64_MAX:
        raise RingOverflowError("value exceeds int64 range")
    return array.astype(np.int64)


def require_int64_products(M: int, K: int) -> None:
    """Sums of K products of representatives must stay inside int64."""
    if K * (M // 2) ** 2 > _INT64_MAX:
        raise RingOverflowError(f"M={M}, K={K} codewords overflow int64 before reduction")


def smod_array(a: np.ndarray, M: int) -> np.ndarray:
    """Vectorised symmetric remainder."""
    low = -(M // 2)
    return (a - low) % M + low
