"""
Z_M-linear index codes.

A code is a K x K encoding matrix C over Z_M whose rows are the generators
c_1, ..., c_K. The encoder maps a message tuple w to x = sum_k w_k c_k mod M,
which labels the K-dimensional QAM grid Z_M^K. A receiver that already knows
the messages indexed by S decodes within the expurgated subcode consistent with
those values.

Message and subset indices are 1-based throughout, matching how receivers are
usually written (S = {1}, {2}, ...).
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from app.core.config import get_settings
from app.core.errors import (
    BudgetExceededError,
    DimensionMismatchError,
    InvalidCodeError,
    InvalidSubsetError,
)
from app.services.modring import (
    Modulus,
    RingMatrix,
    RingVector,
    adjugate_mod,
    as_modulus,
    det_mod,
    inverse_mod,
    is_unit,
    mat_scale,
    require_int64_products,
    smod,
    smod_array,
    to_int64,
    vec_mat_mul,
    vec_mod,
)

logger = logging.getLogger(__name__)

Subset = frozenset[int]
MessageTuple = RingVector
Codeword = RingVector


def circulant_rows(first_row: Sequence[int]) -> list[list[int]]:
    """Row k+1 is the right cyclic shift of row k."""
    K = len(first_row)
    return [[first_row[(j - i) % K] for j in range(K)] for i in range(K)]


@dataclass(frozen=True)
class IndexCode:
    """A validated encoding matrix; row k is the generator of message k."""

    C: RingMatrix
    circulant: bool = False
    inverse: RingMatrix = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.C.is_square:
            raise InvalidCodeError(f"encoding matrix must be square, got {self.C.shape}")
        if self.K < 2:
            raise InvalidCodeError(f"need at least two messages, got K={self.K}")
        if self.circulant and [list(r) for r in self.C.rows] != circulant_rows(self.C.rows[0]):
            raise InvalidCodeError("matrix flagged circulant is not a circulant matrix")
        det = det_mod(self.C)
        if not is_unit(det):
            raise InvalidCodeError(
                f"not uniquely decodable: det(C) = {det.value} mod {self.M} is not a unit "
                f"(det(C) not a unit)"
            )
        inv_det = inverse_mod(det)
        object.__setattr__(self, "inverse", mat_scale(inv_det.value, adjugate_mod(self.C)))

    @property
    def modulus(self) -> Modulus:
        return self.C.modulus

    @property
    def M(self) -> int:
        return self.C.modulus.M

    @property
    def K(self) -> int:
        return len(self.C.rows)

    @property
    def first_row(self) -> tuple[int, ...]:
        return self.C.rows[0]

    @property
    def generators(self) -> tuple[tuple[int, ...], ...]:
        return self.C.rows

    def scaled(self, unit: int) -> IndexCode:
        """The code with every generator multiplied by ``unit``."""
        return IndexCode(C=mat_scale(unit, self.C), circulant=self.circulant)

    def describe(self) -> str:
        if self.circulant:
            return f"M={self.M} K={self.K} row={self.first_row}"
        return f"M={self.M} K={self.K} matrix={self.C.rows}"


@dataclass(frozen=True)
class SideInfoSet:
    """Indices S known a priori, optionally with their values a_S (ordered by index)."""

    S: Subset
    values: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.values is not None and len(self.values) != len(self.S):
            raise InvalidSubsetError(
                f"side information has {len(self.values)} values for {len(self.S)} indices"
            )

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.S))

    def complement(self, K: int) -> tuple[int, ...]:
        return tuple(k for k in range(1, K + 1) if k not in self.S)

    def reduced(self, M: int) -> SideInfoSet:
        """The same side information with a_S reduced to symmetric representatives."""
        if self.values is None:
            return self
        return SideInfoSet(S=self.S, values=tuple(smod(int(v), M) for v in self.values))

    def value_of(self, k: int) -> int:
        if self.values is None:
            raise InvalidSubsetError("side information carries no values")
        return self.values[self.indices.index(k)]


def make_subset(indices: Iterable[int], K: int, proper: bool = True) -> Subset:
    """Validate 1-based indices and return them as a frozenset."""
    S = frozenset(int(k) for k in indices)
    out_of_range = [k for k in S if not 1 <= k <= K]
    if out_of_range:
        raise InvalidSubsetError(f"indices {sorted(out_of_range)} outside 1..{K}")
    if proper and len(S) == K:
        raise InvalidSubsetError("side information must be a proper subset of the messages")
    return S


def parse_subset(text: str, K: int, proper: bool = True) -> Subset:
    """Parse "1,3" (or "" / "{}" for the empty set)."""
    cleaned = text.strip().strip("{}").strip()
    if not cleaned:
        return frozenset()
    try:
        return make_subset((int(part) for part in cleaned.split(",")), K, proper=proper)
    except ValueError as exc:
        if isinstance(exc, InvalidSubsetError):
            raise
        raise InvalidSubsetError(f"cannot parse subset {text!r}") from exc


def format_subset(S: Iterable[int]) -> str:
    return "{" + ",".join(str(k) for k in sorted(S)) + "}"


def new_code(M: int | Modulus, matrix: Sequence[Sequence[int]]) -> IndexCode:
    """General code from a full K x K matrix (entries reduced symmetrically)."""
    C = RingMatrix.from_rows(matrix, M)
    rows = [list(r) for r in C.rows]
    circulant = C.is_square and rows == circulant_rows(rows[0])
    return IndexCode(C=C, circulant=circulant)


def new_circulant(M: int | Modulus, K: int, first_row: Sequence[int]) -> IndexCode:
    """Circulant code from its (symmetrically reduced) first row."""
    if K < 2:
        raise InvalidCodeError(f"need at least two messages, got K={K}")
    if len(first_row) != K:
        raise DimensionMismatchError(f"first row has {len(first_row)} entries, expected {K}")
    modulus = as_modulus(M)
    reduced = [smod(int(v), modulus.M) for v in first_row]
    return IndexCode(C=RingMatrix.from_rows(circulant_rows(reduced), modulus), circulant=True)


def identity_code(M: int | Modulus, K: int) -> IndexCode:
    return new_circulant(M, K, [1] + [0] * (K - 1))


def _as_message(code: IndexCode, w: RingVector | Sequence[int]) -> RingVector:
    if isinstance(w, RingVector):
        if w.modulus != code.modulus:
            raise DimensionMismatchError(f"message is mod {w.modulus.M}, code is mod {code.M}")
        message = w
    else:
        message = vec_mod(w, code.modulus)
    if len(message) != code.K:
        raise DimensionMismatchError(f"message has {len(message)} entries, expected {code.K}")
    return message


def encode(code: IndexCode, w: MessageTuple | Sequence[int]) -> Codeword:
    """x = sum_k w_k c_k mod M."""
    return vec_mat_mul(_as_message(code, w), code.C)


def invert_codeword(code: IndexCode, x: Codeword | Sequence[int]) -> MessageTuple:
    """The message tuple labelling codeword x (x C^-1 mod M)."""
    return vec_mat_mul(_as_message(code, x), code.inverse)


def nearest_grid_point(code: IndexCode, y: Sequence[float]) -> Codeword:
    """Coordinatewise rounding (ties toward the smaller value) clamped into Z_M."""
    if len(y) != code.K:
        raise DimensionMismatchError(f"received vector has {len(y)} entries, expected {code.K}")
    low, high = code.modulus.low, code.modulus.high
    return RingVector(
        tuple(min(max(math.ceil(float(v) - 0.5), low), high) for v in y), code.modulus
    )


def decode_no_side_info(code: IndexCode, y: Sequence[float]) -> MessageTuple:
    """ML decoding over the whole grid Z_M^K."""
    return invert_codeword(code, nearest_grid_point(code, y))


def _check_side(code: IndexCode, side: SideInfoSet, need_values: bool = True) -> None:
    make_subset(side.S, code.K)
    if need_values and side.values is None:
        raise InvalidSubsetError("side information values a_S are required")


def _subcode_size(code: IndexCode, side: SideInfoSet) -> int:
    budget = get_settings().subcode_budget
    size = code.M ** (code.K - len(side.S))
    if size > budget:
        raise BudgetExceededError("subcode enumeration", size, budget)
    return size


def subcode_arrays(code: IndexCode, side: SideInfoSet) -> tuple[np.ndarray, np.ndarray]:
    """
    Unknown-message grid and unreduced partial codewords of the subcode.

    Returns (W, X) where W has one row per assignment of (w_k : k not in S) in
    lexicographic symmetric order, and X = W G_{S̄} before reduction mod M.
    """
    _check_side(code, side, need_values=False)
    _subcode_size(code, side)
    unknown = side.complement(code.K)
    require_int64_products(code.M, code.K)
    G = to_int64([code.generators[k - 1] for k in unknown]).reshape(len(unknown), code.K)
    reps = list(code.modulus.representatives())
    W = np.array(list(itertools.product(reps, repeat=len(unknown))), dtype=np.int64)
    W = W.reshape(-1, len(unknown))
    return W, W @ G


def side_offset(code: IndexCode, side: SideInfoSet) -> np.ndarray:
    """t = sum_{k in S} a_k c_k (unreduced)."""
    t = np.zeros(code.K, dtype=np.int64)
    for k in side.indices:
        t += side.value_of(k) * np.array(code.generators[k - 1], dtype=np.int64)
    return t


def subcode_points(code: IndexCode, side: SideInfoSet) -> list[Codeword]:
    """The M^(K-|S|) codewords consistent with a_S, in lexicographic message order."""
    _check_side(code, side)
    side = side.reduced(code.M)
    _, X = subcode_arrays(code, side)
    points = smod_array(X + side_offset(code, side), code.M)
    return [RingVector(tuple(int(e) for e in row), code.modulus) for row in points]


def _full_message(code: IndexCode, side: SideInfoSet, unknown_values: Sequence[int]) -> MessageTuple:
    values = dict(zip(side.indices, side.values or ()))
    values.update(zip(side.complement(code.K), (int(v) for v in unknown_values)))
    return RingVector(tuple(values[k] for k in range(1, code.K + 1)), code.modulus)


def decode_with_side_info(
    code: IndexCode, y: Sequence[float], side: SideInfoSet
) -> MessageTuple:
    """Exhaustive nearest point within the expurgated subcode X_{a_S}."""
    _check_side(code, side)
    side = side.reduced(code.M)
    if len(y) != code.K:
        raise DimensionMismatchError(f"received vector has {len(y)} entries, expected {code.K}")
    W, X = subcode_arrays(code, side)
    points = smod_array(X + side_offset(code, side), code.M)
    distances = ((points - np.asarray(y, dtype=float)) ** 2).sum(axis=1)
    # argmin keeps the first minimiser, i.e. enumeration order breaks ties
    best = int(np.argmin(distances))
    return _full_message(code, side, W[best])


def constellation_labels(code: IndexCode) -> list[tuple[Codeword, MessageTuple]]:
    """Every grid point with the message tuple it carries, in grid order."""
    budget = get_settings().subcode_budget
    size = code.M**code.K
    if size > budget:
        raise BudgetExceededError("constellation labels", size, budget)
    reps = list(code.modulus.representatives())
    labels = []
    for x in itertools.product(reps, repeat=code.K):
        codeword = RingVector(tuple(x), code.modulus)
        labels.append((codeword, invert_codeword(code, codeword)))
    return labels
