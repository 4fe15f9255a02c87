"""
Construction-A lattices of expurgated subcodes and exact minimum distances.

For a side-information set S the codewords a receiver still has to tell apart
live in a coset of X_{S̄}, the code generated by the generators c_k with k not
in S. Its Construction-A lattice X_{S̄} + M Z^K is generated by those c_k and
the rows of M I_K. Differences of two distinct subcode points are exactly the
lattice vectors outside M Z^K with small entries, so d_S^2 is the squared norm
of the shortest lattice vector outside M Z^K.

Everything here is integer or rational arithmetic; squared distances are ints.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from sympy import Matrix
from sympy.matrices.normalforms import hermite_normal_form as sympy_hnf

from app.core.config import get_settings
from app.core.errors import BudgetExceededError, DimensionGuardError, DimensionMismatchError
from app.services.indexcode import IndexCode, SideInfoSet, Subset, make_subset, subcode_arrays
from app.services.modring import smod_array

logger = logging.getLogger(__name__)

IntRows = tuple[tuple[int, ...], ...]


class DistanceMethod(str, Enum):
    LATTICE = "lattice"
    LATTICE_EXTENDED = "lattice_extended"
    BRUTE_FORCE = "brute_force"


def integer_det(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DimensionMismatchError("determinant needs a square matrix")
    return int(Matrix([list(r) for r in rows]).det(method="bareiss"))


@dataclass(frozen=True)
class IntegerLattice:
    """Full-rank lattice in Z^K; rows of ``basis`` are basis vectors.

    ``modulus`` is the M with M Z^K contained in the lattice, when known.
    """

    basis: IntRows
    det: int
    modulus: int | None = None

    def __post_init__(self) -> None:
        n = len(self.basis)
        if any(len(row) != n for row in self.basis):
            raise DimensionMismatchError("lattice basis must be square")
        if self.det == 0:
            raise DimensionMismatchError("lattice basis is singular")

    @classmethod
    def from_basis(
        cls, rows: Sequence[Sequence[int]], modulus: int | None = None
    ) -> IntegerLattice:
        basis = tuple(tuple(int(e) for e in row) for row in rows)
        return cls(basis=basis, det=abs(integer_det(basis)), modulus=modulus)

    @property
    def dimension(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class ShortestVectorReport:
    norm_sq: int
    witnesses: IntRows
    any_outside_MZ: bool
    witness_count: int


@dataclass(frozen=True)
class SubsetDistance:
    S: Subset
    d_sq: int
    method: DistanceMethod
    confirmed: bool = False


def hermite_normal_form(rows: Sequence[Sequence[int]], modulus_multiple: int | None = None) -> IntRows:
    """
    Row-style HNF basis of the lattice spanned by ``rows``.

    The sympy routine works on column lattices, so the generators are passed as
    columns and the result transposed back. ``modulus_multiple`` is any multiple
    of the lattice determinant; it switches sympy to the modulo-D algorithm.
    """
    A = Matrix([list(r) for r in rows]).T
    W = sympy_hnf(A, D=modulus_multiple) if modulus_multiple else sympy_hnf(A)
    return tuple(tuple(int(e) for e in W.col(j)) for j in range(W.shape[1]))


def construction_a(code: IndexCode, S: Subset) -> IntegerLattice:
    """Basis of X_{S̄} + M Z^K from the stacked generators via HNF."""
    S = make_subset(S, code.K)
    M, K = code.M, code.K
    generators = [code.generators[k - 1] for k in range(1, K + 1) if k not in S]
    scaled_identity = [[M if i == j else 0 for j in range(K)] for i in range(K)]
    basis = hermite_normal_form(generators + scaled_identity, modulus_multiple=M**K)
    lattice = IntegerLattice.from_basis(basis, modulus=M)
    if (M**K) % lattice.det:
        raise ArithmeticError(f"lattice determinant {lattice.det} does not divide M^K")
    return lattice


def solve_coefficients(L: IntegerLattice, v: Sequence[int]) -> list[Fraction]:
    """Rational x with x B = v."""
    n = L.dimension
    if len(v) != n:
        raise DimensionMismatchError(f"vector has {len(v)} entries, lattice dimension {n}")
    # augmented system B^T x = v
    a = [[Fraction(L.basis[j][i]) for j in range(n)] + [Fraction(v[i])] for i in range(n)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col] / a[col][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def contains(L: IntegerLattice, v: Sequence[int]) -> bool:
    """Membership test by exact rational solve."""
    return all(x.denominator == 1 for x in solve_coefficients(L, v))


def _dot(u: Sequence[int | Fraction], v: Sequence[int | Fraction]) -> int | Fraction:
    return sum((a * b for a, b in zip(u, v)), 0)


def _gram_schmidt(b: list[list[int]]) -> tuple[list[list[Fraction]], list[Fraction]]:
    """mu coefficients and squared norms of the Gram-Schmidt vectors."""
    n = len(b)
    star: list[list[Fraction]] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    norms: list[Fraction] = []
    for i in range(n):
        v = [Fraction(x) for x in b[i]]
        for j in range(i):
            mu[i][j] = Fraction(_dot(b[i], star[j])) / norms[j]
            v = [x - mu[i][j] * y for x, y in zip(v, star[j])]
        star.append(v)
        norms.append(Fraction(_dot(v, v)))
    return mu, norms


def lll_reduce(L: IntegerLattice, delta: Fraction | None = None) -> IntegerLattice:
    """Exact LLL reduction with rational Gram-Schmidt data.

    delta = 1 is accepted here, which sympy's ``DomainMatrix.lll`` rejects.
    """
    if delta is None:
        delta = get_settings().lll_delta_fraction
    if not Fraction(1, 4) < delta <= 1:
        raise ValueError(f"LLL parameter delta must lie in (1/4, 1], got {delta}")
    b = [list(row) for row in L.basis]
    n = len(b)
    mu, norms = _gram_schmidt(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                for i in range(j):
                    mu[k][i] -= q * mu[j][i]
                mu[k][j] -= q
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            mu, norms = _gram_schmidt(b)
            k = max(k - 1, 1)
    return IntegerLattice(basis=tuple(tuple(row) for row in b), det=L.det, modulus=L.modulus)


def _fincke_pohst(
    basis: Sequence[Sequence[int]],
    radius_sq: int,
    visit: Callable[[tuple[int, ...], int], int],
) -> None:
    """
    Enumerate nonzero lattice vectors with squared norm <= radius_sq, one per
    +/- pair. ``visit`` receives (vector, squared norm) and returns the radius
    to continue with, so callers may shrink it.
    """
    b = [list(row) for row in basis]
    n = len(b)
    mu, norms = _gram_schmidt(b)
    x = [0] * n
    bound = [Fraction(radius_sq)]

    def search(level: int, partial: Fraction, leading_zero: bool) -> None:
        centre = -sum((mu[j][level] * x[j] for j in range(level + 1, n)), Fraction(0))
        remaining = bound[0] - partial
        if remaining < 0:
            return
        spread = math.sqrt(float(remaining / norms[level])) + 1
        low = math.floor(float(centre) - spread)
        high = math.ceil(float(centre) + spread)
        if leading_zero:
            # every higher coefficient is zero: fix the sign here
            low = max(low, 0)
        for value in range(low, high + 1):
            offset = value - centre
            contribution = norms[level] * offset * offset
            total = partial + contribution
            if total > bound[0]:
                continue
            x[level] = value
            if level == 0:
                if leading_zero and value == 0:
                    continue
                vector = tuple(sum(x[i] * b[i][c] for i in range(n)) for c in range(n))
                norm_sq = sum(e * e for e in vector)
                bound[0] = Fraction(visit(vector, norm_sq))
            else:
                search(level - 1, total, leading_zero and value == 0)
        x[level] = 0

    search(n - 1, Fraction(0), True)


def _check_dimension(L: IntegerLattice) -> None:
    guard = get_settings().max_lattice_dimension
    if L.dimension > guard:
        raise DimensionGuardError("lattice dimension", L.dimension, guard)


def shortest_vectors(L: IntegerLattice) -> ShortestVectorReport:
    """
    All shortest nonzero vectors (up to sign) by Fincke-Pohst after LLL.

    ``any_outside_MZ`` is tracked over every minimal vector found, not just the
    capped witness list. It stays False when the lattice carries no modulus.
    """
    modulus = L.modulus
    _check_dimension(L)
    cap = get_settings().witness_cap
    reduced = lll_reduce(L)
    initial = min(sum(e * e for e in row) for row in reduced.basis)
    best = [initial]
    witnesses: list[tuple[int, ...]] = []
    count = [0]
    outside = [False]

    def visit(vector: tuple[int, ...], norm_sq: int) -> int:
        if norm_sq < best[0]:
            best[0] = norm_sq
            witnesses.clear()
            count[0] = 0
            outside[0] = False
        if norm_sq == best[0]:
            count[0] += 1
            if len(witnesses) < cap:
                witnesses.append(vector)
            if modulus is not None and any(e % modulus for e in vector):
                outside[0] = True
        return best[0]

    _fincke_pohst(reduced.basis, initial, visit)
    return ShortestVectorReport(
        norm_sq=best[0],
        witnesses=tuple(witnesses),
        any_outside_MZ=outside[0],
        witness_count=count[0],
    )


def _shortest_outside(L: IntegerLattice, M: int, radius_sq: int) -> int:
    """Shortest squared norm among lattice vectors not in M Z^K, within radius."""
    reduced = lll_reduce(L)
    best = [radius_sq]

    def visit(vector: tuple[int, ...], norm_sq: int) -> int:
        if any(e % M for e in vector) and norm_sq < best[0]:
            best[0] = norm_sq
        return best[0]

    _fincke_pohst(reduced.basis, radius_sq, visit)
    return best[0]


def subset_distance(code: IndexCode, S: Subset, confirm: bool = True) -> SubsetDistance:
    """
    Exact d_S^2 via the Construction-A lattice.

    When some shortest lattice vector lies outside M Z^K its length is d_S.
    Otherwise enumeration is widened up to the shortest unknown generator
    (which is itself outside M Z^K) and the shortest vector outside M Z^K is
    taken; with ``confirm`` it is checked against the brute-force oracle
    whenever that fits the budget.
    """
    S = make_subset(S, code.K)
    lattice = construction_a(code, S)
    report = shortest_vectors(lattice)
    if report.any_outside_MZ:
        return SubsetDistance(S=S, d_sq=report.norm_sq, method=DistanceMethod.LATTICE)

    radius = min(
        sum(e * e for e in code.generators[k - 1]) for k in range(1, code.K + 1) if k not in S
    )
    d_sq = _shortest_outside(lattice, code.M, radius)
    logger.debug(f"Widened enumeration for {code.describe()} S={sorted(S)}: d_sq={d_sq}")
    result = SubsetDistance(S=S, d_sq=d_sq, method=DistanceMethod.LATTICE_EXTENDED)
    if not confirm:
        return result
    try:
        oracle = brute_force_distance(code, S)
    except BudgetExceededError:
        return result
    if oracle.d_sq != d_sq:
        logger.error(
            f"Lattice distance {d_sq} disagrees with brute force {oracle.d_sq} "
            f"for {code.describe()} S={sorted(S)}"
        )
        return oracle
    return SubsetDistance(S=S, d_sq=d_sq, method=DistanceMethod.LATTICE_EXTENDED, confirmed=True)


def _brute_force_work(code: IndexCode, S: Subset) -> int:
    points = code.M ** (code.K - len(S))
    return code.M ** len(S) * points * (points - 1) // 2


def _min_pairwise(points: np.ndarray, block: int = 1024) -> int:
    best: int | None = None
    for start in range(0, len(points), block):
        chunk = points[start : start + block]
        diff = chunk[:, None, :] - points[None, :, :]
        dist = (diff * diff).sum(axis=2)
        rows = np.arange(len(chunk))
        dist[rows, rows + start] = np.iinfo(np.int64).max
        local = int(dist.min())
        best = local if best is None else min(best, local)
    if best is None:
        raise ValueError("need at least two points")
    return best


def coset_distances(code: IndexCode, S: Subset) -> dict[tuple[int, ...], int]:
    """Minimum squared distance of X_{a_S} for every value of a_S."""
    S = make_subset(S, code.K)
    budget = get_settings().brute_force_budget
    work = _brute_force_work(code, S)
    if work > budget:
        raise BudgetExceededError("brute-force distance", work, budget)
    side = SideInfoSet(S=S)
    _, X = subcode_arrays(code, side)
    known = sorted(S)
    G = np.array([code.generators[k - 1] for k in known], dtype=np.int64).reshape(len(known), code.K)
    reps = list(code.modulus.representatives())
    distances: dict[tuple[int, ...], int] = {}
    for a in itertools.product(reps, repeat=len(known)):
        t = np.array(a, dtype=np.int64) @ G if known else np.zeros(code.K, dtype=np.int64)
        points = smod_array(X + t, code.M)
        distances[tuple(a)] = _min_pairwise(points)
    return distances


def brute_force_distance(code: IndexCode, S: Subset) -> SubsetDistance:
    """Ground-truth d_S^2: minimum pairwise distance over every expurgated subcode."""
    S = make_subset(S, code.K)
    d_sq = min(coset_distances(code, S).values())
    return SubsetDistance(S=S, d_sq=d_sq, method=DistanceMethod.BRUTE_FORCE, confirmed=True)
