"""Discretized convexity machinery: finite point nets, distance-to-net, iterated
segment-closure hulls, convex-net and convex-functional checks, and Hausdorff
distance between nets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .space_core import (
    BicombedSpace,
    InvalidInputError,
    Point,
    canonical_key,
)


# ---------------------------------------------------------------------------
# Point nets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointNet:
    """Finite point collection standing in for a compact set at resolution eps.

    Stored points are canonically ordered and pairwise at least eps/2 apart;
    construct through :meth:`build`, which sorts and deduplicates.
    """

    space: BicombedSpace
    points: tuple[Point, ...]
    eps: float

    @staticmethod
    def build(space: BicombedSpace, points: Iterable[Point], eps: float) -> "PointNet":
        """Validate, canonically sort, and deduplicate points at radius eps/2.

        When two points fall within eps/2 of each other the canonically smaller
        one is kept, so the stored net is independent of input order.
        """
        if eps <= 0:
            raise InvalidInputError("net resolution eps must be positive")
        pts = sorted(set(points), key=canonical_key)
        if not pts:
            raise InvalidInputError("a point net cannot be empty")
        for p in pts:
            space.validate_point(p)
        kept: list[Point] = []
        packed = None
        for p in pts:
            if packed is not None:
                if float(space.dist_to_packed(p, packed).min()) < eps / 2:
                    continue
            kept.append(p)
            packed = space.pack(kept)
        return PointNet(space, tuple(kept), float(eps))

    @staticmethod
    def _assemble(space: BicombedSpace, sorted_points: Sequence[Point], eps: float) -> "PointNet":
        """Internal constructor for lists already sorted and eps/2-separated."""
        return PointNet(space, tuple(sorted_points), float(eps))

    def __len__(self) -> int:
        return len(self.points)

    @cached_property
    def packed(self):
        return self.space.pack(self.points)

    @cached_property
    def index(self):
        return self.space.make_index(self.packed)

    @cached_property
    def diameter(self) -> float:
        D = self.space.dist_matrix(self.packed, self.packed)
        return float(D.max())


def dist_to_net(space: BicombedSpace, K: PointNet, x: Point) -> float:
    """min over the stored points of d(k, x); zero only at a stored location."""
    if K.space is not space:
        raise InvalidInputError("net belongs to a different space")
    if not K.points:
        raise InvalidInputError("distance to an empty net is undefined")
    space.validate_point(x)
    return float(space.dist_to_packed(x, K.packed).min())


# ---------------------------------------------------------------------------
# Convex functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexFunctional:
    """Real-valued map on points: distance to an anchor, distance to a net, a
    linear functional (coordinate spaces only), or a constant."""

    kind: str
    anchor: Point | None = None
    target: PointNet | None = None
    coefficients: tuple[float, ...] | None = None
    value: float = 0.0

    @staticmethod
    def dist_to_point(anchor: Point) -> "ConvexFunctional":
        return ConvexFunctional(kind="dist_to_point", anchor=anchor)

    @staticmethod
    def dist_to_net(target: PointNet) -> "ConvexFunctional":
        return ConvexFunctional(kind="dist_to_net", target=target)

    @staticmethod
    def linear(coefficients: Sequence[float]) -> "ConvexFunctional":
        return ConvexFunctional(kind="linear", coefficients=tuple(float(c) for c in coefficients))

    @staticmethod
    def constant(value: float) -> "ConvexFunctional":
        return ConvexFunctional(kind="constant", value=float(value))

    def scaled(self, factor: float) -> "_ScaledFunctional":
        """Same functional scaled by a constant (negative factors break convexity)."""
        return _ScaledFunctional(self, factor)

    def label(self) -> str:
        if self.kind == "linear":
            return f"linear{self.coefficients}"
        if self.kind == "constant":
            return f"constant({self.value})"
        return self.kind

    def evaluate(self, space: BicombedSpace, p: Point) -> float:
        return float(self.evaluate_packed(space, space.pack([p]))[0])

    def evaluate_packed(self, space: BicombedSpace, packed) -> np.ndarray:
        if self.kind == "dist_to_point":
            return space.dist_matrix(space.pack([self.anchor]), packed)[0]
        if self.kind == "dist_to_net":
            if self.target is None or not self.target.points:
                raise InvalidInputError("dist_to_net functional needs a non-empty net")
            return self.target.space.min_dist(packed, self.target.packed)
        if self.kind == "linear":
            arr = np.asarray(packed, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != len(self.coefficients):
                raise InvalidInputError("linear functionals require matching coordinate points")
            return arr @ np.asarray(self.coefficients)
        if self.kind == "constant":
            return np.full(space.packed_len(packed), self.value)
        raise InvalidInputError(f"unknown functional kind {self.kind!r}")


class _ScaledFunctional:
    """Wrapper multiplying a functional by a constant; used for negative controls."""

    def __init__(self, base: ConvexFunctional, factor: float):
        self.base = base
        self.factor = factor
        self.kind = f"{factor}*{base.kind}"

    def label(self) -> str:
        return f"{self.factor}*{self.base.label()}"

    def evaluate(self, space, p):
        return self.factor * self.base.evaluate(space, p)

    def evaluate_packed(self, space, packed):
        return self.factor * self.base.evaluate_packed(space, packed)


# ---------------------------------------------------------------------------
# Hull closure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HullResult:
    """Fixed point of the segment-closure iteration plus convergence data."""

    net: PointNet
    converged: bool
    rounds: int


def _greedy_separate(space: BicombedSpace, cands: list[Point], eps: float) -> list[Point]:
    """Greedy eps/2-separated subset of canonically sorted candidates.

    Processes candidates in order, keeping each one that clears every earlier
    keeper; batching only changes the arithmetic, not the outcome.
    """
    accepted: list[Point] = []
    acc_packed = None
    chunk = 512
    for lo in range(0, len(cands), chunk):
        block = cands[lo : lo + chunk]
        cp = space.pack(block)
        ok = np.ones(len(block), dtype=bool)
        if accepted:
            ok &= space.min_dist(cp, acc_packed) >= eps / 2
        Dcc = space.dist_matrix(cp, cp)
        for i in range(len(block)):
            if ok[i]:
                ok[i + 1 :] &= Dcc[i + 1 :, i] >= eps / 2
        fresh = [c for c, o in zip(block, ok) if o]
        if fresh:
            accepted.extend(fresh)
            acc_packed = space.pack(accepted)
    return accepted


def _pair_blocks(n_old: int, n_total: int, first_round: bool, block_pairs: int):
    """Yield (I, J) index arrays covering the pairs a closure round must sample.

    After the first round only pairs touching newly inserted points need
    sampling: a sample rejected against an earlier, smaller net stays within
    eps/2 of the grown net, so old-old pairs can never contribute again.
    """
    if first_round:
        ranges = [(i, i + 1, n_total) for i in range(n_total)]
    else:
        ranges = [(i, max(i + 1, n_old), n_total) for i in range(n_total)]
    buf_i: list[np.ndarray] = []
    buf_j: list[np.ndarray] = []
    count = 0
    for i, lo, hi in ranges:
        if lo >= hi:
            continue
        js = np.arange(lo, hi, dtype=np.int64)
        buf_i.append(np.full(len(js), i, dtype=np.int64))
        buf_j.append(js)
        count += len(js)
        if count >= block_pairs:
            yield np.concatenate(buf_i), np.concatenate(buf_j)
            buf_i, buf_j, count = [], [], 0
    if count:
        yield np.concatenate(buf_i), np.concatenate(buf_j)


def hull_closure(
    space: BicombedSpace,
    seed: PointNet,
    segment_samples: int = 8,
    max_rounds: int = 64,
) -> HullResult:
    """Iterated segment-closure approximation of the smallest closed convex set
    containing the seed.

    Each round samples every segment between current net points at
    segment_samples+1 parameters and inserts samples at least eps/2 away from
    the net; candidates are merged in canonical order so the result is
    reproducible regardless of scan order.  Stops at the first round that
    inserts nothing, or returns converged=False when max_rounds is exhausted.
    """
    if seed.space is not space:
        raise InvalidInputError("seed net belongs to a different space")
    if segment_samples < 2:
        raise InvalidInputError("segment_samples must be >= 2")
    if max_rounds < 1:
        raise InvalidInputError("max_rounds must be >= 1")

    eps = seed.eps
    pts: list[Point] = list(seed.points)
    # endpoint samples coincide with stored points and can never be inserted,
    # so only strictly interior parameters are queried
    ts = np.array([k / segment_samples for k in range(1, segment_samples)])
    n_old = 0

    for round_no in range(1, max_rounds + 1):
        packed = space.pack(pts)
        index = space.make_index(packed)
        n_total = len(pts)
        block_pairs = max(1, 400_000 // (segment_samples + 1))

        survivors: list[Point] = []
        for I, J in _pair_blocks(n_old, n_total, round_no == 1, block_pairs):
            S = space.segment_batch(packed, I, J, ts)
            dmin = index.min_dist(S)
            keep = np.nonzero(dmin >= eps / 2)[0]
            if len(keep):
                survivors.extend(
                    space.points_from_packed(space.packed_take(S, keep))
                )

        accepted = _greedy_separate(space, sorted(set(survivors), key=canonical_key), eps)

        if not accepted:
            return HullResult(
                net=PointNet._assemble(space, sorted(pts, key=canonical_key), eps),
                converged=True,
                rounds=round_no,
            )
        n_old = n_total
        pts.extend(accepted)
        # keep insertion order: indices >= n_old are exactly this round's points

    return HullResult(
        net=PointNet._assemble(space, sorted(pts, key=canonical_key), eps),
        converged=False,
        rounds=max_rounds,
    )


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetWitness:
    x: Point
    y: Point
    t: float
    dist: float


def is_convex_net(
    space: BicombedSpace, C: PointNet, segment_samples: int = 8
) -> tuple[bool, NetWitness | None]:
    """Whether every sampled segment between net points stays within eps of the net.

    On failure returns the worst witness: the sample farthest from the net.
    """
    if C.space is not space:
        raise InvalidInputError("net belongs to a different space")
    ts = np.array([k / segment_samples for k in range(1, segment_samples)])
    packed = C.packed
    index = C.index
    n = len(C.points)
    block_pairs = max(1, 400_000 // (segment_samples + 1))
    worst = None
    worst_dist = C.eps
    for I, J in _pair_blocks(0, n, True, block_pairs):
        S = space.segment_batch(packed, I, J, ts)
        dmin = index.min_dist(S).reshape(len(I), len(ts))
        if dmin.max() > worst_dist:
            r, k = np.unravel_index(int(np.argmax(dmin)), dmin.shape)
            worst_dist = float(dmin[r, k])
            worst = NetWitness(
                x=C.points[int(I[r])],
                y=C.points[int(J[r])],
                t=float(ts[k]),
                dist=worst_dist,
            )
    return worst is None, worst


@dataclass(frozen=True)
class FunctionalWitness:
    x: Point
    y: Point
    t: float
    defect: float


@dataclass(frozen=True)
class FunctionalCheck:
    ok: bool
    max_defect: float
    witness: FunctionalWitness | None


def check_convex_functional(
    space: BicombedSpace,
    phi,
    domain: PointNet,
    grid: int = 16,
    tol: float = 1e-9,
) -> FunctionalCheck:
    """Midpoint-convexity check of t -> phi([x,y](t)) over all domain pairs.

    The defect at an interior grid node is f(t_k) - (f(t_{k-1}) + f(t_{k+1}))/2;
    the check passes when the largest defect is at most tol.
    """
    if grid < 2:
        raise InvalidInputError("functional-check grid must be >= 2")
    ts = np.array([k / grid for k in range(grid + 1)])
    packed = domain.packed
    n = len(domain.points)
    worst = -math.inf
    witness = None
    block_pairs = max(1, 200_000 // (grid + 1))
    for I, J in _pair_blocks(0, n, True, block_pairs):
        S = space.segment_batch(packed, I, J, ts)
        vals = np.asarray(phi.evaluate_packed(space, S), dtype=float).reshape(len(I), grid + 1)
        defects = vals[:, 1:-1] - 0.5 * (vals[:, :-2] + vals[:, 2:])
        r, k = np.unravel_index(int(np.argmax(defects)), defects.shape)
        if defects[r, k] > worst:
            worst = float(defects[r, k])
            witness = FunctionalWitness(
                x=domain.points[int(I[r])],
                y=domain.points[int(J[r])],
                t=float(ts[k + 1]),
                defect=worst,
            )
    if worst == -math.inf:
        worst = 0.0
        witness = None
    ok = worst <= tol
    return FunctionalCheck(ok=ok, max_defect=worst, witness=witness if not ok else None)


def hausdorff(space: BicombedSpace, A: PointNet, B: PointNet) -> float:
    """Symmetric Hausdorff distance between two stored point sets."""
    if A.space is not space or B.space is not space:
        raise InvalidInputError("nets belong to a different space")
    if not A.points or not B.points:
        raise InvalidInputError("Hausdorff distance needs non-empty nets")
    ab = float(B.index.min_dist(A.packed).max())
    ba = float(A.index.min_dist(B.packed).max())
    return max(ab, ba)


def directed_excess(space: BicombedSpace, A: PointNet, B: PointNet) -> float:
    """One-sided excess: max over A of the distance into B."""
    return float(B.index.min_dist(A.packed).max())
