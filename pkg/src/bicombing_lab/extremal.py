"""Discretized extremal-point machinery: argmax faces of convex functionals,
chord-based extremal verdicts for points and sets, batch extremal-point
detection, and the farthest-point descent that drives a face down to a single
point.

A point p of a net C fails to be extremal when some sampled chord of C passes
through p's hit ball at a strictly interior parameter while both chord
endpoints stay outside the exclusion radius delta.  The exclusion radius keeps
chords that merely end near p from counting as crossings; without it every
boundary point of a smooth set would be misclassified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .convexity import ConvexFunctional, PointNet, dist_to_net
from .space_core import BicombedSpace, InvalidInputError, Point, canonical_key


@dataclass(frozen=True)
class ExtremalParams:
    """Discretization knobs for extremal detection.

    eps is the chord hit radius, delta the endpoint exclusion radius
    (delta >= eps), t_grid the number of strictly interior chord parameters,
    and face_tol the argmax band width.
    """

    eps: float
    delta: float
    t_grid: int = 7
    face_tol: float = 0.0125

    def __post_init__(self):
        if self.eps <= 0:
            raise InvalidInputError("hit radius eps must be positive")
        if self.delta < self.eps:
            raise InvalidInputError("endpoint exclusion delta must be >= eps")
        if self.t_grid < 3:
            raise InvalidInputError("t_grid must be >= 3")
        if self.face_tol <= 0:
            raise InvalidInputError("face_tol must be positive")

    @staticmethod
    def defaults(net: PointNet) -> "ExtremalParams":
        """Spec defaults for a net: hit radius = net resolution, exclusion radius
        sqrt(eps * diam) (the sag threshold below which boundary chords of a
        smooth set falsely hit their own neighbourhood), face_tol = eps/4."""
        eps = net.eps
        diam = max(net.diameter, eps)
        return ExtremalParams(
            eps=eps, delta=max(eps, math.sqrt(eps * diam)), t_grid=7, face_tol=eps / 4
        )

    def interior_ts(self) -> np.ndarray:
        g = self.t_grid
        return np.array([k / (g + 1) for k in range(1, g + 1)])


def argmax_face(
    space: BicombedSpace, E: PointNet, phi, face_tol: float
) -> PointNet:
    """Stored points where phi comes within face_tol of its maximum over E."""
    if E.space is not space:
        raise InvalidInputError("net belongs to a different space")
    vals = np.asarray(phi.evaluate_packed(space, E.packed), dtype=float)
    keep = vals >= vals.max() - face_tol
    pts = [p for p, k in zip(E.points, keep) if k]
    return PointNet._assemble(space, pts, E.eps)


@dataclass(frozen=True)
class ChordWitness:
    """A chord refuting extremality: endpoints, the hit parameter, and for set
    verdicts the parameter at which the chord leaves the eps-neighbourhood."""

    x: Point
    y: Point
    t_enter: float
    t_exit: float | None = None


@dataclass(frozen=True)
class ExtremalVerdict:
    extremal: bool
    witness: ChordWitness | None


#: slack added to the chord alignment filter so float rounding in distances can
#: never exclude a genuinely hitting chord
_ALIGN_SLACK = 1e-9


def _scan_chords(
    space: BicombedSpace,
    C: PointNet,
    target_pack,
    d_to_target: np.ndarray,
    cand_idx: np.ndarray,
    params: ExtremalParams,
    pair_dists: Callable[[np.ndarray, np.ndarray], np.ndarray],
) -> tuple[int, int, float] | None:
    """Find a chord among candidate endpoints that hits the target ball.

    Only endpoints beyond delta qualify, and a hitting chord must satisfy
    d(i,p) + d(j,p) < L + 2*eps: the sample at parameter t sits at distance
    t*L and (1-t)*L from the endpoints of a constant-speed geodesic, so the
    triangle inequality forces near-alignment.  Filtering on that necessary
    condition prunes almost every pair without changing the outcome.
    """
    elig = cand_idx[d_to_target[cand_idx] > params.delta]
    if len(elig) < 2:
        return None
    ts = params.interior_ts()
    A = d_to_target[elig]
    budget = max(1, 2_000_000 // max(len(elig), 1))
    for lo in range(0, len(elig) - 1, budget):
        rows = elig[lo : lo + budget]
        Lmat = pair_dists(rows, elig)
        aligned = (A[lo : lo + budget, None] + A[None, :]) < (
            Lmat + 2.0 * params.eps + _ALIGN_SLACK
        )
        aligned &= rows[:, None] < elig[None, :]
        ri, ci = np.nonzero(aligned)
        if not len(ri):
            continue
        I = rows[ri]
        J = elig[ci]
        step = max(1, 400_000 // max(len(ts), 1))
        for s0 in range(0, len(I), step):
            Ic, Jc = I[s0 : s0 + step], J[s0 : s0 + step]
            dd = space.chord_dists(C.packed, Ic, Jc, ts, target_pack)[:, :, 0]
            hits = dd < params.eps
            if hits.any():
                r, k = np.unravel_index(int(np.argmax(hits)), hits.shape)
                return int(Ic[r]), int(Jc[r]), float(ts[k])
    return None


def is_extremal_point(
    space: BicombedSpace, C: PointNet, p: Point, params: ExtremalParams
) -> ExtremalVerdict:
    """Chord-crossing test for a single point: p fails to be extremal exactly
    when some chord with both endpoints beyond delta passes within eps of p at
    a strictly interior grid parameter."""
    if C.space is not space:
        raise InvalidInputError("net belongs to a different space")
    space.validate_point(p)
    dpx = space.dist_to_packed(p, C.packed)
    if float(dpx.min()) > params.eps:
        raise InvalidInputError("query point lies farther than eps from the net")

    def pair_dists(rows, cols):
        return space.dist_matrix(
            space.packed_take(C.packed, rows), space.packed_take(C.packed, cols)
        )

    found = _scan_chords(
        space, C, space.pack([p]), dpx, np.arange(len(C.points)), params, pair_dists
    )
    if found is None:
        return ExtremalVerdict(extremal=True, witness=None)
    i, j, t = found
    return ExtremalVerdict(
        extremal=False, witness=ChordWitness(x=C.points[i], y=C.points[j], t_enter=t)
    )


@dataclass(frozen=True)
class ExtremalScan:
    """Batch extremal detection outcome; empty results carry a diagnostic
    instead of raising, since emptiness signals a discretization failure."""

    space: BicombedSpace
    points: tuple[Point, ...]
    eps: float
    diagnostic: str | None

    @property
    def is_empty(self) -> bool:
        return not self.points

    def net(self) -> PointNet:
        if not self.points:
            raise InvalidInputError("extremal set came back empty; " + (self.diagnostic or ""))
        return PointNet._assemble(self.space, self.points, self.eps)


def _pair_chunks(n: int, chunk: int):
    """Index pairs (i, j) with i < j, yielded as constant-i array blocks."""
    for i in range(n - 1):
        js = np.arange(i + 1, n, dtype=np.int64)
        for lo in range(0, len(js), chunk):
            sl = js[lo : lo + chunk]
            yield np.full(len(sl), i, dtype=np.int64), sl


def extremal_points(
    space: BicombedSpace, C: PointNet, params: ExtremalParams
) -> ExtremalScan:
    """All stored points of C passing the chord-crossing extremality test.

    Each stored point is scanned with the same alignment-filtered chord search
    as is_extremal_point, reusing one precomputed distance matrix; a first pass
    restricted to endpoints in a thin ring just outside delta refutes most
    refutable points cheaply before the exhaustive scan runs on the rest.
    """
    if C.space is not space:
        raise InvalidInputError("net belongs to a different space")
    m = len(C.points)
    if m == 1:
        return ExtremalScan(space, C.points, C.eps, None)
    D = space.dist_matrix(C.packed, C.packed)
    all_idx = np.arange(m)

    def pair_dists(rows, cols):
        return D[np.ix_(rows, cols)]

    pts: list[Point] = []
    ring_width = params.delta + 4.0 * params.eps + C.eps
    for pi in range(m):
        d_to_p = D[:, pi]
        tpack = space.packed_take(C.packed, np.array([pi]))
        ring = np.nonzero(d_to_p <= ring_width)[0]
        found = _scan_chords(space, C, tpack, d_to_p, ring, params, pair_dists)
        if found is None and len(ring) < m:
            found = _scan_chords(space, C, tpack, d_to_p, all_idx, params, pair_dists)
        if found is None:
            pts.append(C.points[pi])

    diagnostic = None
    if not pts:
        diagnostic = (
            "no extremal points at this discretization; a compact convex set "
            "always has some, so retry with smaller eps or a tighter hit radius"
        )
    return ExtremalScan(space, tuple(pts), C.eps, diagnostic)


@dataclass(frozen=True)
class SetVerdict:
    extremal: bool
    witness: ChordWitness | None


def is_extremal_set(
    space: BicombedSpace, C: PointNet, E: PointNet, params: ExtremalParams
) -> SetVerdict:
    """Whether E behaves as an extremal subset of C under sampled chords.

    A witness is a chord that comes within the hit radius of E at a strictly
    interior parameter while sitting farther than the net resolution from E at
    parameters on both sides of the hit.  Requiring exits on both sides encodes
    that a violating chord crosses E rather than merely starting or ending near
    it: a chord rooted on E whose early samples are still inside the blur would
    otherwise witness against every face, including genuinely extremal ones.
    Entry uses params.eps and exit uses the coarser of params.eps and the net
    resolution, so gaps between the stored points of E never count as exits.
    """
    if C.space is not space or E.space is not space:
        raise InvalidInputError("nets belong to a different space")
    if not E.points:
        raise InvalidInputError("an extremal set must be non-empty")
    containment = float(C.index.min_dist(E.packed).max())
    if containment > params.eps:
        raise InvalidInputError(
            f"E is not contained in C up to eps (excess {containment:.3g})"
        )
    r_in = params.eps
    r_out = max(params.eps, C.eps)
    m = len(C.points)
    ts_int = params.interior_ts()
    ts_full = np.concatenate([[0.0], ts_int, [1.0]])
    n_full = len(ts_full)
    chunk = max(1, 200_000 // n_full)
    for I, J in _pair_chunks(m, chunk):
        dd = space.chord_dists(C.packed, I, J, ts_full, E.packed).min(axis=2)  # (P, g+2)
        out = dd > r_out
        out_before = np.cumsum(out, axis=1) > 0
        out_after = np.cumsum(out[:, ::-1], axis=1)[:, ::-1] > 0
        near = dd < r_in
        crossing = near & np.roll(out_before, 1, axis=1) & np.roll(out_after, -1, axis=1)
        crossing[:, 0] = False
        crossing[:, -1] = False
        bad = np.nonzero(crossing.any(axis=1))[0]
        if len(bad):
            r = int(bad[0])
            k_in = int(np.nonzero(crossing[r])[0][0])
            k_out = int(np.nonzero(out[r])[0][0])
            return SetVerdict(
                extremal=False,
                witness=ChordWitness(
                    x=C.points[int(I[r])],
                    y=C.points[int(J[r])],
                    t_enter=float(ts_full[k_in]),
                    t_exit=float(ts_full[k_out]),
                ),
            )
    return SetVerdict(extremal=True, witness=None)


@dataclass(frozen=True)
class DescentResult:
    """Endpoint of the farthest-point face descent plus its audit trail."""

    point: Point
    trace: tuple[int, ...]
    converged: bool
    iterations: int


def minimal_extremal_descent(
    space: BicombedSpace,
    C: PointNet,
    start: Point,
    params: ExtremalParams,
    max_iters: int = 50,
) -> DescentResult:
    """Drive a face down to a single point by repeatedly taking the argmax face
    of the distance to the current anchor.

    Each face is a subset of the previous one, so the cardinality trace never
    increases; while the anchor belongs to the current face and face_tol stays
    below the net separation, the anchor itself drops out and the trace strictly
    decreases, which forces termination on finite nets.  Stops when the face is
    a single stored point or its diameter is at most 2*eps.
    """
    if C.space is not space:
        raise InvalidInputError("net belongs to a different space")
    space.validate_point(start)
    if dist_to_net(space, C, start) > params.eps:
        raise InvalidInputError("descent start lies farther than eps from the net")

    face = C
    anchor = start
    trace = [len(face)]
    for it in range(1, max_iters + 1):
        if len(face) == 1 or face.diameter <= 2.0 * params.eps:
            return DescentResult(face.points[0], tuple(trace), True, it - 1)
        face = argmax_face(space, face, ConvexFunctional.dist_to_point(anchor), params.face_tol)
        anchor = face.points[0]  # canonical representative
        trace.append(len(face))
    converged = len(face) == 1 or face.diameter <= 2.0 * params.eps
    return DescentResult(face.points[0], tuple(trace), converged, max_iters)


def canonical_starts(C: PointNet, count: int = 5) -> list[Point]:
    """Deterministic descent starts: evenly spaced picks from the canonical order."""
    m = len(C.points)
    idx = sorted({round(i * (m - 1) / max(count - 1, 1)) for i in range(count)})
    return [C.points[i] for i in idx]
