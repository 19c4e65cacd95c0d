"""Concrete model spaces: l^p spaces with the linear segment map, the hyperbolic
plane (hyperboloid model) and metric trees with their geodesic segment maps, and
l^2 products of spaces.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .space_core import (
    BicombedSpace,
    EuclideanPoint,
    HyperboloidPoint,
    InvalidInputError,
    Point,
    ProductPoint,
    TreePoint,
    worker_count,
)


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormedSpaceSpec:
    """Finite-dimensional l^p space: dimension n >= 1 and exponent p in [1, inf]."""

    dimension: int
    exponent: float  # math.inf encodes the max norm

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidInputError("dimension must be >= 1")
        if not (self.exponent >= 1.0):
            raise InvalidInputError(f"p = {self.exponent} is not a norm exponent (need p >= 1)")


@dataclass(frozen=True)
class MetricTreeSpec:
    """Edge-weighted tree: node identifiers plus (tail, head, length) edges."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]


@dataclass(frozen=True)
class ProductSpaceSpec:
    """Two factor spaces combined with the l^2 distance."""

    left: BicombedSpace
    right: BicombedSpace


def euclidean(*coords: float) -> EuclideanPoint:
    return EuclideanPoint(tuple(float(c) for c in coords))


def hyperboloid(x0: float, x1: float, x2: float) -> HyperboloidPoint:
    return HyperboloidPoint((float(x0), float(x1), float(x2)))


# ---------------------------------------------------------------------------
# l^p spaces
# ---------------------------------------------------------------------------


class _KDTreeIndex:
    def __init__(self, data: np.ndarray, p: float):
        self.tree = cKDTree(data)
        self.p = p

    def min_dist(self, queries: np.ndarray) -> np.ndarray:
        d, _ = self.tree.query(np.atleast_2d(queries), k=1, p=self.p, workers=worker_count())
        return np.atleast_1d(d)


class _ProductJointIndex:
    """KDTree over joined coordinates; queries arrive as (left, right) packed pairs."""

    def __init__(self, joint: np.ndarray):
        self.tree = cKDTree(joint)

    def min_dist(self, packed_pair) -> np.ndarray:
        q = (
            np.hstack([packed_pair[0], packed_pair[1]])
            if isinstance(packed_pair, tuple)
            else np.atleast_2d(packed_pair)
        )
        d, _ = self.tree.query(q, k=1, p=2.0, workers=worker_count())
        return np.atleast_1d(d)


class LpSpace(BicombedSpace):
    """R^n with the l^p norm and the straight-line segment map.

    For p != 2 these are not convex metric spaces in the comparison-triangle
    sense, but the linear segment map still satisfies the distance-convexity
    axiom, which is exactly why the segment-map framework is broader.
    """

    def __init__(self, spec: NormedSpaceSpec):
        self.spec = spec
        self.n = spec.dimension
        self.p = spec.exponent
        pname = "inf" if math.isinf(self.p) else f"{self.p:g}"
        self.description = f"l{pname}(R^{self.n})"

    def validate_point(self, p: Point) -> None:
        if not isinstance(p, EuclideanPoint) or len(p.coords) != self.n:
            raise InvalidInputError(f"{p!r} is not a point of {self.description}")

    def _norm(self, diff: Sequence[float]) -> float:
        if math.isinf(self.p):
            return max(abs(d) for d in diff)
        if self.p == 2.0:
            return math.hypot(*diff)
        if self.p == 1.0:
            return sum(abs(d) for d in diff)
        return sum(abs(d) ** self.p for d in diff) ** (1.0 / self.p)

    def _distance(self, x: EuclideanPoint, y: EuclideanPoint) -> float:
        return self._norm([a - b for a, b in zip(x.coords, y.coords)])

    def _bicombing(self, x: EuclideanPoint, y: EuclideanPoint, t: float) -> EuclideanPoint:
        if x == y:
            return x
        return EuclideanPoint(
            tuple((1.0 - t) * a + t * b for a, b in zip(x.coords, y.coords))
        )

    # batch hooks

    def pack(self, pts: Sequence[Point]) -> np.ndarray:
        return np.array([p.coords for p in pts], dtype=np.float64).reshape(len(pts), self.n)

    def packed_len(self, packed) -> int:
        return packed.shape[0]

    def packed_take(self, packed, rows):
        return packed[np.atleast_1d(rows)]

    def packed_concat(self, a, b):
        return np.vstack([a, b])

    def points_from_packed(self, packed) -> list[Point]:
        return [EuclideanPoint(tuple(float(v) for v in row)) for row in packed]

    def _dist_block(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        diff = A[:, None, :] - B[None, :, :]
        if math.isinf(self.p):
            return np.abs(diff).max(axis=2)
        if self.p == 2.0:
            return np.sqrt((diff * diff).sum(axis=2))
        if self.p == 1.0:
            return np.abs(diff).sum(axis=2)
        return (np.abs(diff) ** self.p).sum(axis=2) ** (1.0 / self.p)

    def make_index(self, packed):
        return _KDTreeIndex(packed, self.p)

    def segment_batch(self, packed, I, J, ts) -> np.ndarray:
        X = packed[I]
        Y = packed[J]
        ts = np.asarray(ts, dtype=np.float64)
        S = (1.0 - ts)[None, :, None] * X[:, None, :] + ts[None, :, None] * Y[:, None, :]
        return S.reshape(len(I) * len(ts), self.n)

    def paired_dist(self, A, B) -> np.ndarray:
        diff = A - B
        if math.isinf(self.p):
            return np.abs(diff).max(axis=1)
        if self.p == 2.0:
            return np.sqrt((diff * diff).sum(axis=1))
        if self.p == 1.0:
            return np.abs(diff).sum(axis=1)
        return (np.abs(diff) ** self.p).sum(axis=1) ** (1.0 / self.p)


def make_lp_space(spec: NormedSpaceSpec) -> LpSpace:
    """l^p space on R^n with the linear segment map [x,y](t) = (1-t)x + ty."""
    return LpSpace(spec)


# ---------------------------------------------------------------------------
# Hyperbolic plane, hyperboloid model
# ---------------------------------------------------------------------------

_MINK_SIGNS = np.array([-1.0, 1.0, 1.0])


def _mink(x: Sequence[float], y: Sequence[float]) -> float:
    return -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]


class HyperbolicPlane(BicombedSpace):
    """Hyperbolic plane realized on the unit hyperboloid in Minkowski 3-space.

    Distances use the chord form d = 2*asinh(|x - y|_M / 2), which agrees with
    acosh(-<x,y>_M) but does not lose precision for nearby points.  Segment
    evaluations are re-normalized onto the hyperboloid after every call so the
    sheet invariant cannot drift across repeated closure rounds.
    """

    base_tol = 1e-7
    description = "hyperbolic plane (hyperboloid model)"

    _INVARIANT_TOL = 1e-9

    def validate_point(self, p: Point) -> None:
        if not isinstance(p, HyperboloidPoint):
            raise InvalidInputError(f"{p!r} is not a hyperboloid point")
        c = p.coords
        if not c[0] > 0:
            raise InvalidInputError(f"hyperboloid point must have x0 > 0, got {c[0]}")
        q = _mink(c, c)
        if abs(q + 1.0) > self._INVARIANT_TOL:
            raise InvalidInputError(
                f"point off the unit hyperboloid: <x,x>_M = {q!r} (|<x,x>_M + 1| > 1e-9)"
            )

    def _distance(self, x: HyperboloidPoint, y: HyperboloidPoint) -> float:
        u = [a - b for a, b in zip(x.coords, y.coords)]
        q = max(_mink(u, u), 0.0)
        return 2.0 * math.asinh(0.5 * math.sqrt(q))

    def _bicombing(self, x: HyperboloidPoint, y: HyperboloidPoint, t: float) -> HyperboloidPoint:
        if x == y:
            return x
        d = self._distance(x, y)
        if d == 0.0:
            return x
        sd = math.sinh(d)
        a = math.sinh((1.0 - t) * d) / sd
        b = math.sinh(t * d) / sd
        z = [a * xc + b * yc for xc, yc in zip(x.coords, y.coords)]
        s = math.sqrt(-_mink(z, z))
        return HyperboloidPoint((z[0] / s, z[1] / s, z[2] / s))

    # batch hooks

    def pack(self, pts: Sequence[Point]) -> np.ndarray:
        return np.array([p.coords for p in pts], dtype=np.float64).reshape(len(pts), 3)

    def packed_len(self, packed) -> int:
        return packed.shape[0]

    def packed_take(self, packed, rows):
        return packed[np.atleast_1d(rows)]

    def packed_concat(self, a, b):
        return np.vstack([a, b])

    def points_from_packed(self, packed) -> list[Point]:
        return [HyperboloidPoint((float(r[0]), float(r[1]), float(r[2]))) for r in packed]

    def _dist_block(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        # Gram form of the Minkowski chord: <a-b, a-b>_M = -2 - 2<a,b>_M for
        # points on the sheet.  The matrix product runs through BLAS; entries
        # with heavy cancellation (nearby points) are recomputed from
        # coordinate differences, which is exact at small separations.
        q = -2.0 - 2.0 * (A @ (B * _MINK_SIGNS).T)
        small = q < 1e-4
        if small.any():
            ra, cb = np.nonzero(small)
            diff = A[ra] - B[cb]
            q[ra, cb] = (diff * diff * _MINK_SIGNS).sum(axis=1)
        np.maximum(q, 0.0, out=q)
        return 2.0 * np.arcsinh(0.5 * np.sqrt(q))

    def min_dist(self, A, B, block_entries: int = 4_000_000) -> np.ndarray:
        """Row minima of the distance matrix without per-entry arcsinh.

        The chord square q is monotone in the distance, so only row minima
        need the transcendental transform.  Rows whose minimum suffers Gram
        cancellation (nearby points) are refined from coordinate differences
        over the near-tied columns.
        """
        na, nb = A.shape[0], B.shape[0]
        Bs = (B * _MINK_SIGNS).T
        rows = max(1, block_entries // max(nb, 1))
        out = np.empty(na)
        for lo in range(0, na, rows):
            Ab = A[lo : lo + rows]
            q = -2.0 - 2.0 * (Ab @ Bs)
            qmin = q.min(axis=1)
            small = np.nonzero(qmin < 1e-4)[0]
            if len(small):
                cand = q[small] <= qmin[small, None] + 1e-12
                ra, cb = np.nonzero(cand)
                diff = Ab[small][ra] - B[cb]
                q2 = (diff * diff * _MINK_SIGNS).sum(axis=1)
                refined = np.full(len(small), np.inf)
                np.minimum.at(refined, ra, q2)
                qmin[small] = refined
            np.maximum(qmin, 0.0, out=qmin)
            out[lo : lo + rows] = 2.0 * np.arcsinh(0.5 * np.sqrt(qmin))
        return out

    def segment_batch(self, packed, I, J, ts) -> np.ndarray:
        X = packed[I]
        Y = packed[J]
        ts = np.asarray(ts, dtype=np.float64)
        diff = X - Y
        q = np.maximum((diff * diff * _MINK_SIGNS).sum(axis=1), 0.0)
        d = 2.0 * np.arcsinh(0.5 * np.sqrt(q))
        safe = np.where(d > 0.0, d, 1.0)
        sd = np.sinh(safe)
        a = np.sinh((1.0 - ts)[None, :] * safe[:, None]) / sd[:, None]
        b = np.sinh(ts[None, :] * safe[:, None]) / sd[:, None]
        Z = a[:, :, None] * X[:, None, :] + b[:, :, None] * Y[:, None, :]
        degenerate = d == 0.0
        if degenerate.any():
            Z[degenerate] = X[degenerate][:, None, :]
        nrm = np.sqrt(-(Z * Z * _MINK_SIGNS).sum(axis=2))
        Z /= nrm[:, :, None]
        return Z.reshape(len(I) * len(ts), 3)

    def paired_dist(self, A, B) -> np.ndarray:
        diff = A - B
        q = np.maximum((diff * diff * _MINK_SIGNS).sum(axis=1), 0.0)
        return 2.0 * np.arcsinh(0.5 * np.sqrt(q))


def make_hyperbolic_plane() -> HyperbolicPlane:
    """The hyperbolic plane with its geodesic segment map."""
    return HyperbolicPlane()


def hyperbolic_point_at(r: float, theta: float) -> HyperboloidPoint:
    """Point at hyperbolic distance r from (1,0,0) in direction theta."""
    return HyperboloidPoint(
        (math.cosh(r), math.sinh(r) * math.cos(theta), math.sinh(r) * math.sin(theta))
    )


def lorentz_boost(eta: float) -> np.ndarray:
    """Boost matrix in the (x0, x1) plane; an isometry of the hyperboloid."""
    c, s = math.cosh(eta), math.sinh(eta)
    return np.array([[c, s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# ---------------------------------------------------------------------------
# Metric trees
# ---------------------------------------------------------------------------


class TreeSpace(BicombedSpace):
    """Edge-weighted tree with path-length distance and the unique-geodesic
    segment map (walk at constant speed along the connecting path).

    Points are (edge index, offset from the edge's tail).  Node locations are
    canonicalized to the smallest incident edge index so point equality is
    decidable.  Node-to-node distances are resolved by single-source traversal
    with per-node row caching; no preprocessing beyond adjacency.
    """

    def __init__(self, spec: MetricTreeSpec):
        nodes = list(spec.nodes)
        edges = [(str(u), str(v), float(w)) for u, v, w in spec.edges]
        if not nodes:
            raise InvalidInputError("tree must have at least one node")
        if len(set(nodes)) != len(nodes):
            raise InvalidInputError("duplicate node identifiers")
        self._node_idx = {n: i for i, n in enumerate(nodes)}
        self.nodes = nodes
        self.edges = edges
        if len(edges) != len(nodes) - 1:
            raise InvalidInputError(
                f"a tree on {len(nodes)} nodes needs {len(nodes) - 1} edges, got {len(edges)}"
            )
        self._adj: list[list[tuple[int, int, float]]] = [[] for _ in nodes]
        for ei, (u, v, w) in enumerate(edges):
            if w <= 0:
                raise InvalidInputError(f"edge {ei} has non-positive length {w}")
            if u not in self._node_idx or v not in self._node_idx:
                raise InvalidInputError(f"edge {ei} references unknown node")
            ui, vi = self._node_idx[u], self._node_idx[v]
            self._adj[ui].append((ei, vi, w))
            self._adj[vi].append((ei, ui, w))
        # connectivity: |edges| == |nodes|-1 plus connectedness implies acyclic
        seen = self._bfs_order(0)
        if len(seen) != len(nodes):
            raise InvalidInputError("edge set does not connect all nodes")
        self.spec = MetricTreeSpec(tuple(nodes), tuple(edges))
        self.description = f"metric tree ({len(nodes)} nodes, {len(edges)} edges)"
        self._tail = np.array([self._node_idx[e[0]] for e in edges], dtype=np.int64)
        self._head = np.array([self._node_idx[e[1]] for e in edges], dtype=np.int64)
        self._len = np.array([e[2] for e in edges], dtype=np.float64)
        self._node_rows: dict[int, np.ndarray] = {}
        # smallest incident edge per node, for canonical node representations
        self._canon_edge = [min(e for e, _, _ in self._adj[i]) if self._adj[i] else -1
                            for i in range(len(nodes))]

    # -- construction helpers ------------------------------------------------

    def _bfs_order(self, root: int) -> list[int]:
        seen = {root}
        order = [root]
        q = deque([root])
        while q:
            cur = q.popleft()
            for _, nxt, _ in self._adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(nxt)
                    q.append(nxt)
        return order

    def node_row(self, node: int) -> np.ndarray:
        """Distances from one node to every node (cached single-source walk)."""
        row = self._node_rows.get(node)
        if row is None:
            row = np.full(len(self.nodes), np.inf)
            row[node] = 0.0
            q = deque([node])
            while q:
                cur = q.popleft()
                for _, nxt, w in self._adj[cur]:
                    if row[nxt] == np.inf:
                        row[nxt] = row[cur] + w
                        q.append(nxt)
            self._node_rows[node] = row
        return row

    def _node_point(self, node: int) -> TreePoint:
        e = self._canon_edge[node]
        return TreePoint(e, 0.0 if self._tail[e] == node else float(self._len[e]))

    def point_on_edge(self, edge: int, offset: float) -> TreePoint:
        """Canonical point at `offset` along edge `edge` from its tail node."""
        if not 0 <= edge < len(self.edges):
            raise InvalidInputError(f"edge index {edge} out of range")
        length = float(self._len[edge])
        offset = float(offset)
        if not 0.0 <= offset <= length:
            raise InvalidInputError(f"offset {offset} outside [0, {length}] on edge {edge}")
        if offset == 0.0:
            return self._node_point(int(self._tail[edge]))
        if offset == length:
            return self._node_point(int(self._head[edge]))
        return TreePoint(edge, offset)

    def node_point(self, name: str) -> TreePoint:
        if name not in self._node_idx:
            raise InvalidInputError(f"unknown node {name!r}")
        return self._node_point(self._node_idx[name])

    def validate_point(self, p: Point) -> None:
        if not isinstance(p, TreePoint):
            raise InvalidInputError(f"{p!r} is not a tree point")
        if not 0 <= p.edge < len(self.edges):
            raise InvalidInputError(f"tree point references unknown edge {p.edge}")
        length = float(self._len[p.edge])
        if not 0.0 <= p.offset <= length:
            raise InvalidInputError(f"offset {p.offset} outside [0, {length}]")
        if (p.offset == 0.0 or p.offset == length) and self.point_on_edge(p.edge, p.offset) != p:
            raise InvalidInputError(
                f"{p!r} is a non-canonical node location; construct via point_on_edge"
            )

    # -- metric and segment map ----------------------------------------------

    def _route_terms(self, x: TreePoint, y: TreePoint) -> tuple[float, ...]:
        xt, xh = int(self._tail[x.edge]), int(self._head[x.edge])
        yt, yh = int(self._tail[y.edge]), int(self._head[y.edge])
        a, ra = x.offset, float(self._len[x.edge]) - x.offset
        b, rb = y.offset, float(self._len[y.edge]) - y.offset
        rt = self.node_row(xt)
        rh = self.node_row(xh)
        return (
            a + rt[yt] + b,
            a + rt[yh] + rb,
            ra + rh[yt] + b,
            ra + rh[yh] + rb,
        )

    def _distance(self, x: TreePoint, y: TreePoint) -> float:
        if x.edge == y.edge:
            return abs(x.offset - y.offset)
        return float(min(self._route_terms(x, y)))

    def _node_path(self, a: int, b: int) -> list[tuple[int, int, float]]:
        """Edges (edge_idx, entered_from_node, length) along the unique a->b path."""
        if a == b:
            return []
        parent: dict[int, tuple[int, int, float]] = {}
        seen = {a}
        q = deque([a])
        while q:
            cur = q.popleft()
            if cur == b:
                break
            for ei, nxt, w in self._adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    parent[nxt] = (cur, ei, w)
                    q.append(nxt)
        path = []
        cur = b
        while cur != a:
            prev, ei, w = parent[cur]
            path.append((ei, prev, w))
            cur = prev
        path.reverse()
        return path

    def _bicombing(self, x: TreePoint, y: TreePoint, t: float) -> TreePoint:
        if x == y:
            return x
        if x.edge == y.edge:
            return self.point_on_edge(x.edge, x.offset + t * (y.offset - x.offset))
        routes = self._route_terms(x, y)
        k = min(range(4), key=routes.__getitem__)
        d = routes[k]
        s = t * d
        exit_is_tail = k < 2
        leg = x.offset if exit_is_tail else float(self._len[x.edge]) - x.offset
        if s <= leg:
            return self.point_on_edge(x.edge, x.offset - s if exit_is_tail else x.offset + s)
        s -= leg
        exit_node = int(self._tail[x.edge]) if exit_is_tail else int(self._head[x.edge])
        entry_is_tail = k % 2 == 0
        entry_node = int(self._tail[y.edge]) if entry_is_tail else int(self._head[y.edge])
        for ei, from_node, w in self._node_path(exit_node, entry_node):
            if s <= w:
                off = s if self._tail[ei] == from_node else w - s
                return self.point_on_edge(ei, off)
            s -= w
        final_leg = y.offset if entry_is_tail else float(self._len[y.edge]) - y.offset
        s = min(s, final_leg)
        return self.point_on_edge(y.edge, s if entry_is_tail else float(self._len[y.edge]) - s)

    # -- batch hooks -----------------------------------------------------------

    def _all_node_dists(self) -> np.ndarray:
        for i in range(len(self.nodes)):
            self.node_row(i)
        return np.vstack([self._node_rows[i] for i in range(len(self.nodes))])

    def pack(self, pts: Sequence[Point]) -> dict:
        edge = np.array([p.edge for p in pts], dtype=np.int64)
        off = np.array([p.offset for p in pts], dtype=np.float64)
        return {
            "edge": edge,
            "off": off,
            "tail": self._tail[edge],
            "head": self._head[edge],
            "to_tail": off,
            "to_head": self._len[edge] - off,
        }

    def packed_len(self, packed) -> int:
        return len(packed["edge"])

    def packed_take(self, packed, rows):
        rows = np.atleast_1d(rows)
        return {k: v[rows] for k, v in packed.items()}

    def packed_concat(self, a, b):
        return {k: np.concatenate([a[k], b[k]]) for k in a}

    def points_from_packed(self, packed) -> list[Point]:
        return [
            TreePoint(int(e), float(o)) for e, o in zip(packed["edge"], packed["off"])
        ]

    def _dist_block(self, A: dict, B: dict) -> np.ndarray:
        Dn = self._all_node_dists()
        d = np.minimum.reduce(
            [
                A["to_tail"][:, None] + Dn[A["tail"]][:, B["tail"]] + B["to_tail"][None, :],
                A["to_tail"][:, None] + Dn[A["tail"]][:, B["head"]] + B["to_head"][None, :],
                A["to_head"][:, None] + Dn[A["head"]][:, B["tail"]] + B["to_tail"][None, :],
                A["to_head"][:, None] + Dn[A["head"]][:, B["head"]] + B["to_head"][None, :],
            ]
        )
        same = A["edge"][:, None] == B["edge"][None, :]
        if same.any():
            direct = np.abs(A["off"][:, None] - B["off"][None, :])
            d = np.where(same, direct, d)
        return d

    def segment_batch(self, packed, I, J, ts):
        pts = self.points_from_packed(packed)
        out = []
        for i, j in zip(I, J):
            x, y = pts[int(i)], pts[int(j)]
            for t in ts:
                out.append(self._bicombing(x, y, float(t)))
        return self.pack(out)

    def chord_dists(self, packed, I, J, ts, targets, D_IT=None, D_JT=None, L=None):
        """Tree chords answer from distances alone: along the x->y geodesic the
        distance to p is |s - s*| + d*, with s* and d* given by the Gromov
        products of the endpoint distances."""
        if D_IT is None or D_JT is None or L is None:
            sub = self.packed_take(packed, np.asarray(I, dtype=np.int64))
            subj = self.packed_take(packed, np.asarray(J, dtype=np.int64))
            D_IT = self.dist_matrix(sub, targets)
            D_JT = self.dist_matrix(subj, targets)
            L = self.paired_dist(sub, subj)
        ts = np.asarray(ts, dtype=np.float64)
        s_star = 0.5 * (D_IT - D_JT + L[:, None])  # (P, T)
        d_star = 0.5 * (D_IT + D_JT - L[:, None])
        s = ts[None, :, None] * L[:, None, None]  # (P, g, 1)
        return np.abs(s - s_star[:, None, :]) + d_star[:, None, :]

    def paired_dist(self, A, B) -> np.ndarray:
        Dn = self._all_node_dists()
        d = np.minimum.reduce(
            [
                A["to_tail"] + Dn[A["tail"], B["tail"]] + B["to_tail"],
                A["to_tail"] + Dn[A["tail"], B["head"]] + B["to_head"],
                A["to_head"] + Dn[A["head"], B["tail"]] + B["to_tail"],
                A["to_head"] + Dn[A["head"], B["head"]] + B["to_head"],
            ]
        )
        same = A["edge"] == B["edge"]
        if same.any():
            d = np.where(same, np.abs(A["off"] - B["off"]), d)
        return d


def make_metric_tree(spec: MetricTreeSpec) -> TreeSpace:
    """Metric tree with path-length distance; rejects cyclic or disconnected input."""
    return TreeSpace(spec)


def star_tree(leaves: int, length: float = 1.0) -> TreeSpace:
    """Star with `leaves` unit (or given-length) edges from a central node."""
    if leaves < 1:
        raise InvalidInputError("star tree needs at least one leaf")
    names = tuple(f"l{i}" for i in range(leaves))
    return make_metric_tree(
        MetricTreeSpec(("c",) + names, tuple(("c", n, length) for n in names))
    )


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------


class ProductSpace(BicombedSpace):
    """l^2 product of two spaces: distances combine as sqrt(dA^2 + dB^2) and
    segments evaluate componentwise.  The combination is convex and
    nondecreasing in each nonnegative coordinate, so distance convexity in the
    factors transfers to the product.
    """

    def __init__(self, spec: ProductSpaceSpec):
        self.left = spec.left
        self.right = spec.right
        self.spec = spec
        self.base_tol = max(self.left.base_tol, self.right.base_tol)
        self.description = f"({self.left.description}) x ({self.right.description})"
        self._joint_lp2 = (
            isinstance(self.left, LpSpace)
            and isinstance(self.right, LpSpace)
            and self.left.p == 2.0
            and self.right.p == 2.0
        )

    def validate_point(self, p: Point) -> None:
        if not isinstance(p, ProductPoint):
            raise InvalidInputError(f"{p!r} is not a product point")
        self.left.validate_point(p.left)
        self.right.validate_point(p.right)

    def _distance(self, x: ProductPoint, y: ProductPoint) -> float:
        return math.hypot(
            self.left._distance(x.left, y.left), self.right._distance(x.right, y.right)
        )

    def _bicombing(self, x: ProductPoint, y: ProductPoint, t: float) -> ProductPoint:
        if x == y:
            return x
        lx = x.left if x.left == y.left else self.left._bicombing(x.left, y.left, t)
        rx = x.right if x.right == y.right else self.right._bicombing(x.right, y.right, t)
        return ProductPoint(lx, rx)

    # batch hooks: a packed product set is the pair of packed factor sets

    def pack(self, pts: Sequence[Point]):
        return (
            self.left.pack([p.left for p in pts]),
            self.right.pack([p.right for p in pts]),
        )

    def packed_len(self, packed) -> int:
        return self.left.packed_len(packed[0])

    def packed_take(self, packed, rows):
        return (self.left.packed_take(packed[0], rows), self.right.packed_take(packed[1], rows))

    def packed_concat(self, a, b):
        return (
            self.left.packed_concat(a[0], b[0]),
            self.right.packed_concat(a[1], b[1]),
        )

    def points_from_packed(self, packed) -> list[Point]:
        ls = self.left.points_from_packed(packed[0])
        rs = self.right.points_from_packed(packed[1])
        return [ProductPoint(l, r) for l, r in zip(ls, rs)]

    def _dist_block(self, A, B) -> np.ndarray:
        dl = self.left._dist_block(A[0], B[0])
        dr = self.right._dist_block(A[1], B[1])
        return np.hypot(dl, dr)

    def make_index(self, packed):
        if self._joint_lp2:
            return _ProductJointIndex(np.hstack([packed[0], packed[1]]))
        return super().make_index(packed)

    def min_dist(self, A, B, block_entries: int = 4_000_000) -> np.ndarray:
        if self._joint_lp2:
            return _ProductJointIndex(np.hstack([B[0], B[1]])).min_dist(A)
        return super().min_dist(A, B, block_entries)

    def segment_batch(self, packed, I, J, ts):
        return (
            self.left.segment_batch(packed[0], I, J, ts),
            self.right.segment_batch(packed[1], I, J, ts),
        )

    def paired_dist(self, A, B) -> np.ndarray:
        return np.hypot(
            self.left.paired_dist(A[0], B[0]), self.right.paired_dist(A[1], B[1])
        )


def make_product(spec: ProductSpaceSpec) -> ProductSpace:
    """l^2 product of two bicombed spaces with the componentwise segment map."""
    return ProductSpace(spec)
