"""Exact k-nearest-neighbor primitives over embedding sets.

Every estimator in this package reduces to two queries: the distance from
a point to its kth-nearest neighbor in a set, and the number of set points
inside a closed ball. Both are answered here by two interchangeable
backends: a blockwise brute-force scan and a kd-tree-accelerated path.

The tree is used only to propose candidate neighbor indices; final
distances are always recomputed with one shared routine (sequential
per-dimension accumulation in float64). The two backends therefore agree
bitwise, and results do not depend on library internals.

Conventions, fixed for the whole package:

- closed balls: points at exactly the query radius count as inside;
- self-exclusion is by row identity, never by coordinate value, so
  duplicate rows still count as neighbors of each other;
- ties are broken by ascending row index, making every query and every
  reported neighbor identity deterministic.

The environment variable ENTMETRICS_THREADS caps query parallelism; by
default all cores may be used. Parallelism never changes results.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.spatial import cKDTree

from .embeddings import EmbeddingSet

# Candidate-ball inflation covering ulp-level disagreement between the
# tree's internal arithmetic and the shared recompute routine.
_REL_PAD = 1e-9
_ABS_PAD = 1e-300


def query_workers() -> int:
    """Worker count for tree queries, capped by ENTMETRICS_THREADS."""
    raw = os.environ.get("ENTMETRICS_THREADS", "").strip()
    if not raw:
        return -1
    try:
        value = int(raw)
    except ValueError:
        return -1
    return max(1, value)


class NeighborIndex:
    """Immutable query structure over one EmbeddingSet.

    Queries through either backend return results identical to a
    brute-force linear scan; the index never mutates its set.
    """

    def __init__(self, set_: EmbeddingSet, backend: str = "auto"):
        if backend == "auto":
            backend = "kdtree"
        if backend not in ("kdtree", "brute"):
            raise ValueError(f"unknown backend {backend!r}")
        self.set = set_
        self.backend = backend
        self._tree = cKDTree(set_.data) if backend == "kdtree" else None

    @property
    def data(self) -> np.ndarray:
        return self.set.data

    @property
    def n(self) -> int:
        return self.set.n

    @property
    def d(self) -> int:
        return self.set.d


def build_index(set_: EmbeddingSet, backend: str = "auto") -> NeighborIndex:
    """Build a NeighborIndex whose queries equal brute-force results exactly."""
    return NeighborIndex(set_, backend)


def _sq_block(Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Squared distances, shape (len(Q), len(P)), shared arithmetic."""
    acc = np.zeros((Q.shape[0], P.shape[0]))
    for j in range(Q.shape[1]):
        diff = Q[:, j][:, None] - P[None, :, j]
        acc += diff * diff
    return acc


def _sq_pairs(Q: np.ndarray, rows: np.ndarray, P: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Squared distances for (Q[rows[i]], P[cols[i]]) pairs, shared arithmetic."""
    Qr = Q[rows]
    Pc = P[cols]
    acc = np.zeros(rows.shape[0])
    for j in range(Q.shape[1]):
        diff = Qr[:, j] - Pc[:, j]
        acc += diff * diff
    return acc


def _block_size(n_ref: int) -> int:
    # keep each brute-force block near 32 MB of float64
    return max(1, int(4_000_000 // max(1, n_ref)))


def _candidate_lists(tree: cKDTree, Q: np.ndarray, radii: np.ndarray):
    """Inflated closed-ball candidate indices per query row."""
    r_cand = radii * (1.0 + _REL_PAD) + _ABS_PAD
    lists = tree.query_ball_point(Q, r_cand, workers=query_workers())
    counts = np.fromiter((len(l) for l in lists), dtype=np.int64, count=len(lists))
    total = int(counts.sum())
    cand = np.fromiter((i for l in lists for i in l), dtype=np.int64, count=total)
    rows = np.repeat(np.arange(len(lists)), counts)
    return rows, cand, counts


def kth_distances(
    index: NeighborIndex,
    k: int,
    queries: np.ndarray | None = None,
    exclude_self: bool = True,
) -> np.ndarray:
    """Distance from each query point to its kth-nearest indexed row.

    Parameters
    ----------
    index : NeighborIndex
    k : int
        Neighbor order, 1-based.
    queries : array or None
        Query matrix. None means the index's own rows, in which case
        exclude_self applies (matching each row to itself by identity).
    exclude_self : bool
        Only meaningful when queries is None.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    P = index.data
    if queries is None:
        Q = P
        exclude = np.arange(index.n) if exclude_self else None
    else:
        Q = np.ascontiguousarray(np.asarray(queries, dtype=np.float64))
        if Q.ndim != 2 or Q.shape[1] != index.d:
            raise ValueError(f"queries must be (m, {index.d}), got {Q.shape}")
        exclude = None
    limit = index.n - (1 if exclude is not None else 0)
    if k > limit:
        raise ValueError(f"k={k} out of range for {index.n} rows"
                         f"{' with self-exclusion' if exclude is not None else ''}")

    if index.backend == "brute":
        return _kth_brute(Q, P, k, exclude)
    return _kth_tree(index, Q, k, exclude)


def _kth_brute(Q, P, k, exclude):
    out = np.empty(Q.shape[0])
    step = _block_size(P.shape[0])
    for start in range(0, Q.shape[0], step):
        stop = min(start + step, Q.shape[0])
        sq = _sq_block(Q[start:stop], P)
        if exclude is not None:
            sq[np.arange(stop - start), exclude[start:stop]] = np.inf
        out[start:stop] = np.partition(sq, k - 1, axis=1)[:, k - 1]
    return np.sqrt(out)


def _kth_tree(index, Q, k, exclude):
    m = min(k + (1 if exclude is not None else 0), index.n)
    td = index._tree.query(Q, k=m, workers=query_workers())[0]
    r_est = td[:, m - 1] if m > 1 else td.reshape(-1)
    rows, cand, counts = _candidate_lists(index._tree, Q, r_est)
    sq = _sq_pairs(Q, rows, index.data, cand)
    if exclude is not None:
        sq[cand == exclude[rows]] = np.inf
    padded = np.full((Q.shape[0], int(counts.max())), np.inf)
    offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
    padded[rows, np.arange(cand.shape[0]) - offsets[rows]] = sq
    padded.sort(axis=1)
    return np.sqrt(padded[:, k - 1])


def ball_counts(
    index: NeighborIndex,
    centers: np.ndarray,
    radii: np.ndarray,
    exclude_rows: np.ndarray | None = None,
) -> np.ndarray:
    """Closed-ball membership counts, one per (center, radius) pair.

    exclude_rows, when given, removes one indexed row per center from its
    count by identity (the center's own row, for same-set queries).
    """
    C = np.ascontiguousarray(np.asarray(centers, dtype=np.float64))
    r = np.asarray(radii, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    P = index.data
    if index.backend == "brute":
        out = np.empty(C.shape[0], dtype=np.int64)
        step = _block_size(P.shape[0])
        for start in range(0, C.shape[0], step):
            stop = min(start + step, C.shape[0])
            sq = _sq_block(C[start:stop], P)
            if exclude_rows is not None:
                sq[np.arange(stop - start), exclude_rows[start:stop]] = np.inf
            rr = r[start:stop]
            out[start:stop] = (sq <= (rr * rr)[:, None]).sum(axis=1)
        return out
    rows, cand, _ = _candidate_lists(index._tree, C, r)
    sq = _sq_pairs(C, rows, P, cand)
    inside = sq <= r[rows] * r[rows]
    if exclude_rows is not None:
        inside &= cand != exclude_rows[rows]
    return np.bincount(rows[inside], minlength=C.shape[0]).astype(np.int64)


def nearest_rows(index: NeighborIndex, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest indexed row per query: (indices, distances), lowest index on ties."""
    Q = np.ascontiguousarray(np.asarray(queries, dtype=np.float64))
    P = index.data
    if index.backend == "brute":
        idx = np.empty(Q.shape[0], dtype=np.int64)
        dist = np.empty(Q.shape[0])
        step = _block_size(P.shape[0])
        for start in range(0, Q.shape[0], step):
            stop = min(start + step, Q.shape[0])
            sq = _sq_block(Q[start:stop], P)
            best = np.argmin(sq, axis=1)  # first minimum = lowest row index
            idx[start:stop] = best
            dist[start:stop] = np.sqrt(sq[np.arange(stop - start), best])
        return idx, dist
    td = index._tree.query(Q, k=1, workers=query_workers())[0]
    rows, cand, counts = _candidate_lists(index._tree, Q, td.reshape(-1))
    sq = _sq_pairs(Q, rows, P, cand)
    idx = np.empty(Q.shape[0], dtype=np.int64)
    dist = np.empty(Q.shape[0])
    offsets = np.concatenate(([0], np.cumsum(counts)))
    for i in range(Q.shape[0]):
        lo, hi = offsets[i], offsets[i + 1]
        s, c = sq[lo:hi], cand[lo:hi]
        best_val = s.min()
        dist[i] = np.sqrt(best_val)
        idx[i] = c[s == best_val].min()
    return idx, dist


def kth_distance(
    index: NeighborIndex,
    query,
    k: int,
    exclude_self: bool = False,
) -> float:
    """Distance from one query to its kth-nearest indexed row.

    query may be a d-vector, or an integer row number of the indexed set
    itself; exclude_self requires the latter because exclusion is by row
    identity, not coordinate value.
    """
    row = None
    if isinstance(query, (int, np.integer)):
        row = int(query)
        if not 0 <= row < index.n:
            raise ValueError(f"row {row} out of range for {index.n} rows")
        point = index.data[row]
    else:
        if exclude_self:
            raise ValueError("exclude_self requires the query as a member row number")
        point = np.asarray(query, dtype=np.float64).reshape(-1)
    limit = index.n - (1 if exclude_self else 0)
    if not 1 <= k <= limit:
        raise ValueError(f"k={k} out of range for {index.n} rows"
                         f"{' with self-exclusion' if exclude_self else ''}")
    sq = _sq_pairs(point[None, :], np.zeros(index.n, dtype=np.int64),
                   index.data, np.arange(index.n))
    if exclude_self:
        sq[row] = np.inf
    return float(np.sqrt(np.partition(sq, k - 1)[k - 1]))


def count_within(
    index: NeighborIndex,
    center,
    radius: float,
    exclude_self: bool = False,
) -> int:
    """Closed-ball count around one center (see kth_distance for center forms)."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    row = None
    if isinstance(center, (int, np.integer)):
        row = int(center)
        if not 0 <= row < index.n:
            raise ValueError(f"row {row} out of range for {index.n} rows")
        point = index.data[row]
    else:
        if exclude_self:
            raise ValueError("exclude_self requires the center as a member row number")
        point = np.asarray(center, dtype=np.float64).reshape(-1)
    sq = _sq_pairs(point[None, :], np.zeros(index.n, dtype=np.int64),
                   index.data, np.arange(index.n))
    if exclude_self:
        sq[row] = np.inf
    return int((sq <= radius * radius).sum())


def union_ball_stats(
    index_x: NeighborIndex,
    index_y: NeighborIndex,
    k: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-row-of-Y union-ball statistics.

    For each row Y_i: the radius is the distance to its kth-nearest
    neighbor in X union Y (Y_i itself excluded by identity), and the
    returned counts are the closed-ball memberships from X and from Y,
    the center excluded. Returns (radii, counts_x, counts_y).
    """
    nx, ny = index_x.n, index_y.n
    if index_x.d != index_y.d:
        raise ValueError(f"dimension mismatch: {index_x.d} vs {index_y.d}")
    if not 1 <= k <= nx + ny - 1:
        raise ValueError(f"k={k} out of range for union of {nx + ny} rows")
    Y = index_y.data
    w = query_workers()

    mx = min(k, nx)
    my = min(k + 1, ny)
    if index_x.backend == "brute" or index_y.backend == "brute":
        sq_x = _sq_block(Y, index_x.data)
        sq_y = _sq_block(Y, Y)
        sq_y[np.arange(ny), np.arange(ny)] = np.inf
        merged = np.concatenate([sq_x, sq_y], axis=1)
        merged.sort(axis=1)
        rad_sq = merged[:, k - 1]
        counts_x = (sq_x <= rad_sq[:, None]).sum(axis=1)
        counts_y = (sq_y <= rad_sq[:, None]).sum(axis=1)
        return np.sqrt(rad_sq), counts_x.astype(np.int64), counts_y.astype(np.int64)

    tdx = index_x._tree.query(Y, k=mx, workers=w)[0].reshape(ny, mx)
    tdy = index_y._tree.query(Y, k=my, workers=w)[0].reshape(ny, my)
    # estimate the union kth radius from tree distances, self dropped
    est = np.empty(ny)
    for i in range(ny):
        pool = np.concatenate([tdx[i], tdy[i][1:]])  # tdy column 0 is self (distance 0)
        pool.sort()
        est[i] = pool[min(k, pool.shape[0]) - 1]
    rows_x, cand_x, cnt_x = _candidate_lists(index_x._tree, Y, est)
    rows_y, cand_y, cnt_y = _candidate_lists(index_y._tree, Y, est)
    sqx = _sq_pairs(Y, rows_x, index_x.data, cand_x)
    sqy = _sq_pairs(Y, rows_y, Y, cand_y)
    sqy[cand_y == rows_y] = np.inf  # identity self-exclusion
    off_x = np.concatenate(([0], np.cumsum(cnt_x)))
    off_y = np.concatenate(([0], np.cumsum(cnt_y)))
    radii = np.empty(ny)
    counts_x = np.empty(ny, dtype=np.int64)
    counts_y = np.empty(ny, dtype=np.int64)
    for i in range(ny):
        sx = sqx[off_x[i]:off_x[i + 1]]
        sy = sqy[off_y[i]:off_y[i + 1]]
        pool = np.concatenate([sx, sy])
        pool.sort()
        rad_sq = pool[k - 1]
        radii[i] = np.sqrt(rad_sq)
        counts_x[i] = int((sx <= rad_sq).sum())
        counts_y[i] = int((sy <= rad_sq).sum())
    return radii, counts_x, counts_y


def mixed_ball_stats(
    index_a: NeighborIndex,
    index_b: NeighborIndex,
    center_row: int,
    k: int,
    center_in: str = "b",
) -> tuple[int, int]:
    """Counts from each set inside the union-ball around one member row.

    The ball radius is the kth-nearest-neighbor distance of the center
    within A union B, the center itself excluded by row identity; counts
    are closed-ball memberships excluding the center. Returns
    (count_a, count_b).
    """
    if center_in not in ("a", "b"):
        raise ValueError(f"center_in must be 'a' or 'b', got {center_in!r}")
    if index_a.d != index_b.d:
        raise ValueError(f"dimension mismatch: {index_a.d} vs {index_b.d}")
    na, nb = index_a.n, index_b.n
    if not 1 <= k <= na + nb - 1:
        raise ValueError(f"k={k} out of range for union of {na + nb} rows")
    home, other = (index_b, index_a) if center_in == "b" else (index_a, index_b)
    if not 0 <= center_row < home.n:
        raise ValueError(f"row {center_row} out of range for {home.n} rows")
    point = home.data[center_row]
    sq_home = _sq_pairs(point[None, :], np.zeros(home.n, dtype=np.int64),
                        home.data, np.arange(home.n))
    sq_home[center_row] = np.inf
    sq_other = _sq_pairs(point[None, :], np.zeros(other.n, dtype=np.int64),
                         other.data, np.arange(other.n))
    pool = np.concatenate([sq_home, sq_other])
    rad_sq = np.partition(pool, k - 1)[k - 1]
    count_home = int((sq_home <= rad_sq).sum())
    count_other = int((sq_other <= rad_sq).sum())
    if center_in == "b":
        return count_other, count_home
    return count_home, count_other
