"""Pure-numpy kernel implementations.

Fallback backend for the compiled extension in `_kernels_c`. Both backends
must produce bit-identical results: the greedy farthest-point loop and the
ball query use only per-point 3-term distance sums, which numpy and scalar C
evaluate identically.
"""

import numpy as np


def fps_greedy(coords: np.ndarray, k: int, first: int) -> np.ndarray:
    """Greedy farthest-point selection starting from a given first index.

    Each step picks the point maximizing the min-distance to the selected
    set; exact distance ties break on the lexicographically smallest
    (x, y, z) tuple. Returns indices in selection order.
    """
    n = coords.shape[0]
    selected = np.empty(k, dtype=np.int64)
    selected[0] = first
    min_d2 = ((coords - coords[first]) ** 2).sum(axis=1)
    for i in range(1, k):
        nxt = argmax_with_tiebreak(min_d2, coords)
        selected[i] = nxt
        d2 = ((coords - coords[nxt]) ** 2).sum(axis=1)
        np.minimum(min_d2, d2, out=min_d2)
    return selected


def argmax_with_tiebreak(values: np.ndarray, coords: np.ndarray) -> int:
    """Index of the max value; ties resolved by smallest (x, y, z) tuple."""
    best = values.max()
    ties = np.nonzero(values == best)[0]
    if ties.size == 1:
        return int(ties[0])
    tc = coords[ties]
    order = np.lexsort((tc[:, 2], tc[:, 1], tc[:, 0]))
    return int(ties[order[0]])


def ball_query(centers: np.ndarray, coords: np.ndarray, radius: float, nsample: int) -> np.ndarray:
    """Per-center neighbor indices within `radius`, ascending, padded.

    Fewer than nsample in-radius neighbors: pad by repeating the first one
    found. No in-radius neighbor at all: the nearest point stands in (a
    center drawn from the cloud is its own nearest point at distance 0).
    """
    k = centers.shape[0]
    r2 = radius * radius
    out = np.empty((k, nsample), dtype=np.int64)
    d2_all = ((centers[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    for i in range(k):
        hits = np.nonzero(d2_all[i] <= r2)[0]
        if hits.size == 0:
            out[i, :] = int(np.argmin(d2_all[i]))
        elif hits.size >= nsample:
            out[i, :] = hits[:nsample]
        else:
            out[i, : hits.size] = hits
            out[i, hits.size :] = hits[0]
    return out


def ball_query_nearest(
    centers: np.ndarray, coords: np.ndarray, radius: float, nsample: int
) -> np.ndarray:
    """Ball query truncated to the nsample NEAREST in-radius neighbors.

    Listing order is (distance, lex coords) ascending; padding and the
    no-neighbor fallback match `ball_query`. Unlike index-order truncation
    this rule is a pure function of the geometry, so grouping commutes with
    input permutations (what the depth encoder needs).
    """
    k = centers.shape[0]
    r2 = radius * radius
    out = np.empty((k, nsample), dtype=np.int64)
    d2_all = ((centers[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    for i in range(k):
        hits = np.nonzero(d2_all[i] <= r2)[0]
        if hits.size == 0:
            out[i, :] = int(np.argmin(d2_all[i]))
            continue
        hc = coords[hits]
        order = np.lexsort((hc[:, 2], hc[:, 1], hc[:, 0], d2_all[i][hits]))
        hits = hits[order]
        if hits.size >= nsample:
            out[i, :] = hits[:nsample]
        else:
            out[i, : hits.size] = hits
            out[i, hits.size :] = hits[0]
    return out


_BLOCK = 256  # row blocking keeps pairwise temps ~O(block * N)


def nn_dists(query: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Distance from each query point to its nearest reference point."""
    out = np.empty(query.shape[0], dtype=np.float64)
    for start in range(0, query.shape[0], _BLOCK):
        block = query[start : start + _BLOCK]
        d2 = ((block[:, None, :] - ref[None, :, :]) ** 2).sum(axis=2)
        out[start : start + _BLOCK] = np.sqrt(d2.min(axis=1))
    return out


def max_pairwise_dist(points: np.ndarray) -> float:
    """Maximum pairwise Euclidean distance (the object diameter)."""
    best = 0.0
    for start in range(0, points.shape[0], _BLOCK):
        block = points[start : start + _BLOCK]
        d2 = ((block[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))
