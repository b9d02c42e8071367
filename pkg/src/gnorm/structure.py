"""Combinatorial structure of a coefficient matrix.

The support ``E_A = {(i, j) : a_ij != 0}`` is read as a bipartite graph on
rows ``[m]`` and columns ``[n]``. Vertices are written ``("row", i)`` and
``("col", j)`` with 0-based indices.

Also here: block-diagonal composition, and the greedy reordering of rows and
columns into doubly-exponential bands ``N_k = 2^(2^k)`` with the three-way
split ``E1 / E2 / E3`` of the padded square.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import INF, DomainError, ExponentPair, ResourceError, VarianceProfile, as_profile, log_bar
from .envelope import d_infinity, marginal_norms
from .pqnorm import AscentConfig, DyadicNetConfig, certified_norm_interval, exact_norm


class ProfileGraph:
    """Bipartite support graph with lazily memoized BFS distances."""

    def __init__(self, A):
        P = as_profile(A)
        self.rows, self.cols = P.shape
        nz = np.asarray(P.entries) != 0
        self.edges = frozenset(zip(*(x.tolist() for x in np.nonzero(nz))))
        self._row_adj = [np.flatnonzero(nz[i]).tolist() for i in range(self.rows)]
        self._col_adj = [np.flatnonzero(nz[:, j]).tolist() for j in range(self.cols)]
        self.d1 = max((len(a) for a in self._row_adj), default=0)
        self.d2 = max((len(a) for a in self._col_adj), default=0)
        self.d = max(self.d1, self.d2)
        self._bfs_cache: dict = {}

    def _index(self, v) -> int:
        try:
            side, i = v
        except (TypeError, ValueError) as exc:
            raise DomainError(f"vertex must be ('row', i) or ('col', j), got {v!r}") from exc
        if side == "row" and 0 <= i < self.rows:
            return int(i)
        if side == "col" and 0 <= i < self.cols:
            return self.rows + int(i)
        raise DomainError(f"invalid vertex {v!r}")

    def _neighbours(self, u: int):
        if u < self.rows:
            return [self.rows + j for j in self._row_adj[u]]
        return self._col_adj[u - self.rows]

    def distances_from(self, v) -> np.ndarray:
        """BFS distances from ``v`` to every vertex (rows first, then columns); ``inf`` if unreachable."""
        src = self._index(v)
        if src not in self._bfs_cache:
            dist = np.full(self.rows + self.cols, INF)
            dist[src] = 0
            q = deque([src])
            while q:
                u = q.popleft()
                for w in self._neighbours(u):
                    if dist[w] == INF:
                        dist[w] = dist[u] + 1
                        q.append(w)
            self._bfs_cache[src] = dist
        return self._bfs_cache[src]

    def distance(self, u, v) -> float:
        return float(self.distances_from(u)[self._index(v)])

    def row_power_adjacency(self, r: int) -> list[list[int]]:
        """Rows adjacent in ``G_A(r)``: distinct rows at bipartite distance ``<= r``."""
        out = []
        for i in range(self.rows):
            dist = self.distances_from(("row", i))[: self.rows]
            out.append([int(x) for x in np.flatnonzero(dist <= r) if x != i])
        return out


def degrees(A) -> tuple[int, int, int]:
    """``(d1, d2, d)``: largest row support, largest column support, and their max."""
    g = ProfileGraph(A)
    return g.d1, g.d2, g.d


def bipartite_distance(A, u, v) -> float:
    """Shortest-path length between two vertices of the support graph (``inf`` if disconnected)."""
    return ProfileGraph(A).distance(u, v)


def enumerate_r_connected_subsets(A, r: int, k: int, budget: int = 1_000_000) -> list[frozenset]:
    """All ``k``-subsets of rows that are connected in ``G_A(r)``.

    Uses the extension-set scheme (each subset is grown from its smallest
    element only, so it is produced exactly once). Raises
    :class:`ResourceError` once more than ``budget`` search nodes are visited.
    """
    if r < 0 or k < 0:
        raise DomainError("r and k must be nonnegative")
    g = A if isinstance(A, ProfileGraph) else ProfileGraph(A)
    if k == 0:
        return [frozenset()]
    adj = [set(x) for x in g.row_power_adjacency(r)]
    out: list[frozenset] = []
    nodes = [0]

    def extend(sub: set, ext: set, root: int, nbhd: set):
        nodes[0] += 1
        if nodes[0] > budget:
            raise ResourceError(f"r-connected enumeration exceeded {budget} nodes")
        if len(sub) == k:
            out.append(frozenset(sub))
            return
        ext = set(ext)
        while ext:
            w = min(ext)
            ext.discard(w)
            new_ext = ext | {u for u in adj[w] if u > root and u not in sub and u not in nbhd}
            extend(sub | {w}, new_ext, root, nbhd | adj[w])

    for v in range(g.rows):
        extend({v}, {u for u in adj[v] if u > v}, v, adj[v] | {v})
    return sorted(out, key=lambda s: sorted(s))


def check_subset_count_bound(A, r: int, k: int, budget: int = 1_000_000) -> dict:
    """Compare ``|I_r(k)|`` with ``m 4^k d_A^(r k)``."""
    g = ProfileGraph(A)
    count = len(enumerate_r_connected_subsets(g, r, k, budget))
    bound = g.rows * 4**k * g.d ** (r * k)
    return {"r": r, "k": k, "count": count, "bound": bound, "d_A": g.d, "m": g.rows, "holds": count <= bound}


def block_diag_compose(blocks) -> VarianceProfile:
    blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]
    if not blocks:
        raise DomainError("need at least one block")
    m = sum(b.shape[0] for b in blocks)
    n = sum(b.shape[1] for b in blocks)
    out = np.zeros((m, n))
    i = j = 0
    for b in blocks:
        out[i : i + b.shape[0], j : j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return VarianceProfile(out)


def _as_pair(pq) -> ExponentPair:
    if isinstance(pq, ExponentPair):
        return pq
    p, q = pq
    if float(p) > float(q):
        raise DomainError("the block-diagonal identity needs p <= q")
    return ExponentPair(p, q)


def block_diag_norm_check(blocks, pq, tol: float = 1e-12, cfg: AscentConfig | None = None,
                          net: DyadicNetConfig | None = None) -> dict:
    """Norm of a block-diagonal matrix versus the largest block norm."""
    pq = _as_pair(pq)
    C = block_diag_compose(blocks)
    whole = certified_norm_interval(C, pq, cfg, net)
    parts = [certified_norm_interval(b, pq, cfg, net) for b in blocks]
    lo = max(e.lower for e in parts)
    hi = max(e.upper for e in parts)
    exact_whole = exact_norm(C, pq)
    exact_parts = [exact_norm(b, pq) for b in blocks]
    exact = exact_whole is not None and all(e is not None for e in exact_parts)
    report = {
        "composed": [whole.lower, whole.upper],
        "max_block": [lo, hi],
        "overlap": bool(whole.lower <= hi + tol and lo <= whole.upper + tol),
        "exact": exact,
    }
    if exact:
        a, b = exact_whole.value, max(e.value for e in exact_parts)
        report["exact_values"] = [a, b]
        report["equal"] = bool(abs(a - b) <= tol * max(1.0, abs(b)))
    return report


# ---------------------------------------------------------------------------
# band decomposition

PADDING_CAP_LEVEL = 3


def band_size(k: int) -> int:
    """``N_0 = 1`` and ``N_k = 2^(2^k)``."""
    return 1 if k == 0 else 2 ** (2**k)


def band_cut(k: int) -> int:
    """``M_k = N_k + N_k N_{k-1}`` for ``k >= 1`` (and ``M_0 = 1``)."""
    return 1 if k == 0 else band_size(k) + band_size(k) * band_size(k - 1)


def _order_key(values: np.ndarray, idx):
    return sorted(idx, key=lambda i: (-values[i], i))


def _select(a: np.ndarray, other: list[list[int]], k0: int, d_inf: float) -> list[int]:
    """Greedy row order for ``|a|``; ``other[k]`` is the column set ``J_k`` (as a list)."""
    size = a.shape[0]
    line_max = a.max(axis=1)
    chosen: list[int] = []
    taken = np.zeros(size, dtype=bool)

    def take(i):
        chosen.append(int(i))
        taken[i] = True

    def fill_to(target):
        rest = _order_key(line_max, np.flatnonzero(~taken).tolist())
        for i in rest[: target - len(chosen)]:
            take(i)

    def take_above(thr):
        for i in _order_key(line_max, np.flatnonzero(~taken & (line_max > thr)).tolist()):
            take(i)

    if k0 == 0:
        return [0]
    tau = d_inf / math.sqrt(log_bar(band_size(1)))
    take_above(tau)
    if len(chosen) > band_size(1):
        raise AssertionError("more heavy lines than the first band can hold")
    fill_to(band_size(1))
    for k in range(1, k0):
        Nk, Nprev = band_size(k), band_size(k - 1)
        for j in other[k]:
            col = a[:, j]
            cand = sorted(np.flatnonzero(~taken).tolist(), key=lambda i: (-col[i], i))
            for i in cand[:Nprev]:
                take(i)
        if len(chosen) > Nk + Nk * Nprev:
            raise AssertionError("band batch overflow")
        fill_to(Nk + Nk * Nprev)
        take_above(d_inf / math.sqrt(log_bar(Nk)))
        if len(chosen) > band_size(k + 1):
            raise AssertionError("heavy lines overflow the next band")
        fill_to(band_size(k + 1))
    return chosen


@dataclass
class Decomposition:
    """Row/column orders of the padded matrix and the band labels ``1, 2, 3``.

    ``labels[a, b]`` refers to position ``(a, b)`` of the reordered matrix,
    i.e. the original entry ``(row_perm[a], col_perm[b])``.
    """

    size: int
    k0: int
    row_perm: list[int]
    col_perm: list[int]
    labels: np.ndarray
    cut_sequence: list[dict]
    d1: float
    d2: float
    d_inf: float
    p_star: float
    q: float
    shape: tuple[int, int]
    padded: np.ndarray = field(repr=False, default=None)

    @cached_property
    def permuted(self) -> np.ndarray:
        return self.padded[np.ix_(self.row_perm, self.col_perm)]

    def masks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(self.labels == lab for lab in (1, 2, 3))

    def verify(self, rtol: float = 1e-12) -> dict:
        """Partition, reconstruction, band-threshold and off-diagonal decay checks."""
        B = self.permuted
        e1, e2, e3 = self.masks()
        partition = bool(np.all(e1.astype(int) + e2 + e3 == 1))
        recon = B * e1 + B * e2 + B * e3
        back = np.zeros_like(recon)
        back[np.ix_(self.row_perm, self.col_perm)] = recon
        sums_back = bool(np.array_equal(back, self.padded))
        absB = np.abs(B)
        slack = 1.0 + rtol
        decay_violations = 0
        decay2_violations = 0
        threshold_violations = 0
        checked = 0
        for k in range(1, self.k0):
            Nk, Mk, Nprev = band_size(k), band_cut(k), band_size(k - 1)
            col_cap = self.d2 * (1.0 if self.q == INF else Nprev ** (-1.0 / self.q))
            row_cap = self.d1 * (1.0 if self.p_star == INF else Nprev ** (-1.0 / self.p_star))
            col_cap2 = 2 * self.d2 * (1.0 if self.q == INF else 2.0 ** (-(2 ** (k - 1)) / self.q))
            row_cap2 = 2 * self.d1 * (1.0 if self.p_star == INF else 2.0 ** (-(2 ** (k - 1)) / self.p_star))
            if Mk <= self.size:
                low_rows = absB[Mk - 1 :, :Nk]  # row positions >= M_k, column positions <= N_k
                low_cols = absB[:Nk, Mk - 1 :]
                checked += low_rows.size + low_cols.size
                decay_violations += int(np.sum(low_rows > col_cap * slack)) + int(np.sum(low_cols > row_cap * slack))
                decay2_violations += int(np.sum(low_rows > col_cap2 * slack)) + int(
                    np.sum(low_cols > row_cap2 * slack)
                )
        for k in range(1, self.k0 + 1):
            # lines beyond the first N_k positions carry no entry above D_inf / sqrt(Log N_{max(k-1,1)})
            tau = self.d_inf / math.sqrt(log_bar(band_size(max(k - 1, 1))))
            Nk = band_size(k)
            if Nk < self.size:
                threshold_violations += int(np.sum(absB[Nk:, :] > tau * slack))
                threshold_violations += int(np.sum(absB[:, Nk:] > tau * slack))
        return {
            "partition": partition,
            "sums_back": sums_back,
            "decay_checked_entries": checked,
            "decay_violations": decay_violations,
            "decay_doubling_violations": decay2_violations,
            "threshold_violations": threshold_violations,
            "ok": partition and sums_back and decay_violations == 0 and decay2_violations == 0
            and threshold_violations == 0,
        }

    def to_dict(self) -> dict:
        flat = self.labels.ravel()
        change = np.flatnonzero(np.diff(flat)) + 1
        starts = np.concatenate([[0], change])
        ends = np.concatenate([change, [flat.size]])
        rle = [[int(flat[s]), int(e - s)] for s, e in zip(starts, ends)]
        return {
            "size": self.size,
            "k0": self.k0,
            "shape": list(self.shape),
            "row_perm": list(self.row_perm),
            "col_perm": list(self.col_perm),
            "masks_rle": rle,
            "cut_sequence": self.cut_sequence,
            "d1": self.d1,
            "d2": self.d2,
            "d_inf": self.d_inf,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def decode_labels(rle, size: int) -> np.ndarray:
    flat = np.concatenate([np.full(n, lab, dtype=np.int8) for lab, n in rle]) if rle else np.zeros(0, np.int8)
    if flat.size != size * size:
        raise DomainError("mask run-length encoding does not cover the square")
    return flat.reshape(size, size)


def band_labels(size: int) -> np.ndarray:
    """Labels ``1, 2, 3`` of ``E1, E2, E3`` on the ``size x size`` square (0-based positions)."""
    lab = np.full((size, size), 3, dtype=np.int8)
    e1 = np.zeros((size, size), dtype=bool)

    def square(lo, hi, mask):  # 1-based inclusive [lo, hi], clipped
        hi = min(hi, size)
        if lo <= hi:
            mask[lo - 1 : hi, lo - 1 : hi] = True

    square(1, band_cut(1), e1)
    k = 1
    while band_size(2 * k) + 1 <= size:
        square(band_size(2 * k) + 1, band_cut(2 * k + 1), e1)
        k += 1
    e2 = np.zeros_like(e1)
    k = 1
    while band_size(2 * k - 1) + 1 <= size:
        square(band_size(2 * k - 1) + 1, band_cut(2 * k), e2)
        k += 1
    e2 &= ~e1
    lab[e2] = 2
    lab[e1] = 1
    return lab


def greedy_band_decomposition(A, pq: ExponentPair) -> Decomposition:
    """Reorder rows/columns greedily into bands and split the padded square into ``E1/E2/E3``.

    The matrix is padded with zero rows and columns to ``N_{k0}``, the
    smallest band size ``>= max(m, n)``; ``k0 <= 3`` (256 x 256).
    """
    P = as_profile(A)
    m, n = P.shape
    k0 = 0
    while band_size(k0) < max(m, n):
        k0 += 1
    if k0 > PADDING_CAP_LEVEL:
        raise ResourceError(f"matrix {m}x{n} exceeds the {band_size(PADDING_CAP_LEVEL)} padding cap")
    size = band_size(k0)
    padded = np.zeros((size, size))
    padded[:m, :n] = P.entries
    absA = np.abs(padded)
    d1, d2 = marginal_norms(P, pq)
    dinf = d_infinity(P)

    # I_{k+1} needs J_k and J_{k+1} needs I_k; earlier prefixes never change, so grow stage by stage
    rows = _select(absA, [], min(k0, 1), dinf)
    cols = _select(absA.T, [], min(k0, 1), dinf)
    for stage in range(2, k0 + 1):
        J = [[]] + [cols[: band_size(s)] for s in range(1, stage)]
        I = [[]] + [rows[: band_size(s)] for s in range(1, stage)]
        rows, cols = _select(absA, J, stage, dinf), _select(absA.T, I, stage, dinf)
    cut = [{"k": k, "N_k": band_size(k), "M_k": band_cut(k)} for k in range(0, k0 + 1)]
    return Decomposition(
        size=size,
        k0=k0,
        row_perm=rows,
        col_perm=cols,
        labels=band_labels(size),
        cut_sequence=cut,
        d1=d1,
        d2=d2,
        d_inf=dinf,
        p_star=pq.p_star,
        q=pq.q,
        shape=(m, n),
        padded=padded,
    )
