"""Reconstruction and hierarchy metrics for trained embeddings.

Ranks are pessimistic: a candidate at exactly the same distance as the true
neighbor counts against it. MAP and rho are reported as fractions in [0, 1]
and [-1, 1], not percentages.
"""

from collections import defaultdict, deque
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .data import transitive_closure
from .errors import DataError


def _adjacency(observed):
    adj = defaultdict(set)
    for u, v in observed:
        adj[str(u)].add(str(v))
    return adj


def _row(table, concept):
    try:
        return table.row(concept)
    except KeyError:
        raise DataError(f"unknown concept id: {concept!r}") from None


def _distances_from(table, r):
    return np.asarray(geometry.lorentz_distance(table.points[r], table.points))


def rank_edge(table, u, v, observed):
    """Rank of ``d(u, v)`` among distances from ``u`` to every unobserved ``v'``.

    ``observed`` is an iterable of ordered pairs, or a mapping from a node to
    the set of its observed neighbors. ``u`` itself is never a candidate.
    """
    adj = observed if isinstance(observed, dict) else _adjacency(observed)
    ru, rv = _row(table, u), _row(table, v)
    if str(v) not in adj.get(str(u), ()):
        raise ValueError(f"({u!r}, {v!r}) is not an observed edge")
    dist = _distances_from(table, ru)
    mask = np.ones(len(table), dtype=bool)
    mask[ru] = False
    for w in adj[str(u)]:
        mask[_row(table, w)] = False
    return 1 + int(np.count_nonzero(dist[mask] <= dist[rv]))


def _source_metrics(dist, self_row, nbr_rows):
    """Ranks of every neighbor and the average precision for one source node."""
    mask = np.ones(len(dist), dtype=bool)
    mask[self_row] = False
    mask[nbr_rows] = False
    non = np.sort(dist[mask])
    d_nbr = dist[nbr_rows]
    ranks = 1 + np.searchsorted(non, d_nbr, side="right")
    nbr_sorted = np.sort(d_nbr)
    hits = np.searchsorted(nbr_sorted, d_nbr, side="right")
    # everything at distance <= d_v: non-neighbors plus neighbors
    seen = (ranks - 1) + hits
    ap = float(np.mean(hits / seen))
    return ranks, ap


def reconstruction_metrics(table, observed, detail=None):
    """Mean rank over all observed ordered pairs and MAP over source nodes.

    If ``detail`` is a dict it is filled with ``node -> (mean rank, AP)``.
    """
    adj = observed if isinstance(observed, dict) else _adjacency(observed)
    if not any(adj.values()):
        raise ValueError("no observed edges to evaluate")
    rank_sum, rank_count, aps = 0.0, 0, []
    for u in sorted(adj, key=lambda n: _row(table, n)):
        nbrs = adj[u]
        if not nbrs:
            continue
        ru = _row(table, u)
        nbr_rows = np.array(sorted(_row(table, w) for w in nbrs), dtype=np.int64)
        ranks, ap = _source_metrics(_distances_from(table, ru), ru, nbr_rows)
        rank_sum += float(ranks.sum())
        rank_count += len(ranks)
        aps.append(ap)
        if detail is not None:
            detail[u] = (float(ranks.mean()), ap)
    return rank_sum / rank_count, float(np.mean(aps))


def normalized_rank(dag, concept=None):
    """``sp / (sp + lp)`` per node, or for a single ``concept``.

    ``sp`` is the shortest path from the nearest root (a node without
    parents) and ``lp`` the longest path down to any descendant. Isolated
    nodes are roots and get 0.
    """
    sp = {}
    queue = deque()
    for r in dag.roots():
        sp[r] = 0
        queue.append(r)
    while queue:
        n = queue.popleft()
        for c in dag.children.get(n, ()):
            if c not in sp:
                sp[c] = sp[n] + 1
                queue.append(c)
    lp = {}
    for n in reversed(dag.topological_order()):
        lp[n] = max((lp[c] + 1 for c in dag.children.get(n, ())), default=0)
    out = {}
    for n in dag.nodes:
        total = sp[n] + lp[n]
        out[n] = sp[n] / total if total > 0 else 0.0
    if concept is not None:
        try:
            return out[str(concept)]
        except KeyError:
            raise DataError(f"unknown concept id: {concept!r}") from None
    return out


def average_ranks(values):
    """1-based ranks with ties sharing the mean of the positions they occupy."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    start = 0
    n = len(values)
    while start < n:
        stop = start + 1
        while stop < n and sorted_vals[stop] == sorted_vals[start]:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + stop - 1) + 1.0
        start = stop
    return ranks


def spearman_rho(xs, ys):
    """Spearman rank correlation with average ranks for ties."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("spearman_rho needs two 1-d sequences of equal length")
    if len(xs) < 2:
        raise ValueError("spearman_rho needs at least two observations")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt(np.dot(rx, rx) * np.dot(ry, ry))
    if denom == 0:
        raise ValueError("spearman_rho is undefined for a constant input")
    return float(np.clip(np.dot(rx, ry) / denom, -1.0, 1.0))


def generality_norm(table, concept):
    """Euclidean norm of the concept's Poincare-ball image; near 0 means general."""
    p = geometry.to_poincare(table.points[_row(table, concept)])
    return float(np.linalg.norm(p))


@dataclass
class EvalReport:
    mean_rank: float
    map: float
    spearman_rho: float
    detail: list = field(default_factory=list, repr=False)

    def records(self):
        return [("mean_rank", self.mean_rank), ("map", self.map),
                ("spearman_rho", self.spearman_rho)]

    def to_tsv(self):
        return "".join(f"{k}\t{v!r}\n" for k, v in self.records())

    def summary(self):
        return (f"mean rank {self.mean_rank:.3f}, MAP {self.map:.4f}, "
                f"Spearman rho(norm, normalized rank) {self.spearman_rho:.4f} "
                f"over {len(self.detail)} concepts")


def evaluate(table, dag):
    """Reconstruct the undirected closure of ``dag`` and correlate norms with normalized ranks."""
    missing = [n for n in dag.nodes if n not in table]
    if missing:
        shown = ", ".join(missing[:10])
        raise DataError(f"{len(missing)} taxonomy nodes missing from the embedding: {shown}")
    observed = defaultdict(set)
    for u, v in transitive_closure(dag):
        observed[u].add(v)
        observed[v].add(u)
    per_node = {}
    if observed:
        mr, mean_ap = reconstruction_metrics(table, observed, detail=per_node)
    else:
        mr, mean_ap = float("nan"), float("nan")
    ranks = normalized_rank(dag)
    norms = {n: generality_norm(table, n) for n in dag.nodes}
    try:
        rho = spearman_rho([norms[n] for n in dag.nodes], [ranks[n] for n in dag.nodes])
    except ValueError:
        rho = float("nan")
    detail = []
    for n in dag.nodes:
        node_mr, node_ap = per_node.get(n, (float("nan"), float("nan")))
        detail.append({"id": n, "norm": norms[n], "normalized_rank": ranks[n],
                       "mean_rank": node_mr, "ap": node_ap})
    return EvalReport(mr, mean_ap, rho, detail)
