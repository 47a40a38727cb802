"""Similarity-ranking objective: neighbor sets, negative sampling, softmax loss and gradients.

For a positive pair ``(i, j)`` the candidate set is every concept ``k`` that is
strictly less similar to ``i`` than ``j`` is, plus ``j`` itself. The loss is
the negative log-probability that ``j`` is the nearest candidate under a
softmax over negative hyperbolic distances.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError

#: below this value of ``beta - 1`` two points count as coincident
COINCIDENT = 1e-12


class SimilarityDataset:
    """Concepts plus a sparse symmetric matrix of nonnegative similarity scores.

    Scores are stored per row in CSR form with sorted column indices. Pairs
    that are not stored have score 0.
    """

    def __init__(self, concepts, pairs):
        """
        Parameters
        ----------
        concepts : sequence of str
            Concept identifiers; their order fixes the row indices.
        pairs : mapping of (int, int) -> float
            Scores for unordered pairs. Either orientation may be given, but
            if both are present they must agree.
        """
        self.concepts = [str(c) for c in concepts]
        self.index = {c: i for i, c in enumerate(self.concepts)}
        if len(self.index) != len(self.concepts):
            raise DataError("concept ids must be unique")
        m = len(self.concepts)

        sym = {}
        for (i, j), s in pairs.items():
            i, j, s = int(i), int(j), float(s)
            if i == j:
                raise DataError(f"self-pair for concept {self.concepts[i]!r}")
            if not (0 <= i < m and 0 <= j < m):
                raise DataError(f"pair ({i}, {j}) out of range for {m} concepts")
            if not np.isfinite(s) or s < 0:
                raise DataError(f"score for ({self.concepts[i]!r}, {self.concepts[j]!r}) "
                                f"must be finite and >= 0, got {s}")
            key = (min(i, j), max(i, j))
            if key in sym and sym[key] != s:
                raise DataError(f"asymmetric scores for ({self.concepts[i]!r}, "
                                f"{self.concepts[j]!r}): {sym[key]} vs {s}")
            sym[key] = s

        rows = [[] for _ in range(m)]
        for (i, j), s in sym.items():
            rows[i].append((j, s))
            rows[j].append((i, s))
        indptr = np.zeros(m + 1, dtype=np.int64)
        indices, values = [], []
        for i, row in enumerate(rows):
            row.sort()
            indices.extend(c for c, _ in row)
            values.extend(s for _, s in row)
            indptr[i + 1] = len(indices)
        self.indptr = indptr
        self.indices = np.asarray(indices, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self._pairs = sym

    @classmethod
    def from_scores(cls, triples, concepts=None):
        """Build from ``(id_a, id_b, score)`` triples; ids not in ``concepts`` are appended."""
        concepts = list(concepts) if concepts is not None else []
        index = {c: i for i, c in enumerate(concepts)}
        pairs = {}
        for a, b, s in triples:
            for c in (a, b):
                if c not in index:
                    index[c] = len(concepts)
                    concepts.append(c)
            pairs[(index[a], index[b])] = s
        return cls(concepts, pairs)

    def __len__(self):
        return len(self.concepts)

    @property
    def num_pairs(self):
        return len(self._pairs)

    def row(self, i):
        """(column indices, scores) of the stored entries in row ``i``."""
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b], self.values[a:b]

    def score(self, i, j):
        if i == j:
            return 0.0
        return self._pairs.get((min(i, j), max(i, j)), 0.0)

    def dense(self):
        x = np.zeros((len(self), len(self)))
        for (i, j), s in self._pairs.items():
            x[i, j] = x[j, i] = s
        return x

    def items(self):
        """Unordered stored pairs ``((i, j), score)`` with ``i < j``."""
        return sorted(self._pairs.items())

    def positives(self):
        """All ordered pairs with positive score, both orientations, as an ``(P, 2)`` array."""
        out = []
        for (i, j), s in sorted(self._pairs.items()):
            if s > 0:
                out.append((i, j))
                out.append((j, i))
        return np.asarray(out, dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True)
class TrainBatchItem:
    anchor: int
    target: int
    negatives: tuple

    def __post_init__(self):
        if self.anchor == self.target:
            raise ValueError("anchor and target must differ")
        if self.target in self.negatives:
            raise ValueError("target cannot be one of its own negatives")

    @property
    def rows(self):
        return (self.anchor, self.target) + tuple(self.negatives)


def neighbor_set(dataset, i, j):
    """Concepts strictly less similar to ``i`` than ``j`` is, plus ``j`` (never ``i``)."""
    threshold = dataset.score(i, j)
    cols, vals = dataset.row(i)
    excluded = set(cols[vals >= threshold].tolist())
    excluded.add(i)
    out = {k for k in range(len(dataset)) if k not in excluded}
    out.add(j)
    return out


def sample_negatives(neighbors, target, k, rng):
    """Uniform sample without replacement of ``min(k, |N| - 1)`` members of ``N - {target}``.

    Candidates are sorted before sampling so the result depends only on the
    set contents and the generator state.
    """
    pool = sorted(c for c in neighbors if c != target)
    if k <= 0 or not pool:
        return []
    if len(pool) <= k:
        return pool
    picked = rng.choice(len(pool), size=k, replace=False)
    return [pool[p] for p in picked]


class NegativeSampler:
    """Draws negatives for ``(i, j)`` from the dataset without materializing ``N(i, j)``.

    Uses rejection sampling when the admissible set is at least half the
    concepts and explicit enumeration otherwise. Both are uniform without
    replacement.
    """

    def __init__(self, dataset):
        self.dataset = dataset
        self.m = len(dataset)

    def admissible_count(self, i, j):
        """``|N(i, j)| - 1``."""
        threshold = self.dataset.score(i, j)
        cols, vals = self.dataset.row(i)
        unscored = self.m - 1 - len(cols)
        return unscored + int(np.count_nonzero(vals < threshold))

    def _mask(self, i, threshold):
        cols, vals = self.dataset.row(i)
        ok = np.ones(self.m, dtype=bool)
        ok[i] = False
        ok[cols[vals >= threshold]] = False
        return ok

    def sample(self, i, j, k, rng):
        if k <= 0:
            return np.empty(0, dtype=np.int64)
        threshold = self.dataset.score(i, j)
        count = self.admissible_count(i, j)
        if count == 0:
            return np.empty(0, dtype=np.int64)
        if count <= k:
            return np.flatnonzero(self._mask(i, threshold))
        if 2 * count < self.m:
            pool = np.flatnonzero(self._mask(i, threshold))
            return pool[rng.choice(len(pool), size=k, replace=False)]

        cols, vals = self.dataset.row(i)
        chosen = []
        seen = set()
        while len(chosen) < k:
            draws = rng.integers(0, self.m, size=2 * (k - len(chosen)) + 8)
            pos = np.searchsorted(cols, draws)
            pos_c = np.minimum(pos, max(len(cols) - 1, 0))
            if len(cols):
                stored = cols[pos_c] == draws
                score = np.where(stored, vals[pos_c], 0.0)
            else:
                score = np.zeros(len(draws))
            ok = (draws != i) & (score < threshold)
            for d in draws[ok].tolist():
                if d not in seen:
                    seen.add(d)
                    chosen.append(d)
                    if len(chosen) == k:
                        break
        return np.asarray(chosen, dtype=np.int64)

    def item(self, i, j, k, rng):
        return TrainBatchItem(int(i), int(j), tuple(self.sample(i, j, k, rng).tolist()))


def _beta_minus_one(x, y):
    d = x - y
    return 0.5 * (np.sum(d[..., 1:] ** 2, axis=-1) - d[..., 0] ** 2)


def _metric_flip(x):
    g = np.array(x, dtype=np.float64)
    g[..., 0] = -g[..., 0]
    return g


def _distance_weights(anchor, others):
    """Distances from ``anchor`` to each row of ``others`` and ``1 / sqrt(beta^2 - 1)``."""
    t = np.maximum(_beta_minus_one(anchor, others), 0.0)
    root = np.sqrt(t) * np.sqrt(t + 2.0)
    dist = np.log1p(t + root)
    coincident = t <= COINCIDENT
    inv = np.where(coincident, 0.0, 1.0 / np.where(coincident, 1.0, root))
    return dist, inv


def distance_egrad(x, y):
    """Euclidean (ambient) gradients of ``arcosh(-<x, y>_L)`` w.r.t. ``x`` and ``y``.

    Coincident points (``beta <= 1 + 1e-12``) get zero gradients.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, inv = _distance_weights(x, y)
    inv = np.asarray(inv)[..., None]
    return -inv * _metric_flip(y), -inv * _metric_flip(x)


def softmax_prob(anchor, target, candidates):
    """Probability that ``target`` is the candidate nearest to ``anchor``.

    ``candidates`` is a stack of points that must include ``target``.
    """
    anchor = np.asarray(anchor, dtype=np.float64)
    cands = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    d_all, _ = _distance_weights(anchor, cands)
    d_t, _ = _distance_weights(anchor, np.asarray(target, dtype=np.float64)[None, :])
    shift = d_all.min()
    return float(np.exp(-(d_t[0] - shift)) / np.sum(np.exp(-(d_all - shift))))


def ranking_loss(anchor, candidates):
    """Loss and ambient gradients for one anchor against ``candidates`` (target first).

    Returns ``(loss, anchor_grad, candidate_grads)``.
    """
    dist, inv = _distance_weights(anchor, candidates)
    shift = dist.min()
    e = np.exp(-(dist - shift))
    z = e.sum()
    loss = dist[0] - shift + np.log(z)
    # d loss / d dist_c = [c == target] - p_c
    w = -e / z
    w[0] += 1.0
    coef = (w * inv)[:, None]
    cand_grads = -coef * _metric_flip(anchor)[None, :]
    anchor_grad = -(coef * _metric_flip(candidates)).sum(axis=0)
    return float(loss), anchor_grad, cand_grads


def loss_and_grads(item, table):
    """Loss ``-log Pr(phi(i, j) = j)`` for one batch item and its sparse gradients.

    Returns ``(loss, rows, grads)`` where ``grads[r]`` is the ambient gradient
    for table row ``rows[r]``; rows are the anchor, the target, then the
    negatives.
    """
    rows = np.asarray(item.rows, dtype=np.int64)
    pts = table.points if hasattr(table, "points") else np.asarray(table)
    loss, g_anchor, g_cands = ranking_loss(pts[rows[0]], pts[rows[1:]])
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss for pair ({item.anchor}, {item.target})")
    grads = np.vstack([g_anchor[None, :], g_cands])
    return loss, rows, grads
