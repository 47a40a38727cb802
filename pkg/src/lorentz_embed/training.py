"""Training loop: RSGD over shuffled positive pairs with sampled negatives."""

import logging
import threading

import numpy as np

from .errors import DataError, NumericError
from .geometry import ZERO_TANGENT
from .objective import COINCIDENT, NegativeSampler, ranking_loss
from .optimizer import RSGD, init_embeddings, rsgd_step

logger = logging.getLogger(__name__)

DEFAULT_NEGATIVES = 50
_LOCK_STRIPES = 1024


def train(dataset, dim, config, negatives=DEFAULT_NEGATIVES, threads=1, callback=None,
          init=None):
    """Learn hyperboloid embeddings for ``dataset``.

    Each epoch visits every positive pair (both orientations) in shuffled
    order; one pair plus its sampled negatives is one update.

    Parameters
    ----------
    dataset : SimilarityDataset
    dim : int
        Hyperbolic dimension (points have ``dim + 1`` coordinates).
    config : OptimizerConfig
    negatives : int
        Negatives sampled per positive pair.
    threads : int
        1 runs the deterministic single-threaded loop. More than 1 shares the
        table between worker threads; results are then not reproducible.
    callback : callable, optional
        Called as ``callback(epoch, table, mean_loss)`` after every epoch.
        Returning ``False`` stops training early.
    init : EmbeddingTable, optional
        Starting table instead of a fresh random initialization.

    Returns
    -------
    (EmbeddingTable, list of float)
        The trained table and the mean loss of every epoch.
    """
    if len(dataset) == 0:
        raise DataError("dataset has no concepts")
    positives = dataset.positives()
    if len(positives) == 0:
        raise DataError("dataset has no positive pairs to train on")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if negatives < 1:
        raise ValueError("negatives must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")

    seeds = np.random.SeedSequence(config.seed).spawn(2)
    if init is None:
        table = init_embeddings(len(dataset), dim, seeds[0], ids=dataset.concepts)
    else:
        if list(init.ids) != list(dataset.concepts) or init.dim != dim:
            raise DataError("initial table does not match the dataset concepts or dim")
        table = init.copy()
    rng = np.random.default_rng(seeds[1])
    sampler = NegativeSampler(dataset)

    history = []
    opt = RSGD(table, config.renormalize_every)
    for epoch in range(config.epochs):
        lr = config.lr_for_epoch(epoch)
        order = rng.permutation(len(positives))
        if threads == 1:
            mean_loss = _epoch_serial(opt, positives[order], sampler, negatives, lr, rng)
        else:
            mean_loss = _epoch_threaded(table, positives[order], sampler, negatives, lr, rng,
                                        threads, config.renormalize_every)
        history.append(mean_loss)
        logger.debug("epoch %d lr=%g loss=%.6f", epoch, lr, mean_loss)
        if callback is not None and callback(epoch, table, mean_loss) is False:
            break
    return table, history


def fused_step(pts, rows, lr, renormalize=True):
    """Loss, gradients and RSGD update for one item, in place on ``pts[rows]``.

    Same arithmetic as ``loss_and_grads`` followed by ``rsgd_step`` on every
    touched row, with the metric flip and the projection folded together.
    ``rows`` must be distinct, anchor first and target second.
    """
    P = pts[rows]
    a = P[0]
    C = P[1:]
    diff = C - a
    sq = diff * diff
    t = 0.5 * (sq[:, 1:].sum(axis=1) - sq[:, 0])
    np.maximum(t, 0.0, out=t)
    root = np.sqrt(t) * np.sqrt(t + 2.0)
    dist = np.log1p(t + root)
    shift = dist.min()
    e = np.exp(shift - dist)
    z = e.sum()
    loss = dist[0] - shift + np.log(z)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss for pair ({rows[0]}, {rows[1]})")
    w = -e / z
    w[0] += 1.0
    coef = np.where(t <= COINCIDENT, 0.0, w / np.where(t <= COINCIDENT, 1.0, root))
    # steepest-descent directions: the metric flip cancels the one in the distance gradient
    h = np.empty_like(P)
    h[0] = -(coef[:, None] * C).sum(axis=0)
    h[1:] = -coef[:, None] * a
    # project onto each tangent space, then step along -lr * grad
    xh = (P[:, 1:] * h[:, 1:]).sum(axis=1) - P[:, 0] * h[:, 0]
    v = -lr * (h + xh[:, None] * P)
    vv = (v[:, 1:] * v[:, 1:]).sum(axis=1) - v[:, 0] * v[:, 0]
    nv = np.sqrt(np.maximum(vv, 0.0))[:, None]
    small = nv < ZERO_TANGENT
    out = np.cosh(nv) * P + np.sinh(nv) * (v / np.where(small, 1.0, nv))
    out = np.where(small, P, out)
    if renormalize:
        out[:, 0] = np.sqrt(1.0 + (out[:, 1:] * out[:, 1:]).sum(axis=1))
    pts[rows] = out
    return float(loss)


def _epoch_serial(opt, pairs, sampler, k, lr, rng):
    pts = opt.table.points
    total = 0.0
    for i, j in pairs.tolist():
        rows = np.concatenate([(i, j), sampler.sample(i, j, k, rng)])
        opt.steps += 1
        total += fused_step(pts, rows, lr, opt.steps % opt.renormalize_every == 0)
    return total / len(pairs)


def _epoch_threaded(table, pairs, sampler, k, lr, rng, threads, renormalize_every):
    # rows are read and written one at a time under a striped lock, so a
    # reader never sees half of an update; concurrent updates to the same
    # row may overwrite each other
    locks = [threading.Lock() for _ in range(_LOCK_STRIPES)]
    pts = table.points
    chunks = np.array_split(pairs, threads)
    worker_seeds = rng.integers(0, 2**63 - 1, size=threads)
    totals = [0.0] * threads
    errors = []

    def work(w):
        wrng = np.random.default_rng(int(worker_seeds[w]))
        steps = 0
        try:
            for i, j in chunks[w].tolist():
                item = sampler.item(i, j, k, wrng)
                rows = np.asarray(item.rows, dtype=np.int64)
                local = np.empty((len(rows), pts.shape[1]))
                for r, row in enumerate(rows):
                    with locks[row % _LOCK_STRIPES]:
                        local[r] = pts[row]
                loss, g_anchor, g_cands = ranking_loss(local[0], local[1:])
                if not np.isfinite(loss):
                    raise NumericError(f"non-finite loss for pair ({i}, {j})")
                grads = np.vstack([g_anchor[None, :], g_cands])
                steps += 1
                new = rsgd_step(local, grads, lr, renormalize=steps % renormalize_every == 0)
                for r, row in enumerate(rows):
                    with locks[row % _LOCK_STRIPES]:
                        pts[row] = new[r]
                totals[w] += loss
        except Exception as exc:  # re-raised in the caller thread
            errors.append(exc)

    workers = [threading.Thread(target=work, args=(w,)) for w in range(threads)]
    for t in workers:
        t.start()
    for t in workers:
        t.join()
    if errors:
        raise errors[0]
    return sum(totals) / len(pairs)

