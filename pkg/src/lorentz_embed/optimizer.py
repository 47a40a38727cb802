"""Riemannian SGD on the hyperboloid and the embedding table it updates."""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import NumericError

INIT_RANGE = 1e-3


@dataclass(frozen=True)
class OptimizerConfig:
    """Hyperparameters for RSGD training.

    The first ``burnin_epochs`` of ``epochs`` run at
    ``learning_rate * burnin_factor``.
    """

    learning_rate: float = 0.3
    epochs: int = 100
    burnin_epochs: int = 20
    burnin_factor: float = 0.1
    seed: int = 0
    renormalize_every: int = 1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.burnin_epochs < 0:
            raise ValueError(f"burnin_epochs must be >= 0, got {self.burnin_epochs}")
        if not 0 < self.burnin_factor <= 1:
            raise ValueError(f"burnin_factor must be in (0, 1], got {self.burnin_factor}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.renormalize_every < 1:
            raise ValueError(f"renormalize_every must be >= 1, got {self.renormalize_every}")

    def lr_for_epoch(self, epoch):
        if epoch < self.burnin_epochs:
            return self.learning_rate * self.burnin_factor
        return self.learning_rate

    def digest(self):
        """Short stable hash of the configuration, used in checkpoint metadata."""
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class EmbeddingTable:
    """Concept ids and their hyperboloid coordinates, one row per concept.

    ``points`` has shape ``(m, dim + 1)``.
    """

    ids: list
    points: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.ids = [str(i) for i in self.ids]
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] < 3:
            raise ValueError("points must be a 2-d array with at least 3 columns (dim >= 2)")
        if len(self.ids) != self.points.shape[0]:
            raise ValueError(f"{len(self.ids)} ids for {self.points.shape[0]} points")
        self._index = {c: r for r, c in enumerate(self.ids)}
        if len(self._index) != len(self.ids):
            raise ValueError("embedding ids must be unique")

    def __len__(self):
        return len(self.ids)

    @property
    def dim(self):
        return self.points.shape[1] - 1

    def row(self, concept):
        try:
            return self._index[str(concept)]
        except KeyError:
            raise KeyError(f"unknown concept id: {concept!r}") from None

    def __contains__(self, concept):
        return str(concept) in self._index

    def point(self, concept):
        return self.points[self.row(concept)]

    def copy(self):
        return EmbeddingTable(list(self.ids), self.points.copy())

    def is_valid(self, tol=geometry.CONSTRAINT_TOL):
        return geometry.is_on_hyperboloid(self.points, tol)


def init_embeddings(m, n, seed, ids=None):
    """Points near the origin: spatial coordinates i.i.d. U(-0.001, 0.001), then lifted."""
    if m < 1:
        raise ValueError("need at least one concept")
    if n < 2:
        raise ValueError("dim must be >= 2")
    rng = np.random.default_rng(seed)
    spatial = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(m, n))
    if ids is None:
        ids = [str(i) for i in range(m)]
    return EmbeddingTable(list(ids), geometry.lift(spatial))


def steepest_direction(x, egrad):
    """Apply the inverse metric diag(-1, 1, ..., 1): flip the sign of the time coordinate."""
    h = np.array(egrad, dtype=np.float64)
    if np.shape(x)[-1] != h.shape[-1]:
        raise ValueError(f"dimension mismatch: {np.shape(x)[-1]} vs {h.shape[-1]}")
    h[..., 0] = -h[..., 0]
    return h


def riemannian_grad(x, egrad):
    """Riemannian gradient: steepest-descent direction projected onto the tangent space."""
    return geometry.project_to_tangent(x, steepest_direction(x, egrad))


def rsgd_step(x, egrad, lr, renormalize=True):
    """One RSGD update ``exp_x(-lr * grad)`` for a point or a stack of points.

    Raises :class:`NumericError` if the gradient is not finite.
    """
    if not lr > 0:
        raise ValueError(f"learning rate must be > 0, got {lr}")
    egrad = np.asarray(egrad, dtype=np.float64)
    if not np.all(np.isfinite(egrad)):
        raise NumericError("non-finite gradient in RSGD step")
    grad = riemannian_grad(x, egrad)
    out = geometry.exp_map(x, -lr * grad)
    if renormalize:
        out = geometry.renormalize(out)
    return out


class RSGD:
    """Stateful wrapper around :func:`rsgd_step` that renormalizes on a schedule.

    Updates rows of ``table.points`` in place.
    """

    def __init__(self, table, renormalize_every=1):
        if renormalize_every < 1:
            raise ValueError("renormalize_every must be >= 1")
        self.table = table
        self.renormalize_every = renormalize_every
        self.steps = 0

    def step(self, rows, egrads, lr):
        self.steps += 1
        fix = self.steps % self.renormalize_every == 0
        pts = self.table.points
        pts[rows] = rsgd_step(pts[rows], egrads, lr, renormalize=fix)
