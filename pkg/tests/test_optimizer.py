import numpy as np
import pytest

from lorentz_embed import geometry as g
from lorentz_embed.errors import NumericError
from lorentz_embed.objective import distance_egrad
from lorentz_embed.optimizer import (RSGD, EmbeddingTable, OptimizerConfig, init_embeddings,
                                     riemannian_grad, rsgd_step, steepest_direction)


def test_steepest_direction_flips_time():
    np.testing.assert_array_equal(steepest_direction([1, 0, 0], [2.0, -3.0, 4.0]),
                                  [-2.0, -3.0, 4.0])


def test_steepest_direction_involution():
    rng = np.random.default_rng(0)
    e = rng.normal(size=(10, 4))
    np.testing.assert_array_equal(steepest_direction(e, steepest_direction(e, e)), e)
    np.testing.assert_array_equal(steepest_direction(e[0], np.zeros(4)), np.zeros(4))


def test_steepest_direction_does_not_mutate():
    e = np.array([1.0, 2.0, 3.0])
    steepest_direction(e, e)
    np.testing.assert_array_equal(e, [1.0, 2.0, 3.0])


def test_riemannian_grad_zero():
    x = g.lift([0.5, 0.1])
    np.testing.assert_array_equal(riemannian_grad(x, np.zeros(3)), np.zeros(3))


def test_riemannian_grad_at_basepoint():
    # flip -> (-a, b, c); projecting at the basepoint zeroes the time coordinate
    np.testing.assert_array_equal(riemannian_grad([1, 0, 0], [5.0, -1.0, 2.0]), [0, -1.0, 2.0])


def test_riemannian_grad_tangent():
    rng = np.random.default_rng(1)
    x = g.lift(rng.normal(size=(10_000, 3)))
    gr = riemannian_grad(x, rng.normal(size=x.shape))
    scale = np.abs(x * gr).sum(axis=1)
    assert np.all(np.abs(g.lorentz_inner(x, gr)) <= 1e-10 * np.maximum(scale, 1))


def test_rsgd_zero_gradient():
    x = g.lift([0.3, -0.7, 1.1])
    np.testing.assert_allclose(rsgd_step(x, np.zeros(4), 0.1), x, atol=1e-15, rtol=0)


def test_rsgd_rejects_bad_input():
    x = g.lift([0.3, -0.7])
    with pytest.raises(NumericError):
        rsgd_step(x, [np.nan, 0, 0], 0.1)
    with pytest.raises(ValueError):
        rsgd_step(x, [0, 0, 0], 0.0)


def test_rsgd_descends_squared_distance():
    rng = np.random.default_rng(2)
    for _ in range(200):
        theta = g.lift(rng.normal(size=3))
        y = g.lift(rng.normal(size=3))
        d = g.lorentz_distance(theta, y)
        if d < 1e-3:
            continue
        _, gy = distance_egrad(y, theta)
        new = rsgd_step(theta, 2 * d * gy, 0.01)
        assert g.lorentz_distance(new, y) ** 2 < d ** 2


def test_rsgd_step_length_is_lr_times_grad_norm():
    rng = np.random.default_rng(3)
    x = g.lift(rng.normal(size=(500, 4)))
    e = rng.normal(size=x.shape)
    lr = 0.05
    new = rsgd_step(x, e, lr, renormalize=False)
    expected = lr * np.asarray(g.tangent_norm(riemannian_grad(x, e)))
    np.testing.assert_allclose(g.lorentz_distance(x, new), expected, atol=1e-8, rtol=0)


def test_rsgd_constraint_after_many_steps():
    rng = np.random.default_rng(4)
    theta = g.lift(rng.normal(scale=0.5, size=(4, 3)))
    targets = g.lift(rng.normal(scale=2.0, size=(4, 3)))
    for _ in range(100_000 // 4):
        _, egrad = distance_egrad(targets, theta)
        theta = rsgd_step(theta, egrad + rng.normal(scale=0.1, size=theta.shape), 0.01)
    assert np.all(g.constraint_error(theta) <= 1e-8)


def test_init_bounds_and_determinism():
    n = 5
    t = init_embeddings(100, n, seed=3)
    assert t.points.shape == (100, n + 1)
    assert np.all(np.abs(t.points[:, 1:]) < 1e-3)
    assert np.all(t.points[:, 0] >= 1)
    assert np.all(t.points[:, 0] <= np.sqrt(1 + n * 1e-6))
    assert t.is_valid()
    np.testing.assert_array_equal(t.points, init_embeddings(100, n, seed=3).points)
    assert not np.array_equal(t.points, init_embeddings(100, n, seed=4).points)


def test_init_wordnet_scale():
    t = init_embeddings(82115, 10, seed=0)
    assert len(t) == 82115
    assert t.dim == 10


def test_init_validation():
    with pytest.raises(ValueError):
        init_embeddings(0, 3, 0)
    with pytest.raises(ValueError):
        init_embeddings(3, 1, 0)


def test_embedding_table():
    t = EmbeddingTable(["a", "b"], g.lift(np.zeros((2, 2))))
    assert t.row("b") == 1
    assert "a" in t and "z" not in t
    with pytest.raises(KeyError):
        t.row("z")
    with pytest.raises(ValueError):
        EmbeddingTable(["a", "a"], g.lift(np.zeros((2, 2))))
    with pytest.raises(ValueError):
        EmbeddingTable(["a"], g.lift(np.zeros((2, 2))))


def test_rsgd_renormalize_schedule():
    t = init_embeddings(3, 2, seed=0)
    opt = RSGD(t, renormalize_every=2)
    for _ in range(4):
        opt.step(np.array([0, 1]), np.ones((2, 3)), 0.1)
    assert opt.steps == 4
    assert t.is_valid()


@pytest.mark.parametrize("kwargs", [
    {"learning_rate": 0}, {"epochs": 0}, {"burnin_epochs": -1},
    {"burnin_factor": 0}, {"burnin_factor": 1.5}, {"renormalize_every": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        OptimizerConfig(**kwargs)


def test_config_burnin_schedule():
    cfg = OptimizerConfig(learning_rate=0.3, burnin_epochs=2, burnin_factor=0.1)
    assert cfg.lr_for_epoch(0) == pytest.approx(0.03)
    assert cfg.lr_for_epoch(2) == 0.3
    assert cfg.digest() == OptimizerConfig(learning_rate=0.3, burnin_epochs=2,
                                           burnin_factor=0.1).digest()
