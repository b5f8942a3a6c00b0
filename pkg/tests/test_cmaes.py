import numpy as np
import pytest

from aphbo.benchmarks import eggholder
from aphbo.cmaes import CmaEsConfig, maximize


def neg_sphere(X):
    return -np.sum((np.atleast_2d(X) - 0.5) ** 2, axis=1)


def eggholder_unit(U):
    return -eggholder(-512 + 1024 * np.atleast_2d(U))


class TestMaximize:
    def test_quadratic(self):
        res = maximize(neg_sphere, 3, CmaEsConfig(seed=0))
        assert np.max(np.abs(res.x - 0.5)) < 1e-3
        assert not res.flat

    def test_value_matches_score(self):
        res = maximize(neg_sphere, 2, CmaEsConfig(seed=1))
        assert res.value == neg_sphere(res.x)[0]

    def test_constant_is_flat(self):
        res = maximize(lambda X: np.zeros(len(X)), 4, CmaEsConfig(seed=2))
        assert res.flat
        assert np.all((0 <= res.x) & (res.x <= 1))

    def test_boundary_maximum(self):
        res = maximize(lambda X: np.atleast_2d(X).sum(axis=1), 3, CmaEsConfig(seed=3))
        np.testing.assert_allclose(res.x, 1.0)

    def test_candidates_stay_in_cube(self):
        seen = []

        def score(X):
            seen.append(np.array(X))
            return -np.sum((X - 1.7) ** 2, axis=1)

        maximize(score, 2, CmaEsConfig(seed=4, initial_sigma=0.9))
        allx = np.vstack(seen)
        assert allx.min() >= 0.0 and allx.max() <= 1.0

    def test_reference_floor(self):
        rng = np.random.default_rng(5)
        for seed in range(5):
            ref = rng.random((1000, 2))
            res = maximize(eggholder_unit, 2, CmaEsConfig(seed=seed), reference=ref)
            assert res.value >= eggholder_unit(ref).max()

    def test_deterministic(self):
        a = maximize(eggholder_unit, 2, CmaEsConfig(seed=6))
        b = maximize(eggholder_unit, 2, CmaEsConfig(seed=6))
        assert np.array_equal(a.x, b.x) and a.value == b.value

    def test_eggholder_with_restarts(self):
        # a population of 64 makes each restart a broad global search; the
        # default population of 6 succeeds on about half of the seeds
        wins = sum(
            maximize(eggholder_unit, 2, CmaEsConfig(seed=s, restarts=3, population_size=64)).value >= 959.0
            for s in range(5)
        )
        assert wins >= 4

    def test_population_floor(self):
        with pytest.raises(ValueError):
            CmaEsConfig(population_size=3).popsize(2)
        assert CmaEsConfig().popsize(2) == 6
        assert CmaEsConfig().generations(3) == 300
