import numpy as np
import pytest

from gemith.dataset import ConstantGenerator, Dataset, FoldPlan, make_fold_plan, synthetic_friedman1
from gemith.learners import HyperSpace, Integer, LearnerSpec, default_spaces
from gemith.oob import CACHE_ENV, OobCache, OobFitError, OobMatrix, oob_matrix, oob_predict

SPECS = {s.kind: s for s in default_spaces()}
KNN1 = LearnerSpec("knn", HyperSpace(n_neighbors=Integer(1, 20)))


@pytest.fixture(scope="module")
def ds():
    return synthetic_friedman1(60, seed=2)


def test_hand_traced_knn_across_folds():
    ds = Dataset([[0.0], [1.0], [10.0], [11.0]], [0.0, 1.0, 10.0, 11.0])
    plan = FoldPlan(4, 2, np.array([0, 0, 1, 1]))
    vec = oob_predict(ds, KNN1, KNN1.config(n_neighbors=1), plan)
    # rows 0/1 only see {10, 11}; rows 2/3 only see {0, 1}
    assert vec.predictions.tolist() == [10.0, 10.0, 1.0, 1.0]


@pytest.mark.parametrize("kind,params", [("tree", {"max_depth": 4}), ("knn", {"n_neighbors": 3})])
def test_constant_target(kind, params):
    ds = ConstantGenerator(2.5, n_features=3).sample(30, 0)
    spec = SPECS[kind]
    vec = oob_predict(ds, spec, spec.config(**params), make_fold_plan(30, 5, 0))
    assert np.all(vec.predictions == 2.5)


def test_deterministic_and_read_only(ds):
    spec = SPECS["tree"]
    plan = make_fold_plan(ds.n, 5, 1)
    a = oob_predict(ds, spec, spec.config(max_depth=5), plan, seed=3)
    b = oob_predict(ds, spec, spec.config(max_depth=5), plan, seed=3)
    assert np.array_equal(a.predictions, b.predictions)
    with pytest.raises(ValueError):
        a.predictions[0] = 0.0


def test_no_leakage_from_own_fold():
    ds = synthetic_friedman1(40, seed=8)
    plan = make_fold_plan(40, 2, 0)
    spec = SPECS["ridge"]
    cfg = spec.config(alpha=0.1)
    base = oob_predict(ds, spec, cfg, plan).predictions
    row = int(np.flatnonzero(plan.assignment == 0)[0])
    y = ds.target.copy()
    y[row] += 100.0
    moved = oob_predict(Dataset(ds.features, y), spec, cfg, plan).predictions
    fold0 = plan.assignment == 0
    assert np.array_equal(base[fold0], moved[fold0])
    assert not np.allclose(base[~fold0], moved[~fold0])


def test_cache_hits_and_fit_count(ds):
    plan = make_fold_plan(ds.n, 5, 0)
    cache = OobCache()
    spec = SPECS["ridge"]
    cfg = spec.config(alpha=0.01)
    M = oob_matrix(ds, [(spec, cfg), (spec, cfg)], plan, 0, cache)
    assert np.array_equal(M.predictions[:, 0], M.predictions[:, 1])
    assert (cache.hits, cache.misses, cache.fit_count) == (1, 1, 5)
    assert np.array_equal(M.y, ds.target)


def test_memoize_off_counts_every_fit(ds):
    plan = make_fold_plan(ds.n, 5, 0)
    cache = OobCache(memoize=False)
    spec = SPECS["ridge"]
    cfg = spec.config(alpha=0.01)
    oob_matrix(ds, [(spec, cfg)] * 3, plan, 0, cache)
    assert cache.fit_count == 15 and len(cache) == 0


def test_cache_is_transparent(ds):
    plan = make_fold_plan(ds.n, 5, 0)
    spec = SPECS["knn"]
    cfg = spec.config(n_neighbors=4)
    plain = oob_predict(ds, spec, cfg, plan, 0)
    cached = oob_predict(ds, spec, cfg, plan, 0, OobCache())
    assert np.array_equal(plain.predictions, cached.predictions)


def test_disk_round_trip_is_bit_exact(ds, tmp_path):
    plan = make_fold_plan(ds.n, 5, 0)
    spec = SPECS["elastic_net"]
    cfg = spec.config(alpha=0.003, l1_ratio=0.4)
    first = oob_predict(ds, spec, cfg, plan, 0, OobCache(tmp_path))
    fresh = OobCache(tmp_path)
    again = oob_predict(ds, spec, cfg, plan, 0, fresh)
    assert fresh.hits == 1 and fresh.fit_count == 0
    assert np.array_equal(first.predictions, again.predictions)


def test_env_directory(monkeypatch, tmp_path):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "c"))
    assert OobCache.from_env().directory == tmp_path / "c"
    monkeypatch.delenv(CACHE_ENV)
    assert OobCache.from_env().directory is None


def test_key_separates_data_plan_and_seed(ds):
    spec = SPECS["ridge"]
    cfg = spec.config(alpha=0.5)
    plan = make_fold_plan(ds.n, 5, 0)
    keys = {
        oob_predict(ds, spec, cfg, plan, 0).key.hash,
        oob_predict(ds, spec, cfg, plan, 1).key.hash,
        oob_predict(ds, spec, cfg, make_fold_plan(ds.n, 5, 1), 0).key.hash,
        oob_predict(ds.subset(range(50)), spec, cfg, make_fold_plan(50, 5, 0), 0).key.hash,
    }
    assert len(keys) == 4


def test_plan_mismatch(ds):
    spec = SPECS["ridge"]
    with pytest.raises(ValueError):
        oob_predict(ds, spec, spec.config(alpha=0.1), make_fold_plan(10, 2, 0))


def test_fit_error_names_learner(ds):
    spec = SPECS["knn"]
    bad = spec.config(n_neighbors=3)
    object.__setattr__(bad, "values", (("n_neighbors", -1),))
    with pytest.raises(OobFitError, match="knn"):
        oob_matrix(ds, [(spec, bad)], make_fold_plan(ds.n, 5, 0))


def test_matrix_validation():
    with pytest.raises(ValueError):
        OobMatrix(np.zeros((3, 2)), np.zeros(4))
    assert OobMatrix(np.zeros(3), np.zeros(3)).k == 1
