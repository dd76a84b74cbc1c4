import math

import numpy as np
import pytest

from gemith.dataset import (
    ConstantGenerator,
    Dataset,
    DatasetError,
    Friedman1,
    LinearGenerator,
    load_bundled,
    load_csv,
    make_fold_plan,
    save_csv,
    standardize_apply,
    standardize_fit,
    standardize_inverse,
    synthetic_friedman1,
    train_test_split,
)


def small_ds(n=10, p=2):
    X = np.arange(n * p, dtype=float).reshape(n, p)
    return Dataset(X, np.arange(n, dtype=float))


class TestDataset:
    def test_default_names_and_shape(self):
        ds = small_ds(4, 3)
        assert ds.feature_names == ("x1", "x2", "x3")
        assert (ds.n, ds.p) == (4, 3)

    def test_arrays_are_read_only(self):
        ds = small_ds()
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0

    def test_rejects_nan(self):
        with pytest.raises(DatasetError):
            Dataset([[1.0], [np.nan]], [1.0, 2.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(DatasetError):
            Dataset([[1.0], [2.0]], [1.0])


class TestCsv:
    def test_round_trip_is_exact(self, tmp_path):
        ds = synthetic_friedman1(20, seed=3)
        path = tmp_path / "f.csv"
        save_csv(ds, path)
        back = load_csv(path, "y")
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.target, ds.target)
        assert back.feature_names == ds.feature_names

    def test_target_by_index(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("t,a,b\n1,2,3\n4,5,6\n")
        ds = load_csv(path, 0)
        assert ds.target.tolist() == [1.0, 4.0]
        assert ds.feature_names == ("a", "b")

    def test_bad_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b,y\n1,2,3\n4,oops,6\n")
        with pytest.raises(DatasetError, match=r"row 2, column 'b'"):
            load_csv(path, "y")

    def test_missing_target(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y\n1,2\n")
        with pytest.raises(DatasetError, match="not found"):
            load_csv(path, "z")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_csv(tmp_path / "nope.csv", "y")

    def test_bundled_diabetes(self):
        ds = load_bundled("diabetes")
        assert (ds.n, ds.p) == (442, 10)
        assert ds.target_name == "progression"


class TestSplit:
    def test_sizes_round_half_up(self):
        # 0.25 * 10 = 2.5 rounds up to 3
        train, test = train_test_split(small_ds(10), 0.25, seed=0)
        assert (train.n, test.n) == (7, 3)

    def test_partition_and_order(self):
        ds = small_ds(30)
        train, test = train_test_split(ds, 0.2, seed=5)
        rows = np.concatenate([train.target, test.target])
        assert sorted(rows.tolist()) == list(range(30))
        assert np.all(np.diff(train.target) > 0) and np.all(np.diff(test.target) > 0)

    def test_deterministic(self):
        a = train_test_split(small_ds(30), 0.2, seed=9)[1].target
        b = train_test_split(small_ds(30), 0.2, seed=9)[1].target
        assert np.array_equal(a, b)

    def test_rejects_degenerate(self):
        with pytest.raises(DatasetError):
            train_test_split(small_ds(2), 0.9)


class TestFoldPlan:
    def test_balanced_and_covering(self):
        plan = make_fold_plan(23, 5, seed=1)
        counts = np.bincount(plan.assignment, minlength=5)
        assert counts.max() - counts.min() <= 1
        held = np.concatenate([h for _, _, h in plan.folds()])
        assert sorted(held.tolist()) == list(range(23))

    def test_train_and_held_disjoint(self):
        for _, train, held in make_fold_plan(17, 4, seed=2).folds():
            assert not set(train) & set(held)
            assert len(train) + len(held) == 17

    def test_key_depends_on_assignment(self):
        assert make_fold_plan(20, 5, 0).key == make_fold_plan(20, 5, 0).key
        assert make_fold_plan(20, 5, 0).key != make_fold_plan(20, 5, 1).key

    @pytest.mark.parametrize("m", [1, 11])
    def test_rejects_bad_m(self, m):
        with pytest.raises(DatasetError):
            make_fold_plan(10, m)


class TestScaler:
    def test_hand_values(self):
        ds = Dataset([[1.0, 5.0], [3.0, 5.0]], [0.0, 1.0])
        scaler = standardize_fit(ds)
        assert scaler.mean.tolist() == [2.0, 5.0]
        # ddof=0 std of (1, 3) is 1; the constant column keeps scale 1
        assert scaler.scale.tolist() == [1.0, 1.0]
        assert standardize_apply(scaler, ds).features.tolist() == [[-1.0, 0.0], [1.0, 0.0]]

    def test_inverse(self):
        ds = synthetic_friedman1(15, seed=1)
        scaler = standardize_fit(ds)
        back = standardize_inverse(scaler, standardize_apply(scaler, ds))
        assert np.allclose(back.features, ds.features, atol=1e-12)

    def test_dimension_mismatch(self):
        scaler = standardize_fit(small_ds(5, 2))
        with pytest.raises(DatasetError):
            standardize_apply(scaler, small_ds(5, 3))


class TestGenerators:
    def test_friedman_formula(self):
        x = np.array([[0.5, 1.0, 0.5, 0.2, 0.4] + [0.0] * 5])
        # 10 sin(pi/2) + 0 + 2 + 2 = 14
        assert Friedman1().f(x)[0] == pytest.approx(14.0, abs=1e-12)

    def test_noise_does_not_move_features(self):
        a = Friedman1(0.0).sample(50, 4)
        b = Friedman1(3.0).sample(50, 4)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.target, Friedman1().f(a.features))

    def test_noise_level(self):
        ds = Friedman1(2.0).sample(20000, 0)
        resid = ds.target - Friedman1().f(ds.features)
        assert resid.std() == pytest.approx(2.0, rel=0.03)

    def test_linear_and_constant(self):
        lin = LinearGenerator(coef=(2.0, -1.0), intercept=0.5)
        ds = lin.sample(10, 0)
        assert np.allclose(ds.target, 0.5 + 2 * ds.features[:, 0] - ds.features[:, 1])
        const = ConstantGenerator(3.0, n_features=2).sample(5, 0)
        assert np.all(const.target == 3.0)

    def test_friedman_range(self):
        ds = Friedman1(0.0).sample(1000, 0)
        assert np.all(ds.features >= 0) and np.all(ds.features <= 1)
        # f is bounded by 10 + 5 + 10 + 5
        assert ds.target.max() <= 30.0 + 1e-9 and ds.target.min() >= 0.0
        assert math.isfinite(ds.target.sum())
