import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marginlearn.core import (
    DatasetError,
    DimensionError,
    Halfspace,
    LabeledSample,
    LearnParams,
    WeightedDataset,
    dataset_from_jsonl,
    dataset_to_jsonl,
    margin_error,
    margin_profile,
    read_dataset,
    sign,
    validate_dataset,
    write_dataset,
    zero_one_error,
)

E1 = np.array([1.0, 0.0])


def single(x, y=1):
    return WeightedDataset(np.array([x], dtype=float), np.array([y]), np.array([1.0]))


def random_dataset(rng, m=40, d=4):
    X = rng.normal(size=(m, d))
    X /= np.maximum(1.0, np.linalg.norm(X, axis=1))[:, None] * 1.01
    y = rng.choice([-1, 1], size=m)
    p = rng.random(m)
    return WeightedDataset(X, y, p / p.sum())


class TestMarginError:
    def test_clear_margin(self):
        assert margin_error(single(E1), E1, 0.5) == 0.0

    def test_boundary_counts_as_error(self):
        assert margin_error(single(E1), E1, 1.0) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            margin_error(single(E1), np.ones(3), 0.1)

    def test_negative_gamma_rejected(self):
        with pytest.raises(ValueError):
            margin_error(single(E1), E1, -0.1)

    def test_monotone_in_gamma(self):
        rng = np.random.default_rng(1)
        D = random_dataset(rng)
        w = rng.normal(size=4)
        errs = [margin_error(D, w, g) for g in np.linspace(0, 2, 41)]
        assert all(a <= b for a, b in zip(errs, errs[1:]))

    @given(st.integers(0, 2**32 - 1), st.integers(-6, 6))
    @settings(max_examples=50, deadline=None)
    def test_power_of_two_scaling(self, seed, e):
        # powers of two scale floats exactly, so the comparison is unchanged
        rng = np.random.default_rng(seed)
        D = random_dataset(rng, m=20, d=3)
        w = rng.normal(size=3)
        c = 2.0**e
        assert margin_error(D, c * w, c * 0.3) == margin_error(D, w, 0.3)

    def test_positive_scaling_away_from_boundary(self):
        rng = np.random.default_rng(2)
        D = random_dataset(rng)
        w = rng.normal(size=4)
        margins = D.y * (D.X @ w)
        gamma = 0.2
        assert np.min(np.abs(margins - gamma)) > 1e-6
        for c in (0.3, 1.7, 11.0):
            assert margin_error(D, c * w, c * gamma) == margin_error(D, w, gamma)

    def test_permutation_bit_identical(self):
        rng = np.random.default_rng(3)
        D = random_dataset(rng, m=200)
        w = rng.normal(size=4)
        perm = rng.permutation(200)
        Dp = WeightedDataset(D.X[perm], D.y[perm], D.probs[perm])
        assert margin_error(D, w, 0.1) == margin_error(Dp, w, 0.1)
        assert zero_one_error(D, w) == zero_one_error(Dp, w)


class TestZeroOneError:
    def test_correct(self):
        assert zero_one_error(single(E1), Halfspace(E1)) == 0.0

    def test_contradictory_labels(self):
        D = WeightedDataset(np.array([E1, E1]), np.array([1, -1]), np.array([0.5, 0.5]))
        assert zero_one_error(D, Halfspace(E1)) == 0.5

    def test_sign_zero_is_positive(self):
        D = single([0.0, 0.0], 1)
        assert zero_one_error(D, Halfspace([0.3, -0.2])) == 0.0
        assert zero_one_error(single([0.0, 0.0], -1), Halfspace([0.3, -0.2])) == 1.0

    def test_matches_margin_zero_without_ties(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            D = random_dataset(rng)
            w = rng.normal(size=4)
            assert np.all(D.X @ w != 0)
            assert zero_one_error(D, w) == margin_error(D, w, 0.0)

    def test_sign_vectorized(self):
        assert list(sign(np.array([-1.0, 0.0, 2.0]))) == [-1, 1, 1]


class TestValidate:
    def test_well_formed(self):
        assert validate_dataset(single(E1)) == []

    def test_mass(self):
        D = WeightedDataset(np.array([E1, -E1]), np.array([1, -1]), np.array([0.45, 0.45]))
        kinds = [v.kind for v in validate_dataset(D)]
        assert "mass 0.9" in kinds

    def test_outside_ball(self):
        v = validate_dataset(single([1.5, 0.0]))
        assert len(v) == 1 and v[0].index == 0
        assert v[0].kind.startswith("outside unit ball")

    def test_ball_tolerance(self):
        assert validate_dataset(single([1.0 + 5e-10, 0.0])) == []

    def test_bad_label_and_negative_mass(self):
        D = WeightedDataset(np.array([E1, -E1]), np.array([1, 0]), np.array([1.5, -0.5]))
        kinds = " ".join(str(v) for v in validate_dataset(D))
        assert "label 0" in kinds and "negative" in kinds

    def test_non_finite(self):
        D = single([math.nan, 0.0])
        assert any("non-finite" in v.kind for v in validate_dataset(D))

    def test_empty(self):
        D = WeightedDataset(np.zeros((0, 2)), np.zeros(0, dtype=int), np.zeros(0))
        assert [v.kind for v in validate_dataset(D)] == ["empty dataset"]

    def test_check_raises(self):
        with pytest.raises(DatasetError):
            single([2.0, 0.0]).check()


class TestTypes:
    def test_dataset_immutable(self):
        D = single(E1)
        with pytest.raises(ValueError):
            D.X[0, 0] = 3.0

    def test_labeled_sample_label(self):
        with pytest.raises(ValueError):
            LabeledSample((1.0,), 0)

    def test_vector_rejects_nan(self):
        with pytest.raises(ValueError):
            Halfspace([math.nan, 1.0])

    def test_halfspace_normalized_clips(self):
        h = Halfspace([3.0, 4.0]).normalized()
        assert h.norm == pytest.approx(1.0)
        assert Halfspace([0.3, 0.4]).normalized() == Halfspace([0.3, 0.4])

    def test_subset_renormalizes(self):
        D = WeightedDataset(np.array([E1, -E1]), np.array([1, -1]), np.array([0.25, 0.75]))
        S = D.subset(np.array([False, True]))
        assert list(S.probs) == [1.0]
        with pytest.raises(DatasetError):
            D.subset(np.array([False, False]))

    @pytest.mark.parametrize(
        "kw",
        [
            {"gamma": 0.0},
            {"gamma": 1.0},
            {"gamma": 0.1, "epsilon": 1.0},
            {"gamma": 0.1, "tau": 0.0},
            {"gamma": 0.1, "alpha": 0.5},
            {"gamma": 0.1, "delta_slack": 0.0},
            {"gamma": 0.1, "budget_cap": 0},
        ],
    )
    def test_params_rejected(self, kw):
        with pytest.raises(ValueError):
            LearnParams(**kw)

    def test_margin_profile_keys(self):
        prof = margin_profile(single(E1), E1, 1.0)
        assert set(prof) == {"gamma", "gamma/2", "gamma/4", "0.99gamma"}
        assert prof["gamma"] == 1.0 and prof["gamma/2"] == 0.0


class TestJsonl:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        D = random_dataset(rng, m=30, d=5)
        path = tmp_path / "d.jsonl"
        write_dataset(path, D, {"source": "test"})
        back = read_dataset(path)
        assert np.array_equal(back.X, D.X)
        assert np.array_equal(back.y, D.y)
        assert np.array_equal(back.probs, D.probs)
        assert back.meta == {"source": "test"}

    def test_uniform_when_mass_absent(self):
        text = '{"x": [1, 0], "y": 1}\n{"x": [0, 1], "y": -1}\n'
        D = dataset_from_jsonl(text)
        assert list(D.probs) == [0.5, 0.5]

    def test_partial_mass_rejected(self):
        with pytest.raises(DatasetError):
            dataset_from_jsonl('{"x": [1], "y": 1, "p": 1.0}\n{"x": [0], "y": 1}\n')

    def test_dimension_mismatch_rejected(self):
        with pytest.raises((DatasetError, DimensionError)):
            dataset_from_jsonl('{"dim": 2}\n{"x": [1, 0, 0], "y": 1}\n')

    def test_header_first(self):
        text = dataset_to_jsonl(single(E1), {"a": 1})
        assert json.loads(text.splitlines()[0]) == {"dim": 2, "meta": {"a": 1}}
