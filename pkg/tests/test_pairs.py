"""Pair enumeration: configurations, filtering, determinism."""

import random
from datetime import date

import pytest

from timeaware_cpdp.dataset import bucketize
from timeaware_cpdp.errors import ConfigError
from timeaware_cpdp.pairs import (ConfigurationKind, PairSpec, TrainTestPair,
                                  crossval_pairs, enumerate_pairs,
                                  generate_pair, strict_cpdp_filter,
                                  window_sizes)

from synth import (make_release, oracle_bucket_index, oracle_pairs,
                   pair_as_tuple, random_dataset, simple_release,
                   toy_three_buckets)

CC = ConfigurationKind.CC
IC = ConfigurationKind.IC
CI = ConfigurationKind.CI
II = ConfigurationKind.II


@pytest.fixture(scope="module")
def toy_ts():
    return bucketize(toy_three_buckets(), granularity_months=12)


def keys(pairs):
    return [pair_as_tuple(p) for p in pairs]


I2008 = ("i", "2008")
J2009 = ("j", "2009")
K2010 = ("k", "2010")


def test_toy_cc_gap0(toy_ts):
    got = keys(enumerate_pairs(toy_ts, CC, gap_buckets=0))
    # window 1 and 2 reproduce the four worked rows, truncation included;
    # window 3 duplicates the window-2 set combinations and is kept
    assert got == [
        (1, 1, [I2008], [J2009]),
        (1, 2, [J2009], [K2010]),
        (2, 1, [I2008], [J2009, K2010]),
        (2, 2, [I2008, J2009], [K2010]),
        (3, 1, [I2008], [J2009, K2010]),
        (3, 2, [I2008, J2009], [K2010]),
    ]


def test_toy_ic_gap0(toy_ts):
    got = keys(enumerate_pairs(toy_ts, IC, gap_buckets=0))
    assert got == [
        (1, 1, [I2008], [J2009]),
        (1, 2, [I2008, J2009], [K2010]),
        (2, 1, [I2008], [J2009, K2010]),
        (2, 2, [I2008, J2009], [K2010]),
    ]


def test_toy_ci_gap0(toy_ts):
    got = keys(enumerate_pairs(toy_ts, CI, gap_buckets=0))
    assert got == [
        (1, 1, [I2008], [J2009, K2010]),
        (1, 2, [J2009], [K2010]),
        (2, 1, [I2008], [J2009, K2010]),
        (2, 2, [I2008, J2009], [K2010]),
    ]


def test_toy_ii_gap0(toy_ts):
    got = keys(enumerate_pairs(toy_ts, II, gap_buckets=0))
    assert got == [
        (None, 1, [I2008], [J2009, K2010]),
        (None, 2, [I2008, J2009], [K2010]),
    ]


def test_toy_gap1_pushes_test_window_out(toy_ts):
    got = keys(enumerate_pairs(toy_ts, CC, gap_buckets=1))
    # with one bucket reserved between train and test only split 1 survives
    assert got == [
        (1, 1, [I2008], [K2010]),
        (2, 1, [I2008], [K2010]),
        (3, 1, [I2008], [K2010]),
    ]


def test_window_sizes_per_kind():
    assert window_sizes(CC, 19) == list(range(1, 20))
    assert window_sizes(IC, 19) == list(range(1, 19))
    assert window_sizes(CI, 19) == list(range(1, 19))
    assert window_sizes(II, 19) == [None]
    with pytest.raises(ConfigError):
        window_sizes(ConfigurationKind.CROSSVAL, 19)


def test_pair_spec_validation():
    with pytest.raises(ValueError):
        PairSpec(kind=II, window_k=3, split_index=1)
    with pytest.raises(ValueError):
        PairSpec(kind=CC, window_k=None, split_index=1)
    with pytest.raises(ValueError):
        PairSpec(kind=CC, window_k=0, split_index=1)
    with pytest.raises(ValueError):
        PairSpec(kind=CC, window_k=1, split_index=0)
    with pytest.raises(ValueError):
        PairSpec(kind=CC, window_k=1, split_index=1, gap_buckets=-1)


def test_generate_pair_rejects_out_of_range_split(toy_ts):
    with pytest.raises(ValueError):
        generate_pair(toy_ts, PairSpec(kind=CC, window_k=1, split_index=3,
                                       gap_buckets=0))
    with pytest.raises(ConfigError):
        generate_pair(toy_ts, PairSpec(kind=ConfigurationKind.CROSSVAL,
                                       window_k=None, split_index=1))


def test_generate_pair_empty_side_returns_none():
    releases = [
        simple_release("a", "1", date(2001, 1, 5)),
        simple_release("b", "1", date(2002, 1, 5)),
    ]
    ts = bucketize(releases, 6)  # releases in buckets 0 and 2, bucket 1 empty
    # split at 1 with gap 1: test starts in empty bucket 1+1=2 -> has b
    pair = generate_pair(ts, PairSpec(kind=II, window_k=None, split_index=1,
                                      gap_buckets=1))
    assert [r.key for r in pair.test] == [("b", "1")]
    # split at 2: train has bucket 0 and empty bucket 1; test bucket 3 missing
    assert generate_pair(ts, PairSpec(kind=II, window_k=None, split_index=2,
                                      gap_buckets=1)) is None


def test_strict_filter_removes_shared_projects():
    train = (simple_release("a", "1", date(2001, 1, 1)),)
    test = (simple_release("a", "2", date(2002, 1, 1)),
            simple_release("b", "1", date(2002, 2, 1)))
    spec = PairSpec(kind=II, window_k=None, split_index=1, gap_buckets=0)
    pair = strict_cpdp_filter(TrainTestPair(spec=spec, train=train, test=test))
    assert [r.key for r in pair.test] == [("b", "1")]
    # everything shared -> pair dropped
    gone = strict_cpdp_filter(TrainTestPair(spec=spec, train=train,
                                            test=(test[0],)))
    assert gone is None


def test_enumeration_is_input_order_independent():
    rng = random.Random(5)
    releases, granularity = random_dataset(rng)
    shuffled = releases[:]
    rng.shuffle(shuffled)
    for kind in (CC, IC, CI, II):
        a = keys(enumerate_pairs(bucketize(releases, granularity), kind, 1))
        b = keys(enumerate_pairs(bucketize(shuffled, granularity), kind, 1))
        assert a == b


def test_no_time_travel_and_oracle_agreement():
    rng = random.Random(17)
    for _ in range(60):
        releases, granularity = random_dataset(rng)
        ts = bucketize(releases, granularity)
        gap = rng.choice([0, 1, 2])
        for kind in (CC, IC, CI, II):
            pairs = enumerate_pairs(ts, kind, gap)
            assert keys(pairs) == oracle_pairs(ts, kind, gap)
            for pair in pairs:
                split_start = ts.buckets[pair.spec.split_index].start
                assert max(r.release_date for r in pair.train) < split_start
                test_buckets = [oracle_bucket_index(ts, r) for r in pair.test]
                assert min(test_buckets) >= pair.spec.split_index + gap
                train_projects = {r.project_id for r in pair.train}
                assert train_projects.isdisjoint(
                    {r.project_id for r in pair.test})
                assert pair.train and pair.test


def test_emission_order_ascending_window_then_split():
    rng = random.Random(23)
    releases, granularity = random_dataset(rng)
    ts = bucketize(releases, granularity)
    for kind in (CC, IC, CI):
        order = [(p.spec.window_k, p.spec.split_index)
                 for p in enumerate_pairs(ts, kind, 1)]
        assert order == sorted(order)


def test_cc_train_windows_nest():
    rng = random.Random(29)
    for _ in range(20):
        releases, granularity = random_dataset(rng)
        ts = bucketize(releases, granularity)
        for split in range(1, ts.bucket_count):
            previous = None
            for k in range(1, ts.bucket_count + 1):
                pair = generate_pair(ts, PairSpec(kind=CC, window_k=k,
                                                  split_index=split,
                                                  gap_buckets=0))
                train = set() if pair is None else {r.key for r in pair.train}
                if previous is not None:
                    assert previous <= train
                previous = train


def test_ic_test_windows_nest():
    rng = random.Random(31)
    releases, granularity = random_dataset(rng)
    ts = bucketize(releases, granularity)
    for split in range(1, ts.bucket_count):
        previous = None
        for k in range(1, ts.bucket_count):
            pair = generate_pair(ts, PairSpec(kind=IC, window_k=k,
                                              split_index=split,
                                              gap_buckets=0))
            test = set() if pair is None else {r.key for r in pair.test}
            if previous is not None:
                assert previous <= test
            previous = test


def test_ii_equals_ic_with_maximal_window():
    rng = random.Random(37)
    for _ in range(20):
        releases, granularity = random_dataset(rng)
        ts = bucketize(releases, granularity)
        for split in range(1, ts.bucket_count):
            ii = generate_pair(ts, PairSpec(kind=II, window_k=None,
                                            split_index=split, gap_buckets=1))
            ic = generate_pair(ts, PairSpec(kind=IC,
                                            window_k=ts.bucket_count,
                                            split_index=split, gap_buckets=1))
            if ii is None:
                assert ic is None
            else:
                assert [r.key for r in ii.train] == [r.key for r in ic.train]
                assert [r.key for r in ii.test] == [r.key for r in ic.test]


def test_exhaustive_single_release_combinations_count_time_travel():
    # three releases give six ordered train/test combinations; the three
    # training on a later release than they test on travel in time
    releases = toy_three_buckets()
    combos = [(a, b) for a in releases for b in releases if a is not b]
    assert len(combos) == 6
    travels = [1 for train, test in combos
               if train.release_date > test.release_date]
    assert sum(travels) == 3


def test_crossval_three_releases_three_folds():
    releases = toy_three_buckets()
    pairs = crossval_pairs(releases, folds=3, seed=4)
    assert len(pairs) == 3
    tested = sorted(r.key for p in pairs for r in p.test)
    assert tested == [I2008, J2009, K2010]
    for pair in pairs:
        assert pair.spec.kind is ConfigurationKind.CROSSVAL
        assert pair.spec.window_k is None
        assert len(pair.train) == 2


def test_crossval_is_seed_deterministic_and_seed_sensitive():
    rng = random.Random(41)
    releases = [simple_release(f"p{i}", "1", date(2001 + i, 1, 1), rng=rng)
                for i in range(9)]
    a = [pair_as_tuple(p) for p in crossval_pairs(releases, 3, seed=1)]
    b = [pair_as_tuple(p) for p in crossval_pairs(releases, 3, seed=1)]
    assert a == b
    c = [pair_as_tuple(p) for p in crossval_pairs(releases, 3, seed=2)]
    assert a != c


def test_crossval_fold_validation():
    releases = toy_three_buckets()
    with pytest.raises(ConfigError):
        crossval_pairs(releases, folds=1, seed=0)
    with pytest.raises(ConfigError):
        crossval_pairs(releases, folds=4, seed=0)


def test_crossval_filters_shared_projects():
    releases = [
        simple_release("a", "1", date(2001, 1, 1)),
        simple_release("a", "2", date(2002, 1, 1)),
        simple_release("a", "3", date(2003, 1, 1)),
        simple_release("b", "1", date(2004, 1, 1)),
    ]
    pairs = crossval_pairs(releases, folds=4, seed=0)
    # any fold testing an "a" release trains on another "a" release
    tested = [r.key for p in pairs for r in p.test]
    assert tested == [("b", "1")]
