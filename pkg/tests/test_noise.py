import numpy as np
import pytest

from sparsekit import design as dsg
from sparsekit import noise
from sparsekit.hashing import seed_stream


def test_build_noisy_arithmetic():
    d = noise.build_noisy(4, 256, alpha=0.5, seed=0)
    assert d.d == 1 and d.D == 2
    assert d.reps == noise.DEFAULT_CR * 2
    assert d.H == 7  # log2(64) + 1
    assert d.rows == d.H * d.reps * 16 * 4


def test_build_noisy_k1_fallback():
    d = noise.build_noisy(1, 64, alpha=0.5, seed=0)
    assert d.d == 1 and d.reps == noise.DEFAULT_CR


def test_build_noisy_validation():
    with pytest.raises(ValueError):
        noise.build_noisy(4, 256, alpha=0.0)
    with pytest.raises(ValueError):
        noise.build_noisy(3, 256, alpha=0.5)


def test_noisy_positions_reproducible():
    d1 = noise.build_noisy(4, 256, 0.5, seed=11)
    d2 = noise.build_noisy(4, 256, 0.5, seed=11)
    prefixes = np.arange(8)
    for li in range(d1.H):
        for r in range(0, d1.reps, 3):
            assert np.array_equal(d1.locate(li, r, prefixes % (1 << d1.lens[li])),
                                  d2.locate(li, r, prefixes % (1 << d2.lens[li])))


def test_identify_under_errors_all_zero():
    d = noise.build_noisy(4, 256, 0.5, seed=3)
    o = noise.measure_noisy(d, [])
    assert noise.identify_under_errors(d, o).size == 0


def test_identify_under_errors_noiseless_superset_and_work():
    rng = seed_stream(1, "ne")
    bound = noise.candidate_bound(8, 1 << 12, 0.5)
    hits = 0
    trials = 30
    for t in range(trials):
        d = noise.build_noisy(8, 1 << 12, 0.5, seed=t)
        support = np.sort(rng.choice(1 << 12, 8, replace=False))
        stats = dsg.DecodeStats()
        out = noise.identify_under_errors(d, noise.measure_noisy(d, support),
                                          stats)
        assert np.isin(support, out).all()
        hits += stats.inserted <= bound
    assert hits == trials


def test_identify_under_errors_with_false_positives():
    rng = seed_stream(2, "fp")
    k = 8
    fp = k * 3  # k * log2(k)
    for t in range(15):
        d = noise.build_noisy(k, 1 << 12, 0.5, seed=100 + t)
        support = np.sort(rng.choice(1 << 12, k, replace=False))
        o = noise.inject_noisy_noise(noise.measure_noisy(d, support),
                                     fp_total=fp, seed=t)
        out = noise.identify_under_errors(d, o)
        assert np.isin(support, out).all()


def test_majority_threshold_ties_survive():
    d = noise.build_noisy(4, 64, 0.5, seed=5, reps=2)
    o = noise.measure_noisy(d, [7])
    # flip exactly one of the two repetition tests of prefix of 7 at level 0
    p0 = 7 >> (6 - d.lens[0])
    row = d.locate(0, 0, [p0])[0]
    o.bits[0, 0, row] = False
    out = noise.identify_under_errors(d, o)
    assert 7 in out.tolist()  # count == R/2 survives (strict comparison)
    o.bits[0, 1, d.locate(0, 1, [p0])[0]] = False
    out = noise.identify_under_errors(d, o)
    assert 7 not in out.tolist()


def test_reduces_to_plain_identify_when_binary_single_rep():
    # D = 2, R = 1 and shared seeds: same hash layout, same decisions
    rng = seed_stream(3, "red")
    for t in range(10):
        seed = int(rng.integers(1 << 32))
        nd = noise.build_noisy(8, 1 << 10, alpha=1 / 3, seed=seed, reps=1)
        assert nd.d == 1
        ident = dsg.build_identification(8, 1 << 10, seed=seed)
        support = np.sort(rng.choice(1 << 10, 8, replace=False))
        o_n = noise.measure_noisy(nd, support)
        o_i = dsg.measure(ident, support)
        for li, ell in enumerate(ident.levels):
            assert np.array_equal(o_n.bits[li, 0], o_i.level(ell))
        assert np.array_equal(noise.identify_under_errors(nd, o_n),
                              dsg.identify(ident, o_i))


def test_split_copy_count_formula():
    split = noise.split_e0(8, 1 << 10, 100, 0.5, seed=1)
    assert len(split.copies) == 1 + -(-100 // 24)  # 6
    assert len(noise.split_e0(8, 1 << 10, 0, 0.5, seed=1).copies) == 1


def test_split_zero_noise_matches_single_decode():
    split = noise.split_e0(8, 1 << 10, 0, 0.5, seed=9)
    rng = seed_stream(4, "s0")
    support = np.sort(rng.choice(1 << 10, 8, replace=False))
    outcomes = noise.measure_split(split, support)
    raced = noise.decode_race(split, outcomes)
    direct = noise.identify_under_errors(split.copies[0], outcomes[0])
    assert np.array_equal(raced, direct)


def test_race_survives_dump_all_noise_adversary():
    k = 8
    e0 = 3 * k * 3  # 3 k log2(k)
    rng = seed_stream(5, "adv")
    for t in range(10):
        split = noise.split_e0(k, 1 << 10, e0, 0.5, seed=t)
        support = np.sort(rng.choice(1 << 10, k, replace=False))
        outcomes = noise.measure_split(split, support)
        outcomes[0] = noise.inject_noisy_noise(outcomes[0], fp_total=e0,
                                               seed=t)
        out = noise.decode_race(split, outcomes)
        assert np.isin(support, out).all()
        assert out.size <= noise.candidate_bound(k, 1 << 10, 0.5)
        # the race schedule is deterministic: reruns agree
        assert np.array_equal(out, noise.decode_race(split, outcomes))


def test_race_overload_surfaced():
    split = noise.split_e0(4, 1 << 12, 0, 0.5, seed=2)
    o = noise.measure_noisy(split.copies[0], [1])
    o.bits[...] = True  # every test positive: candidate explosion
    with pytest.raises(noise.RaceOverloadError):
        noise.decode_race(split, [o])


def test_race_outcome_count_mismatch():
    split = noise.split_e0(4, 256, 0, 0.5, seed=2)
    with pytest.raises(dsg.DesignMismatchError):
        noise.decode_race(split, [])


# --- voting reduction -------------------------------------------------


def test_voting_regime_error():
    with pytest.raises(noise.RegimeError):
        noise.build_voting_reduction(8, 1 << 10, e1=1, seed=0)


def test_voting_noiseless_exact():
    rng = seed_stream(6, "v0")
    red = noise.build_voting_reduction(16, 1 << 10, e1=0, seed=3)
    for _ in range(20):
        support = np.sort(rng.choice(1 << 10, 16, replace=False))
        out = noise.decode_voting(red, noise.measure_voting(red, support))
        assert out.tolist() == support.tolist()


def test_voting_with_false_negatives():
    rng = seed_stream(7, "v1")
    k, e1 = 16, 2
    ok = 0
    trials = 20
    for t in range(trials):
        red = noise.build_voting_reduction(k, 1 << 10, e1=e1, seed=50 + t)
        support = np.sort(rng.choice(1 << 10, k, replace=False))
        o = noise.inject_voting_noise(noise.measure_voting(red, support),
                                      fn_total=k * e1, seed=t)
        out = noise.decode_voting(red, o)
        ok += out.tolist() == support.tolist()
    assert ok >= trials - 1


def test_voting_majority_threshold_structural():
    red = noise.build_voting_reduction(16, 1 << 10, e1=0, seed=8)
    o = noise.measure_voting(red, [5])
    # zero out all inner outcomes: nothing can reach the majority shortlist
    for per in o.inner_bits:
        for b in per:
            b[:] = False
    assert noise.decode_voting(red, o).size == 0


def test_voting_outcome_mismatch():
    red1 = noise.build_voting_reduction(16, 1 << 10, e1=0, seed=1)
    red2 = noise.build_voting_reduction(16, 1 << 10, e1=0, seed=2)
    o = noise.measure_voting(red1, [3])
    with pytest.raises(dsg.DesignMismatchError):
        noise.decode_voting(red2, o)
