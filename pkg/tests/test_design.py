import numpy as np
import pytest

import sparsekit.design as dsg
from sparsekit.design import (DecodeStats, DesignMismatchError, NoisePolicy,
                              bprefix, build_identification, identify,
                              inject_noise, locate_batch, measure,
                              round_up_pow2)
from sparsekit.hashing import seed_stream


def test_bprefix_known_values():
    assert bprefix(0b1100, 4, 2) == 3
    assert bprefix(0b11011, 5, 3) == 6


def test_bprefix_zero_length():
    for v in (0, 1, 13, 255):
        assert bprefix(v, 8, 0) == 0


def test_bprefix_errors():
    with pytest.raises(ValueError):
        bprefix(3, 4, 5)
    with pytest.raises(ValueError):
        bprefix(16, 4, 2)


def test_round_up_pow2():
    assert round_up_pow2(1) == 1
    assert round_up_pow2(5) == 8
    assert round_up_pow2(64) == 64
    with pytest.raises(ValueError):
        round_up_pow2(0)


def test_build_level_counts():
    d = build_identification(1, 2, C=4, seed=0)
    assert d.num_levels == 2 and d.rows == 8

    d = build_identification(4, 64, C=8, seed=0)
    assert d.num_levels == 5
    assert d.rows_per_level == 32
    assert d.rows == 160


def test_build_validation():
    with pytest.raises(ValueError):
        build_identification(3, 64)
    with pytest.raises(ValueError):
        build_identification(4, 60)
    with pytest.raises(ValueError):
        build_identification(8, 4)
    with pytest.raises(ValueError):
        build_identification(4, 64, C=1)


def test_column_position_matches_hash():
    d = build_identification(4, 64, C=8, seed=42)
    ell = 3
    col = 13
    row = d.locate(ell, [bprefix(col, 6, ell)])[0]
    o = measure(d, [col])
    assert o.level(ell)[row]
    assert o.level(ell).sum() == 1


def test_measure_empty_and_union():
    d = build_identification(4, 256, seed=1)
    o_empty = measure(d, [])
    assert o_empty.popcount() == 0
    rng = seed_stream(3, "t")
    s = set(rng.choice(256, 5, replace=False).tolist())
    t = set(rng.choice(256, 5, replace=False).tolist())
    o_s, o_t, o_st = measure(d, s), measure(d, t), measure(d, s | t)
    for ell in d.levels:
        assert np.array_equal(o_st.level(ell),
                              o_s.level(ell) | o_t.level(ell))


def test_measure_single_defective_one_bit_per_level():
    d = build_identification(8, 1 << 10, seed=9)
    o = measure(d, [517])
    for ell in d.levels:
        assert o.level(ell).sum() == 1
        assert o.level(ell)[d.locate(ell, [517 >> (10 - ell)])[0]]


def test_measure_rejects_out_of_range():
    d = build_identification(2, 16, seed=0)
    with pytest.raises(ValueError):
        measure(d, [16])


def test_inject_noise_noop_and_counts():
    d = build_identification(4, 256, seed=5)
    o = measure(d, [1, 2, 3])
    same = inject_noise(o, NoisePolicy())
    for ell in d.levels:
        assert np.array_equal(same.level(ell), o.level(ell))
    noisy = inject_noise(o, NoisePolicy(fp_per_level=3, seed=7))
    for ell in d.levels:
        assert noisy.level(ell).sum() == o.level(ell).sum() + 3
    # original untouched
    assert o.popcount() == measure(d, [1, 2, 3]).popcount()


def test_inject_noise_false_negatives():
    d = build_identification(4, 256, seed=5)
    o = measure(d, [9, 77])
    before = o.popcount()
    noisy = inject_noise(o, NoisePolicy(fn_total=2, seed=3))
    assert noisy.popcount() == before - 2


def test_inject_noise_exhausted_bits():
    d = build_identification(2, 4, C=2, seed=0)
    o = measure(d, [0])
    with pytest.raises(ValueError):
        inject_noise(o, NoisePolicy(fp_per_level=10_000))
    with pytest.raises(ValueError):
        inject_noise(o, NoisePolicy(fn_total=10_000))


def test_inject_noise_adversarial_targets_siblings():
    d = build_identification(4, 256, seed=11)
    support = [3, 130, 200, 255]
    o = measure(d, support)
    pol = NoisePolicy(fp_per_level=2, placement="adversarial-near-defectives",
                      seed=13)
    with pytest.raises(ValueError):
        inject_noise(o, pol)  # support required
    noisy = inject_noise(o, pol, support=support)
    sup = np.asarray(support)
    for ell in d.levels:
        flipped = np.flatnonzero(noisy.level(ell) & ~o.level(ell))
        siblings = np.unique((sup >> (8 - ell)) ^ 1)
        sib_rows = set(d.locate(ell, siblings).tolist())
        untargeted = [r for r in flipped if r not in sib_rows]
        # sibling rows are preferred; extras only when candidates run out
        zero_sib = [r for r in sib_rows if not o.level(ell)[r]]
        assert len(untargeted) == max(0, 2 - len(zero_sib))


def test_identify_all_zero_outcome_empty():
    d = build_identification(8, 1 << 10, seed=2)
    o = measure(d, [])
    assert identify(d, o).size == 0


def test_identify_superset_on_random_trials():
    rng = seed_stream(0, "trials")
    for _ in range(25):
        seed = int(rng.integers(1 << 32))
        d = build_identification(8, 1 << 10, seed=seed)
        support = np.sort(rng.choice(1 << 10, 8, replace=False))
        out = identify(d, measure(d, support))
        assert np.isin(support, out).all()


def test_identify_metadata_mismatch():
    d1 = build_identification(4, 256, seed=1)
    d2 = build_identification(4, 256, seed=2)
    o = measure(d1, [5])
    with pytest.raises(DesignMismatchError):
        identify(d2, o)


def test_identify_monotone_in_outcome():
    rng = seed_stream(4, "mono")
    d = build_identification(4, 256, seed=8)
    for _ in range(20):
        support = rng.choice(256, 4, replace=False)
        o = measure(d, support)
        noisy = inject_noise(o, NoisePolicy(fp_per_level=4,
                                            seed=int(rng.integers(1 << 30))))
        base = identify(d, o)
        more = identify(d, noisy)
        assert set(base.tolist()) <= set(more.tolist())


def test_identify_levelwise_locality():
    # flipping bits only at level ell never changes survivors below ell
    d = build_identification(4, 256, seed=21)
    rng = seed_stream(5, "local")
    support = [7, 60, 130, 250]
    o = measure(d, support)
    ell_flip = d.log_n  # last level
    noisy = o.copy()
    zeros = np.flatnonzero(~noisy.level(ell_flip))
    noisy.level(ell_flip)[rng.choice(zeros, 5, replace=False)] = True

    def survivors_through(outcome, stop):
        live = np.arange(d.k, dtype=np.int64)
        for ell in d.levels:
            if ell > stop:
                break
            live = live[outcome.level(ell)[d.locate(ell, live)]]
            if ell < d.log_n:
                live = np.concatenate([live << 1, (live << 1) | 1])
        return live

    for stop in range(d.log_k, ell_flip):
        assert np.array_equal(survivors_through(o, stop),
                              survivors_through(noisy, stop))


def test_identify_work_counter_bound():
    d = build_identification(8, 1 << 12, seed=3)
    rng = seed_stream(6, "work")
    support = rng.choice(1 << 12, 8, replace=False)
    stats = DecodeStats()
    out = identify(d, measure(d, support), stats)
    logr = 9
    upper = 4 * 8 * logr + 8
    assert out.size <= upper
    assert stats.inserted <= 2 * upper * d.num_levels


def test_identify_degenerate_shapes():
    # k = 1: single empty prefix at level 0
    d = build_identification(1, 16, seed=5)
    out = identify(d, measure(d, [13]))
    assert 13 in out.tolist()
    # k = n: one level, all prefixes tested at full length
    d = build_identification(16, 16, seed=5)
    out = identify(d, measure(d, [3, 9]))
    assert {3, 9} <= set(out.tolist())


def test_locate_batch_matches_eval_and_validates():
    d = build_identification(4, 256, seed=14)
    prefixes = np.arange(1 << 5)
    rows = locate_batch(d, 5, prefixes)
    assert np.array_equal(rows, d.level_hash(5).eval_batch(prefixes))
    with pytest.raises(ValueError):
        locate_batch(d, 1, [0])  # level below log k
    from sparsekit.hashing import DomainError
    with pytest.raises(DomainError):
        locate_batch(d, 5, [1 << 5])


def test_outcome_determinism_same_seed():
    d1 = build_identification(4, 1 << 10, seed=77)
    d2 = build_identification(4, 1 << 10, seed=77)
    s = [1, 2, 512]
    o1, o2 = measure(d1, s), measure(d2, s)
    for ell in d1.levels:
        assert np.array_equal(o1.level(ell), o2.level(ell))
