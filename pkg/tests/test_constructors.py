"""Family constructors: rotation sets, coded classical sets, block
parity transforms, randomized extensions, gap families, pattern packing.
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
import densfam.fixedpoint as fx
import densfam.rng as rng
from densfam import (
    BlockParitySet,
    ExtensionParams,
    Family,
    KWSet,
    alignment_block,
    atom_density,
    block_bounds,
    block_of,
    block_transform,
    coded_independent_set,
    f2_rank,
    from_elements,
    gap_family,
    greedy_atom_pack,
    kw_family,
    kw_set,
    random_extension,
    square_free_radicands,
)
from densfam.sets import bits_to_mask

rationals_01 = st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100),
                            max_denominator=100)


# -- fixed-point layer -----------------------------------------------------

# frozen from mpmath: floor(sqrt(r) * 2**96) at 60 digits
SQRT_FIXED = {
    2: 112045541949572279837463876454,
    3: 137227202865029797602485611888,
    5: 177159557114295710296101716160,
}


@pytest.mark.parametrize("r", sorted(SQRT_FIXED))
def test_sqrt_fixed_matches_frozen_oracle(r):
    assert fx.sqrt_fixed(r) == SQRT_FIXED[r]


def test_sqrt_fixed_is_floor_of_true_root():
    for r in (2, 3, 7, 11):
        v = fx.sqrt_fixed(r)
        assert v * v <= r << 192 < (v + 1) * (v + 1)


def test_sqrt_fixed_rejects_bad_radicands():
    for r in (0, 1, 4, 9, 12, 18):
        with pytest.raises(ValueError):
            fx.sqrt_fixed(r)


def test_is_square_free():
    assert [r for r in range(2, 20) if fx.is_square_free(r)] == [
        2, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 19]


def test_square_free_radicands_prefix():
    assert square_free_radicands(5) == (2, 3, 5, 6, 7)


def test_threshold_fixed_rounds_down():
    assert fx.threshold_fixed(Fraction(1, 2)) == 1 << 95
    assert fx.threshold_fixed(Fraction(1, 3)) == ((1 << 96) - 1) // 3


def test_threshold_fixed_guards_margin():
    eps = Fraction(1, 1 << 40)  # inside the forbidden margin
    for p in (eps, 1 - eps):
        with pytest.raises(ValueError):
            fx.threshold_fixed(p)


def test_orbit_value_is_exact_modular_multiple():
    step = fx.frac_step(2)
    for n in (0, 1, 7, 12345, 10**7):
        assert fx.orbit_value(step, n) == (n * step) % fx.MOD


def test_iterated_sqrt_converges_toward_one():
    p = Fraction(9, 10)
    prev = fx.threshold_fixed(p)
    for t in range(1, 4):
        cur = fx.iterated_sqrt_fixed(p, t)
        assert cur > prev
        # squaring back, up to fixed-point truncation, recovers the
        # previous level
        sq = (cur * cur) >> fx.FRAC_BITS
        assert abs(sq - prev) <= 2
        prev = cur


# -- counter RNG -----------------------------------------------------------

# frozen: numpy Philox4x64, key=20260816, first eight outputs
PHILOX_PIN = [
    15195873253082300152, 6405049353886341247, 6480161597397182469,
    9623267390198222785, 12490499062507873345, 7299875259050722401,
    5971853599101367929, 1864653829396523777,
]


def test_u64_stream_pinned():
    got = [int(x) for x in rng.u64_range(20260816, 0, 8)]
    assert got == PHILOX_PIN


def test_u64_range_is_offset_consistent():
    whole = [int(x) for x in rng.u64_range(99, 0, 40)]
    part = [int(x) for x in rng.u64_range(99, 13, 29)]
    assert part == whole[13:29]
    assert rng.u64_at(99, 17) == whole[17]


def test_acceptance_threshold_floor():
    assert rng.acceptance_threshold(Fraction(1, 2)) == 1 << 63
    assert rng.acceptance_threshold(Fraction(3, 10)) == (3 << 64) // 10


# -- rotation threshold sets -------------------------------------------------


def test_kw_set_validation():
    with pytest.raises(ValueError):
        kw_set(4, Fraction(1, 2))  # not square-free
    with pytest.raises(ValueError):
        kw_set(2, Fraction(1, 1 << 40))  # threshold under the margin


def test_kw_family_shape():
    fam = kw_family([2, 3, 5], [Fraction(3, 10), Fraction(1, 2), Fraction(7, 10)])
    assert fam.names == ("A0", "A1", "A2")
    assert fam.densities == (Fraction(3, 10), Fraction(1, 2), Fraction(7, 10))
    assert all(isinstance(s, KWSet) for s in fam.sets)


def test_kw_family_rejects_repeated_radicand():
    with pytest.raises(ValueError):
        kw_family([2, 2], [Fraction(1, 3), Fraction(1, 2)])


def test_kw_chunk_agrees_with_member():
    s = kw_set(3, Fraction(2, 7))
    bits = s.bits_range(0, 3000)
    for n in (0, 1, 17, 100, 2999):
        assert bool(bits[n]) == s.member(n)


def test_kw_band_bound_formula():
    assert KWSet.band_bound(10**6) == Fraction(2 * 10**6, 1 << 40) + 1


def test_kw_band_hits_within_bound():
    s = kw_set(2, Fraction(3, 10))
    hits = s.band_count(10**5)
    assert 0 <= hits <= KWSet.band_bound(10**5)


def test_kw_descriptor():
    s = kw_set(5, Fraction(7, 10))
    assert s.descriptor["kind"] == "kw"
    assert s.descriptor["radicand"] == 5


# -- coded classical sets -----------------------------------------------------

# frozen from oracles.coded_bits_hex (explicit subset enumeration)
CODED_BITS = {
    ("0", 1, 6): "0x2a",
    ("1", 1, 6): "0x32",
    ("00", 2, 22): "0x2aaaaa",
    ("01", 2, 22): "0x33332a",
    ("10", 2, 22): "0x3c3c32",
    ("11", 2, 22): "0x3fc032",
    ("00", 4, 278): "0x2aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa",
    ("01", 4, 278): "0x3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c3c33332a",
    ("10", 4, 278): "0x3fffc0003fffc0003fffc0003fffc0003fffc0003fffc0003fffc0003fffc0003c3c32",
}


@pytest.mark.parametrize("sigma,depth,nbits", sorted(CODED_BITS, key=str))
def test_coded_bits_match_frozen_oracle(sigma, depth, nbits):
    s = coded_independent_set(sigma, depth)
    assert hex(bits_to_mask(s.bits_range(0, nbits))) == CODED_BITS[(sigma, depth, nbits)]


def test_coded_matches_live_oracle():
    s = coded_independent_set("101", 3)
    for k in range(0, 278, 7):
        assert s.member(k) == oracles.coded_member_enum("101", 3, k)


def test_coded_block_sizes():
    # block n holds one index per subset of the length-n strings
    assert oracles.coded_block_starts(4) == [0, 2, 6, 22, 278, 65814]


def test_coded_separation_in_next_block():
    # parameters differing at position i separate inside block i+1
    for a, b, pos in (("00", "01", 1), ("00", "10", 0), ("01", "11", 0)):
        sa = coded_independent_set(a, 4)
        sb = coded_independent_set(b, 4)
        starts = oracles.coded_block_starts(4)
        lo, hi = starts[pos + 1], starts[pos + 2]
        assert any(sa.member(k) != sb.member(k) for k in range(lo, hi))


def test_coded_accepts_callable_parameter():
    s1 = coded_independent_set(lambda i: i % 2, 3)
    s2 = coded_independent_set("0101", 3)
    assert all(s1.member(k) == s2.member(k) for k in range(278))


def test_coded_depth_cap():
    with pytest.raises(ValueError):
        coded_independent_set("0", 6)


def test_coded_indices_beyond_last_block_excluded():
    s = coded_independent_set("01", 2)
    assert not any(s.member(k) for k in range(22, 50))


# -- factorial blocks ----------------------------------------------------------


def test_factorial_block_layout():
    starts = oracles.factorial_block_starts(10)
    for m in range(9):
        assert block_bounds(m) == (starts[m], starts[m + 1])
    assert block_of(0) == 0
    assert block_of(220) == 3
    assert block_of(221) == 4
    assert block_of(25181) == 6


# frozen from oracles.block_parity_count_enum
BLOCK_PARITY_COUNTS = {
    "evens": {7: 3, 100: 50, 250: 125, 3000: 1500},
    "odds": {7: 0, 100: 47, 250: 123, 3000: 1498},
}


@pytest.mark.parametrize("which", sorted(BLOCK_PARITY_COUNTS))
def test_block_parity_counts_match_frozen_oracle(which):
    residue = 0 if which == "evens" else 1
    cls = from_elements(range(residue, 40, 2))
    bp = BlockParitySet(cls)
    for n, expect in BLOCK_PARITY_COUNTS[which].items():
        assert bp.prefix_count(n) == expect


def test_block_parity_hint_matches_sweep():
    bp = BlockParitySet(from_elements([0, 3, 4, 9, 11]))
    for n in (1, 28, 222, 2141, 5000, 70_001):
        assert bp.prefix_count(n) == bp.sweep_prefix(n)


def test_block_parity_member_matches_live_oracle():
    members = {0, 3, 4, 9, 11}
    bp = BlockParitySet(from_elements(members))
    starts = oracles.factorial_block_starts(12)
    for n in range(0, 2141, 13):
        assert bp.member(n) == oracles.block_parity_member_enum(members, n, starts)


def test_f2_rank_examples():
    assert f2_rank([]) == 0
    assert f2_rank([0b1010, 0b0101]) == 2
    assert f2_rank([0b1010, 0b0101, 0b1111]) == 2  # third is the sum
    assert f2_rank([1, 2, 4, 8]) == 4


def test_alignment_block_for_coded_triple():
    classical = [coded_independent_set(s, 4) for s in ("00", "01", "10")]
    # frozen from the enumeration oracle: the three initial-segment
    # indicator vectors first reach rank 3 at block 8
    assert alignment_block(classical) == 8


def test_alignment_block_none_for_dependent_masks():
    # identical classical sets can never reach rank 2
    a = from_elements(range(0, 40, 2))
    b = from_elements(range(0, 40, 2))
    assert alignment_block([a, b], max_block=10) is None


def test_block_transform_family():
    classical = [coded_independent_set(s, 4) for s in ("00", "01")]
    fam = block_transform(classical)
    assert fam.densities == (Fraction(1, 2), Fraction(1, 2))
    assert fam.meta["alignment_block"] is not None


# -- biased-coin extension parameters -------------------------------------------


def test_extension_params_half_half_exact():
    p = ExtensionParams.from_target(Fraction(1, 2), Fraction(1, 2))
    assert (p.eps, p.x0, p.x1, p.t0, p.t1) == (
        Fraction(1, 8), Fraction(1, 8), Fraction(3, 8),
        Fraction(1, 4), Fraction(3, 4),
    )


@given(rationals_01, rationals_01)
def test_extension_params_identity(a, s):
    p = ExtensionParams.from_target(a, s)
    # the two conditional rates must average back to the target exactly
    assert p.t1 * a + p.t0 * (1 - a) == s
    assert p.eps == Fraction(1, 2) * min(a * (1 - s), s * (1 - a))
    assert 0 <= p.t0 <= 1 and 0 <= p.t1 <= 1
    assert p.t1 - p.t0 > 0  # the bias direction is fixed


def test_extension_params_rejects_degenerate():
    with pytest.raises(ValueError):
        ExtensionParams.from_target(Fraction(0), Fraction(1, 2))
    with pytest.raises(ValueError):
        ExtensionParams.from_target(Fraction(1, 2), Fraction(1))


def test_random_extension_deterministic(kw_pair):
    b1, p1 = random_extension(kw_pair, "A0", Fraction(1, 2), seed=7)
    b2, p2 = random_extension(kw_pair, "A0", Fraction(1, 2), seed=7)
    assert p1 == p2
    assert b1.prefix_count(30_000) == b2.prefix_count(30_000)
    assert b1.bits_range(0, 500).tolist() == b2.bits_range(0, 500).tolist()


def test_random_extension_seed_sensitivity(kw_pair):
    b1, _ = random_extension(kw_pair, "A0", Fraction(1, 2), seed=7)
    b2, _ = random_extension(kw_pair, "A0", Fraction(1, 2), seed=8)
    assert b1.bits_range(0, 2000).tolist() != b2.bits_range(0, 2000).tolist()


def test_random_extension_chunk_agrees_with_member(kw_pair):
    b, _ = random_extension(kw_pair, "A1", Fraction(2, 5), seed=3)
    bits = b.bits_range(0, 1000)
    for n in (0, 1, 2, 99, 500, 999):
        assert bool(bits[n]) == b.member(n)


def test_random_extension_unknown_member(kw_pair):
    with pytest.raises(KeyError):
        random_extension(kw_pair, "NOPE", Fraction(1, 2), seed=1)


def test_random_extension_descriptor_records_provenance(kw_pair):
    b, _ = random_extension(kw_pair, "A0", Fraction(1, 2), seed=11)
    d = b.descriptor
    assert d["kind"] == "random-ext"
    assert d["algorithm"] == rng.RNG_ALGORITHM
    assert d["seed"] == 11
    assert d["distinguished"] == "A0"


# -- gap families -----------------------------------------------------------------


def test_gap_family_product_exceeds_target():
    fam = gap_family(Fraction(9, 10), 4)
    prod = fam.meta["threshold_product"]
    assert prod >= Fraction(9, 10)
    # frozen decimal from the fixed-point construction
    assert f"{float(prod):.12f}" == "0.905946085100"


def test_gap_family_densities_increase_toward_one():
    fam = gap_family(Fraction(9, 10), 4)
    ds = fam.densities
    assert all(Fraction(1, 2) < d < 1 for d in ds)
    assert all(a < b for a, b in zip(ds, ds[1:]))
    assert fam.names == ("G0", "G1", "G2", "G3")


def test_gap_family_validation():
    with pytest.raises(ValueError):
        gap_family(Fraction(1, 2), 3)  # target must exceed one half
    with pytest.raises(ValueError):
        gap_family(Fraction(9, 10), 0)


# -- atom densities and greedy packing ----------------------------------------------


@given(st.lists(rationals_01, min_size=1, max_size=4), st.integers(0, 15))
def test_atom_density_matches_inclusion_exclusion(ds, bits_int):
    bits = tuple((bits_int >> i) & 1 for i in range(len(ds)))
    assert atom_density(ds, bits) == oracles.atom_density_ie(ds, bits)


def test_atom_density_sums_to_one():
    ds = [Fraction(3, 10), Fraction(1, 2), Fraction(7, 10)]
    total = sum(
        atom_density(ds, tuple((i >> j) & 1 for j in range(3))) for i in range(8)
    )
    assert total == 1


# frozen from oracles.brute_pack_best over density-1/2 families
BRUTE_HALF_PACK = {
    (1, Fraction(1, 10)): 0,
    (2, Fraction(1, 10)): 0,
    (3, Fraction(1, 10)): 0,
    (1, Fraction(3, 10)): 0,
    (2, Fraction(3, 10)): 1,
    (3, Fraction(3, 10)): 2,
    (1, Fraction(3, 5)): 1,
    (2, Fraction(3, 5)): 2,
    (3, Fraction(3, 5)): 4,
}


@pytest.mark.parametrize("k,target", sorted(BRUTE_HALF_PACK, key=str))
def test_greedy_pack_optimal_for_uniform_densities(k, target):
    result = greedy_atom_pack([Fraction(1, 2)] * k, 1, target)
    assert len(result.patterns) == BRUTE_HALF_PACK[(k, target)]
    assert result.certificate_ok()
    assert result.total < target


def test_greedy_pack_worked_example():
    ds = [Fraction(3, 10), Fraction(1, 2), Fraction(7, 10)]
    result = greedy_atom_pack(ds, 1, Fraction(3, 10))
    assert result.patterns == ((1, 0, 0), (1, 0, 1), (1, 1, 0))
    assert result.total == Fraction(39, 200)
    assert result.certificate_ok()
    # the exhaustive oracle confirms three patterns is the maximum
    card, _ = oracles.brute_pack_best(ds, 1, Fraction(3, 10))
    assert card == len(result.patterns)


def test_greedy_pack_empty_when_nothing_fits():
    result = greedy_atom_pack([Fraction(1, 2)], 1, Fraction(1, 10))
    assert result.patterns == ()
    assert result.total == 0
    assert result.certificate_ok()
    assert len(result.excluded) == 1  # the single side-1 atom


@given(st.lists(rationals_01, min_size=1, max_size=3),
       st.integers(0, 1), rationals_01)
@settings(max_examples=60)
def test_greedy_pack_properties(ds, side, target):
    result = greedy_atom_pack(ds, side, target)
    k = len(ds)
    assert result.total < target
    assert result.certificate_ok()
    assert len(set(result.patterns)) == len(result.patterns)
    for p in result.patterns:
        assert len(p) == k and p[0] == side
    # never beats the exhaustive optimum
    card, _ = oracles.brute_pack_best(ds, side, target)
    assert len(result.patterns) <= card


def test_greedy_pack_accepts_family(half_family):
    result = greedy_atom_pack(half_family, 0, Fraction(2, 5))
    assert result.total < Fraction(2, 5)
    assert result.certificate_ok()


def test_greedy_pack_validation():
    with pytest.raises(ValueError):
        greedy_atom_pack([Fraction(1, 2)], 2, Fraction(1, 2))
    with pytest.raises(ValueError):
        greedy_atom_pack([], 1, Fraction(1, 2))
    with pytest.raises(ValueError):
        greedy_atom_pack([Fraction(1, 2)], 1, Fraction(0))


# -- family container ------------------------------------------------------------


def test_family_validation():
    e = from_elements([0])
    with pytest.raises(ValueError, match="family must be nonempty"):
        Family((), (), ())
    with pytest.raises(ValueError):
        Family(("A", "A"), (e, e), (Fraction(1, 2), Fraction(1, 2)))
    with pytest.raises(ValueError):
        Family(("A",), (e,), (Fraction(1),))


def test_family_lookup_and_subfamily(kw_pair):
    assert kw_pair.index("A1") == 1
    assert kw_pair.density_of("A0") == Fraction(3, 10)
    sub = kw_pair.subfamily(["A1"])
    assert sub.names == ("A1",)
    with pytest.raises(KeyError):
        kw_pair.index("Z")


def test_family_extended(kw_pair):
    bigger = kw_pair.extended("X", from_elements(range(0, 100, 2)), Fraction(1, 2))
    assert bigger.names == ("A0", "A1", "X")
    assert kw_pair.names == ("A0", "A1")  # original untouched


# -- stated construction identities -----------------------------------------


def test_kw_membership_tracks_fractional_part_of_root_two():
    # frac(sqrt(2)) = 0.41421..., so index 1 flips right there
    assert kw_set(2, Fraction(42, 100)).member(1)
    assert not kw_set(2, Fraction(41, 100)).member(1)


def test_kw_family_rejects_empty_input():
    with pytest.raises(ValueError):
        kw_family([], [])


def test_kw_root_three_quarter_threshold_converges():
    from densfam import WindowSchedule, estimate_density

    sched = WindowSchedule().retarget(100_000)
    est = estimate_density(kw_set(3, Fraction(1, 4)), sched)
    assert abs(est.value - Fraction(1, 4)) <= Fraction(5, 1000)


def test_coded_all_ones_offset_is_in_every_set():
    starts = oracles.coded_block_starts(5)
    sets = [coded_independent_set(tuple(int(c) for c in sig), 4)
            for sig in ("0", "1", "00", "01", "10", "11")]
    for n in (1, 2, 3):
        # the last offset of block n encodes the full set of strings
        idx = starts[n] + (1 << (1 << n)) - 1
        for s in sets:
            assert s.member(idx)


def test_coded_every_pattern_appears_inside_early_blocks():
    sigmas = ("00", "01", "10")
    sets = [coded_independent_set(tuple(int(c) for c in sig), 4)
            for sig in sigmas]
    starts = oracles.coded_block_starts(5)
    for n in (2, 3):
        lo, hi = starts[n], starts[n] + (1 << (1 << n))
        seen = set()
        for k in range(lo, hi):
            seen.add(tuple(int(s.member(k)) for s in sets))
        # distinct prefixes realize all 2^3 boolean patterns in one block
        assert seen == {tuple(b) for b in
                        ((a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1))}


def test_block_parity_fills_half_of_each_full_block():
    s = BlockParitySet(coded_independent_set((0,), 4))
    for m in (4, 5, 6):
        lo, hi = block_bounds(m)
        assert s.count_range(lo, hi) == (hi - lo) // 2


def test_gap_family_nested_intersections_shrink_to_product():
    from densfam.verify import expected_atom_density

    fam = gap_family(Fraction(9, 10), 4)
    partials = []
    for depth in range(1, 5):
        sub = fam.subfamily(fam.names[:depth])
        partials.append(expected_atom_density(sub, (1,) * depth))
    assert all(a > b for a, b in zip(partials, partials[1:]))
    prod = Fraction(1)
    for d in fam.densities:
        prod *= d
    assert partials[-1] == prod


def test_greedy_single_member_cases():
    got = greedy_atom_pack([Fraction(1, 2)], 1, Fraction(3, 5))
    assert got.patterns == ((1,),)
    assert got.total == Fraction(1, 2)
    empty = greedy_atom_pack([Fraction(1, 2)], 1, Fraction(3, 10))
    assert empty.patterns == ()
    assert empty.total == 0


def test_greedy_three_halves_side_zero():
    got = greedy_atom_pack([Fraction(1, 2)] * 3, 0, Fraction(3, 10))
    assert got.patterns == ((0, 0, 0), (0, 0, 1))
    assert got.total == Fraction(1, 4)
    # every excluded eligible atom would push the total to >= 3/10
    for _, d in got.excluded:
        assert got.total + d >= Fraction(3, 10)
