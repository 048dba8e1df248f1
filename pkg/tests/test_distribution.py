import numpy as np
import pytest

from plbf import (
    ScoreRecord,
    SegmentedDistribution,
    SyntheticSpec,
    ValidationError,
    apply_swaps,
    is_ideal,
    read_records_csv,
    sample_records,
    segment_index,
    segment_scores,
    synthesize_records,
    write_records_csv,
    zipfian_distribution,
)


class TestSegmentIndex:
    def test_corners(self):
        assert segment_index(0.0, 10) == 0
        assert segment_index(1.0, 10) == 9  # top score folds into the last bin
        assert segment_index(0.05, 10) == 0
        assert segment_index(0.35, 10) == 3
        assert segment_index(0.999, 1000) == 999

    def test_bin_edges_belong_to_upper_bin(self):
        assert segment_index(0.5, 2) == 1
        assert segment_index(0.25, 4) == 1

    def test_every_segment_reachable(self):
        n = 7
        hits = {segment_index((i + 0.5) / n, n) for i in range(n)}
        assert hits == set(range(n))


class TestSegmentedDistribution:
    def test_from_masses_normalizes(self):
        d = SegmentedDistribution.from_masses([2.0, 2.0], [1.0, 3.0], n_keys=10)
        assert d.g.tolist() == [0.5, 0.5]
        assert d.h.tolist() == [0.25, 0.75]
        assert d.n_keys == 10

    def test_prefix_sums(self):
        d = SegmentedDistribution.from_masses([1, 1, 2], [1, 2, 1], n_keys=5)
        assert d.g_prefix.tolist() == pytest.approx([0.0, 0.25, 0.5, 1.0])
        assert d.h_prefix.tolist() == pytest.approx([0.0, 0.25, 0.75, 1.0])

    def test_arrays_frozen(self):
        d = SegmentedDistribution.from_masses([1, 1], [1, 1], n_keys=1)
        with pytest.raises(ValueError):
            d.g[0] = 0.7

    def test_rejects_negative_mass(self):
        with pytest.raises(ValidationError):
            SegmentedDistribution.from_masses([1.0, -0.1], [1, 1], n_keys=1)

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ValidationError):
            SegmentedDistribution.from_masses([1.0], [0.5, 0.5], n_keys=1)


class TestSegmentScores:
    def test_counts_mass_per_segment(self):
        records = [
            ScoreRecord("a", 0.05, True),
            ScoreRecord("b", 0.05, True),
            ScoreRecord("c", 0.95, True),
            ScoreRecord("x", 0.05, False),
            ScoreRecord("y", 0.55, False),
        ]
        d = segment_scores(records, 2)
        assert d.g.tolist() == pytest.approx([2 / 3, 1 / 3])
        assert d.h.tolist() == pytest.approx([0.5, 0.5])
        assert d.n_keys == 3

    def test_requires_keys(self):
        with pytest.raises(ValidationError, match="no key records"):
            segment_scores([ScoreRecord("x", 0.5, False)], 4)

    def test_requires_nonkeys(self):
        with pytest.raises(ValidationError, match="no non-key records"):
            segment_scores([ScoreRecord("a", 0.5, True)], 4)

    def test_rejects_out_of_range_score(self):
        bad = [ScoreRecord("a", 1.5, True), ScoreRecord("x", 0.5, False)]
        with pytest.raises(ValidationError):
            segment_scores(bad, 4)


class TestIsIdeal:
    def test_monotone_ratio_is_ideal(self):
        d = SegmentedDistribution.from_masses([1, 2, 4], [4, 2, 1], n_keys=1)
        assert is_ideal(d)

    def test_ratio_dip_is_not_ideal(self):
        d = SegmentedDistribution.from_masses([1, 4, 2], [4, 1, 2], n_keys=1)
        assert not is_ideal(d)

    def test_zero_nonkey_mass_tail_is_ideal(self):
        d = SegmentedDistribution.from_masses([1, 2], [1, 0], n_keys=1, normalize=False)
        assert is_ideal(d)


class TestZipfianDistribution:
    def test_unswapped_is_always_ideal(self):
        for exponent in (0.4, 1.0, 2.5):
            for n in (2, 17, 400):
                spec = SyntheticSpec(n, 100, 100, zipf_exponent=exponent)
                assert is_ideal(zipfian_distribution(spec))

    def test_masses_are_normalized_and_mirrored(self):
        spec = SyntheticSpec(50, 100, 100, zipf_exponent=1.3)
        d = zipfian_distribution(spec)
        assert d.g.sum() == pytest.approx(1.0)
        assert d.h.sum() == pytest.approx(1.0)
        assert d.g.tolist() == pytest.approx(d.h[::-1].tolist())

    def test_heavy_swapping_breaks_ideality(self):
        spec = SyntheticSpec(1000, 100, 100, n_swaps=10_000, seed=0)
        assert not is_ideal(zipfian_distribution(spec))


class TestApplySwaps:
    def test_zero_swaps_returns_input(self):
        d = zipfian_distribution(SyntheticSpec(20, 10, 10))
        assert apply_swaps(d, 0, seed=3) is d

    def test_preserves_mass_multiset(self):
        d = zipfian_distribution(SyntheticSpec(30, 10, 10))
        swapped = apply_swaps(d, 500, seed=9)
        assert sorted(swapped.g.tolist()) == pytest.approx(sorted(d.g.tolist()))
        assert sorted(swapped.h.tolist()) == pytest.approx(sorted(d.h.tolist()))

    def test_moves_g_and_h_together(self):
        d = zipfian_distribution(SyntheticSpec(30, 10, 10))
        swapped = apply_swaps(d, 200, seed=4)
        pairs_before = sorted(zip(d.g.tolist(), d.h.tolist()))
        pairs_after = sorted(zip(swapped.g.tolist(), swapped.h.tolist()))
        assert pairs_after == pytest.approx(pairs_before)

    def test_deterministic(self):
        d = zipfian_distribution(SyntheticSpec(30, 10, 10))
        a = apply_swaps(d, 100, seed=5)
        b = apply_swaps(d, 100, seed=5)
        assert a.g.tolist() == b.g.tolist()
        assert a.h.tolist() == b.h.tolist()


class TestSynthesizeRecords:
    def test_counts_match_spec(self):
        spec = SyntheticSpec(40, 333, 777, seed=1)
        records = synthesize_records(spec)
        assert sum(r.is_key for r in records) == 333
        assert sum(not r.is_key for r in records) == 777

    def test_unswapped_records_rebin_ideal(self):
        spec = SyntheticSpec(100, 5000, 5000, seed=2)
        d = segment_scores(synthesize_records(spec), 100)
        assert is_ideal(d)

    def test_reproducible(self):
        spec = SyntheticSpec(25, 200, 200, n_swaps=50, seed=6)
        assert synthesize_records(spec) == synthesize_records(spec)

    def test_seed_changes_output(self):
        a = synthesize_records(SyntheticSpec(25, 200, 200, seed=1))
        b = synthesize_records(SyntheticSpec(25, 200, 200, seed=2))
        assert a != b

    def test_scores_stay_in_declared_segments(self):
        spec = SyntheticSpec(13, 400, 400, seed=3)
        for rec in synthesize_records(spec):
            assert 0.0 <= rec.score <= 1.0


class TestSampleRecords:
    def test_counts_and_prefixes(self):
        d = zipfian_distribution(SyntheticSpec(20, 10, 10))
        records = sample_records(d, 50, 70, seed=8, key_prefix="kk", nonkey_prefix="nn")
        keys = [r for r in records if r.is_key]
        nonkeys = [r for r in records if not r.is_key]
        assert len(keys) == 50 and len(nonkeys) == 70
        assert all(r.element_id.startswith("kk") for r in keys)
        assert all(r.element_id.startswith("nn") for r in nonkeys)

    def test_deterministic(self):
        d = zipfian_distribution(SyntheticSpec(20, 10, 10))
        assert sample_records(d, 30, 30, seed=8) == sample_records(d, 30, 30, seed=8)

    def test_nonkeys_only(self):
        d = zipfian_distribution(SyntheticSpec(20, 10, 10))
        records = sample_records(d, 0, 25, seed=8)
        assert len(records) == 25
        assert not any(r.is_key for r in records)


class TestCsvRoundTrip:
    def test_round_trip_exact(self, tmp_path):
        records = synthesize_records(SyntheticSpec(15, 120, 80, seed=4))
        path = tmp_path / "records.csv"
        write_records_csv(path, records)
        assert read_records_csv(path) == records

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,value,flag\nx,0.5,1\n")
        with pytest.raises(ValidationError, match="header"):
            read_records_csv(path)

    def test_rejects_bad_label_with_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("element_id,score,label\nx,0.5,2\n")
        with pytest.raises(ValidationError, match=r"bad\.csv:2"):
            read_records_csv(path)

    def test_rejects_unparseable_score(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("element_id,score,label\nx,half,1\n")
        with pytest.raises(ValidationError, match=r"bad\.csv:2"):
            read_records_csv(path)

    def test_rejects_out_of_range_score(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("element_id,score,label\nx,1.25,1\n")
        with pytest.raises(ValidationError):
            read_records_csv(path)


class TestSyntheticSpecValidation:
    def test_rejects_tiny_segment_count(self):
        with pytest.raises(ValidationError):
            SyntheticSpec(1, 10, 10)

    def test_rejects_zero_counts(self):
        with pytest.raises(ValidationError):
            SyntheticSpec(10, 0, 10)

    def test_rejects_nonpositive_exponent(self):
        with pytest.raises(ValidationError):
            SyntheticSpec(10, 10, 10, zipf_exponent=0.0)

    def test_rejects_negative_swaps(self):
        with pytest.raises(ValidationError):
            SyntheticSpec(10, 10, 10, n_swaps=-1)
