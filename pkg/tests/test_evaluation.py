import random
from fractions import Fraction

import pytest

from conftest import FIXTURES
from pmchat.errors import EmptyReportError, ValidationError
from pmchat.evaluation import (
    RatingsStore,
    compare_styles,
    distribution,
    import_ratings_csv,
    parse_category,
    render_distribution_text,
    round_half_up_percent,
    RatingRecord,
)

FIXTURE_CSV = FIXTURES / "ratings" / "expert_panel_reconstruction.csv"


def _fixture_records():
    rows, errors = import_ratings_csv(FIXTURE_CSV.read_text("utf-8"))
    assert not errors
    return [RatingRecord(rating_id=f"rt{i:04d}", **row) for i, row in enumerate(rows, 1)]


class TestRounding:
    def test_round_half_up(self):
        assert round_half_up_percent(1, 200) == 1  # 0.5 rounds up
        assert round_half_up_percent(1, 201) == 0
        assert round_half_up_percent(72, 100) == 72

    def test_agrees_with_exact_fractions(self):
        rng = random.Random(3)
        for _ in range(500):
            total = rng.randint(1, 300)
            count = rng.randint(0, total)
            share = Fraction(100 * count, total)
            expected = int(share) + (1 if share - int(share) >= Fraction(1, 2) else 0)
            assert round_half_up_percent(count, total) == expected


class TestCategories:
    def test_aliases(self):
        assert parse_category("N.A.") == "NA"
        assert parse_category("good") == "Good"

    def test_invalid_category(self):
        with pytest.raises(ValidationError):
            parse_category("OK")

    def test_record_requires_valid_category(self):
        with pytest.raises(ValidationError):
            RatingRecord(rating_id="r1", category="Great")


class TestFixtureDistribution:
    def test_overall_reproduces_published_percentages(self):
        report = distribution(_fixture_records(), "overall")
        overall = report.groups["overall"]
        assert overall.total == 100
        assert overall.percentages == {"Good": 72, "Mediocre": 19, "Bad": 8, "NA": 1}

    def test_sector_good_percentages(self):
        report = distribution(_fixture_records(), "sector")
        good = {label: g.percentages["Good"] for label, g in report.groups.items()}
        assert good == {"Public Sector": 67, "Service": 71, "Industrial": 77}

    def test_gender_good_percentages(self):
        report = distribution(_fixture_records(), "gender")
        good = {label: g.percentages["Good"] for label, g in report.groups.items()}
        assert good == {"Male": 74, "Female": 70}

    def test_counts_always_reported(self):
        report = distribution(_fixture_records(), "sector")
        for group in report.groups.values():
            assert sum(group.counts.values()) == group.total

    def test_groups_sorted_lexicographically(self):
        report = distribution(_fixture_records(), "sector")
        assert list(report.groups) == sorted(report.groups)

    def test_permutation_invariance(self):
        records = _fixture_records()
        shuffled = list(records)
        random.Random(9).shuffle(shuffled)
        assert distribution(records, "sector").to_dict() == distribution(shuffled, "sector").to_dict()


class TestDistributionContract:
    def test_empty_match_is_error(self):
        with pytest.raises(EmptyReportError):
            distribution(_fixture_records(), "overall", sector="Agriculture")

    def test_unknown_group_by(self):
        with pytest.raises(ValidationError):
            distribution(_fixture_records(), "age")

    def test_filters_narrow_the_population(self):
        report = distribution(_fixture_records(), "overall", sector="Service")
        assert report.groups["overall"].total == 35


class TestCompareStyles:
    def _mk(self, style, good, total):
        records = []
        for i in range(total):
            category = "Good" if i < good else "Bad"
            records.append(RatingRecord(rating_id=f"{style}{i}", category=category, style=style))
        return records

    def test_delta_in_percentage_points(self):
        records = self._mk("zero_shot", 50, 100) + self._mk("optimized", 72, 100)
        comparison = compare_styles(records)
        assert comparison.good_delta == 22

    def test_identical_records_zero_delta(self):
        records = self._mk("zero_shot", 30, 50) + self._mk("optimized", 30, 50)
        assert compare_styles(records).good_delta == 0

    def test_missing_style_side_absent(self):
        comparison = compare_styles(self._mk("optimized", 10, 10))
        assert comparison.zero_shot is None
        assert comparison.good_delta is None


class TestImport:
    def test_fixture_imports_cleanly(self):
        rows, errors = import_ratings_csv(FIXTURE_CSV.read_text("utf-8"))
        assert len(rows) == 100
        assert errors == []

    def test_invalid_category_rejected_per_row(self):
        text = "category,sector,gender,style,module\nOK,Service,Male,zero_shot,discovery\nGood,Service,Male,optimized,discovery\n"
        rows, errors = import_ratings_csv(text)
        assert len(rows) == 1
        assert len(errors) == 1
        assert errors[0][0] == 2

    def test_wrong_header_rejected(self):
        with pytest.raises(ValidationError):
            import_ratings_csv("a,b,c\n1,2,3\n")


class TestRatingsStore:
    def test_append_and_load(self, tmp_path):
        store = RatingsStore(tmp_path / "ratings.csv")
        first = store.record_rating(category="Good", sector="Service", style="optimized", module="discovery")
        second = store.record_rating(category="NA", sector="Service")
        assert first.rating_id == "rt0001"
        assert second.rating_id == "rt0002"
        loaded = store.load_records()
        assert [r.category for r in loaded] == ["Good", "NA"]

    def test_hundred_imports(self, tmp_path):
        store = RatingsStore(tmp_path / "ratings.csv")
        rows, _ = import_ratings_csv(FIXTURE_CSV.read_text("utf-8"))
        for row in rows:
            store.record_rating(**row)
        assert len(store.load_records()) == 100


def test_text_rendering_is_aligned(tmp_path):
    report = distribution(_fixture_records(), "sector")
    text = render_distribution_text(report)
    lines = text.splitlines()
    assert lines[0].startswith("group")
    assert len(lines) == 4
