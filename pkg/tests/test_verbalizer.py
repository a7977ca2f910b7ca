from __future__ import annotations

import json
import math

import pytest

from promptrc.verbalizer import (
    VerbalizerError,
    VerbalizerSet,
    VerbalizerTable,
    length_stats,
    load_tables,
    validate_coverage,
    verbalize,
    verbalize_en,
)


class TestVerbalizeEn:
    def test_abbreviation_expansion(self):
        assert verbalize_en("org-has-member") == "organization has member"

    def test_hyphen_split(self):
        assert verbalize_en("has-author") == "has author"

    def test_underscore_split(self):
        assert verbalize_en("no_relation") == "no relation"

    def test_mixed_separators(self):
        assert verbalize_en("birth_place-of") == "birth place of"

    def test_empty_identifier(self):
        with pytest.raises(VerbalizerError):
            verbalize_en("")

    def test_custom_abbreviations(self):
        assert verbalize_en("loc-of", {"loc": "location"}) == "location of"


class TestVerbalize:
    def test_table_lookup(self, demo_tables):
        assert verbalize("has-author", "de", demo_tables) == "hat Autor"

    def test_english_uses_rule(self, demo_tables):
        assert verbalize("has-author", "en", demo_tables) == "has author"
        assert verbalize("has-author", "EN", demo_tables) == "has author"

    def test_missing_table_names_relation_and_language(self, demo_tables):
        with pytest.raises(VerbalizerError) as err:
            verbalize("has-author", "zz", demo_tables)
        assert "has-author" in str(err.value)
        assert "zz" in str(err.value)

    def test_missing_entry_names_relation(self, demo_tables):
        with pytest.raises(VerbalizerError) as err:
            verbalize("unmapped-rel", "de", demo_tables)
        assert "unmapped-rel" in str(err.value)

    def test_english_table_entry_wins_over_rule(self):
        tables = VerbalizerSet(
            tables={"en": VerbalizerTable("en", {"has-author": "written by"})}
        )
        assert verbalize("has-author", "en", tables) == "written by"
        assert verbalize("other-rel", "en", tables) == "other rel"

    def test_deterministic(self, demo_tables):
        results = {verbalize("has-genre", "sv", demo_tables) for _ in range(5)}
        assert len(results) == 1


class TestTables:
    def test_injectivity_fails_fast(self):
        with pytest.raises(VerbalizerError) as err:
            VerbalizerTable("de", {"rel-a": "gleich", "rel-b": "gleich"})
        assert "one-to-one" in str(err.value)

    def test_empty_verbalization_rejected(self):
        with pytest.raises(VerbalizerError):
            VerbalizerTable("de", {"rel-a": ""})

    def test_load_tables_preserves_unicode_and_case(self, tmp_path):
        (tmp_path / "de.json").write_text(
            json.dumps({"birth-place": "Geburtsort", "has-author": "hat Autor"}),
            encoding="utf-8",
        )
        (tmp_path / "sv.json").write_text(
            json.dumps({"has-author": "har författare"}), encoding="utf-8"
        )
        tables = load_tables(tmp_path)
        assert tables.languages() == ("de", "sv")
        assert verbalize("birth-place", "de", tables) == "Geburtsort"
        assert verbalize("has-author", "sv", tables) == "har författare"

    def test_load_tables_missing_directory(self, tmp_path):
        with pytest.raises(VerbalizerError):
            load_tables(tmp_path / "absent")

    def test_coverage_total_on_relation_set(self, demo_tables):
        relations = {"de": {"has-author", "has-genre"}, "en": {"anything-goes"}}
        validate_coverage(demo_tables, relations)

    def test_coverage_failure_lists_missing(self, demo_tables):
        with pytest.raises(VerbalizerError) as err:
            validate_coverage(demo_tables, {"de": {"not-in-table"}})
        assert "de:not-in-table" in str(err.value)


class TestLengthStats:
    def test_three_entry_fixture_matches_hand_formula(self):
        table = VerbalizerTable("en", {
            "r1": "alpha",
            "r2": "alpha beta",
            "r3": "alpha beta gamma delta",
        })
        stats = length_stats(VerbalizerSet(tables={"en": table}))
        lengths = [1, 2, 4]
        mean = sum(lengths) / 3
        std = math.sqrt(sum((x - mean) ** 2 for x in lengths) / 3)
        assert stats["en"].mean == pytest.approx(mean)
        assert stats["en"].std == pytest.approx(std)
        assert stats["en"].count == 3
        assert stats["ALL"].mean == pytest.approx(mean)

    def test_pooled_entry_combines_tables(self, demo_tables):
        stats = length_stats(demo_tables)
        assert stats["ALL"].count == stats["de"].count + stats["sv"].count

    def test_custom_tokenizer(self):
        table = VerbalizerTable("en", {"r1": "ab"})
        stats = length_stats(VerbalizerSet(tables={"en": table}), tokenizer=list)
        assert stats["en"].mean == 2

    def test_empty_set_errors(self):
        with pytest.raises(VerbalizerError):
            length_stats(VerbalizerSet())
