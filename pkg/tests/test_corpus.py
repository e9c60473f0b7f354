import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyponli import corpus
from hyponli.corpus import (
    THREE_WAY, TWO_WAY, ColumnSpec, ConfigError, FieldMap, IngestError,
    Label, LabelScheme, NLIInstance, majority_label, random_split,
    read_jsonl, read_tsv, remap_joci_ordinal, write_jsonl,
)

from conftest import make_instances

NATIVE = corpus.FIELD_MAP_PRESETS["native"]
SNLI = corpus.FIELD_MAP_PRESETS["snli"]


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestSchemes:
    def test_by_name_and_index(self):
        assert THREE_WAY.by_name("neutral").index == 1
        assert THREE_WAY.by_index(2).name == "contradiction"

    def test_size_bounds(self):
        with pytest.raises(ConfigError):
            LabelScheme((Label("a", 0),), "one")
        with pytest.raises(ConfigError):
            LabelScheme(tuple(Label(f"l{i}", i) for i in range(4)), "four")

    def test_duplicate_names_rejected(self):
        with pytest.raises(ConfigError):
            LabelScheme((Label("a", 0), Label("a", 1)), "dup")

    def test_instance_validation(self):
        with pytest.raises(IngestError):
            NLIInstance("p", "", THREE_WAY.by_index(0), "x")
        with pytest.raises(IngestError):
            NLIInstance("p", "h", THREE_WAY.by_index(0), "x", ordinal=6)


class TestReadJsonl:
    def test_identity_map(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [json.dumps({"premise": "a", "hypothesis": "b",
                                       "label": "entailment"})])
        instances, skipped = read_jsonl(path, NATIVE, THREE_WAY)
        assert skipped == 0
        assert len(instances) == 1
        assert instances[0].premise == "a"
        assert instances[0].hypothesis == "b"
        assert instances[0].label == THREE_WAY.by_name("entailment")

    def test_no_consensus_label_skipped(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [json.dumps({"sentence1": "a", "sentence2": "b",
                                       "gold_label": "-"})])
        instances, skipped = read_jsonl(path, SNLI, THREE_WAY)
        assert instances == []
        assert skipped == 1

    def test_three_lines_one_skipped(self, tmp_path):
        path = tmp_path / "d.jsonl"
        rows = [
            {"sentence1": "p1", "sentence2": "h1", "gold_label": "entailment"},
            {"sentence1": "p2", "sentence2": "h2", "gold_label": "-"},
            {"sentence1": "p3", "sentence2": "h3", "gold_label": "neutral"},
        ]
        write_lines(path, [json.dumps(r) for r in rows])
        instances, skipped = read_jsonl(path, SNLI, THREE_WAY)
        assert len(instances) == 2
        assert skipped == 1

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [json.dumps({"premise": "a", "hypothesis": "b",
                                       "label": "neutral"}), "{broken"])
        with pytest.raises(IngestError, match="line 2"):
            read_jsonl(path, NATIVE, THREE_WAY)

    def test_missing_mandatory_field_is_config_error(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [json.dumps({"premise": "a", "label": "neutral"})])
        with pytest.raises(ConfigError, match="hypothesis"):
            read_jsonl(path, NATIVE, THREE_WAY)

    def test_optional_fields(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [json.dumps({"premise": "a", "hypothesis": "b",
                                       "label": "neutral", "group": "aware",
                                       "ordinal": 3, "id": "ex-1"})])
        instances, _ = read_jsonl(path, NATIVE, THREE_WAY)
        inst = instances[0]
        assert inst.group_key == "aware"
        assert inst.ordinal == 3
        assert inst.instance_id == "ex-1"

    def test_list_premise_joined_by_space(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [json.dumps({"premise": ["c1", "c2", "c3", "c4"],
                                       "hypothesis": "h", "label": "neutral"})])
        instances, _ = read_jsonl(path, NATIVE, THREE_WAY)
        assert instances[0].premise == "c1 c2 c3 c4"


class TestReadTsv:
    def test_basic_row(self, tmp_path):
        path = tmp_path / "d.tsv"
        write_lines(path, ["a\tb\tentailment"])
        instances, skipped = read_tsv(path, ColumnSpec(0, 1, 2), THREE_WAY)
        assert len(instances) == 1 and skipped == 0
        assert instances[0].hypothesis == "b"

    def test_short_row_names_line(self, tmp_path):
        path = tmp_path / "d.tsv"
        write_lines(path, ["a\tb\tentailment", "a\tb"])
        with pytest.raises(IngestError, match="line 2"):
            read_tsv(path, ColumnSpec(0, 1, 2), THREE_WAY)

    def test_hundred_rows_order_preserved(self, tmp_path):
        path = tmp_path / "d.tsv"
        names = THREE_WAY.names
        write_lines(path, [f"p{i}\th{i}\t{names[i % 3]}" for i in range(100)])
        instances, skipped = read_tsv(path, ColumnSpec(0, 1, 2), THREE_WAY)
        assert len(instances) == 100 and skipped == 0
        assert [inst.hypothesis for inst in instances] == [f"h{i}" for i in range(100)]


class TestJociRemap:
    @pytest.mark.parametrize("ordinal,expected", [
        (1, "contradiction"), (2, "neutral"), (3, "neutral"),
        (4, "neutral"), (5, "entailment"),
    ])
    def test_mapping(self, ordinal, expected):
        inst = NLIInstance("p", "h", THREE_WAY.by_index(0), "x", ordinal=ordinal)
        (out,) = remap_joci_ordinal([inst])
        assert out.label.name == expected
        assert out.ordinal == ordinal

    def test_missing_ordinal_names_instance(self):
        inst = NLIInstance("p", "h", THREE_WAY.by_index(0), "missing-ord")
        with pytest.raises(IngestError, match="missing-ord"):
            remap_joci_ordinal([inst])

    def test_idempotent(self):
        instances = [NLIInstance("p", "h", THREE_WAY.by_index(0), f"i{o}", ordinal=o)
                     for o in (1, 3, 5)]
        once = remap_joci_ordinal(instances)
        twice = remap_joci_ordinal(once)
        assert once == twice


class TestRandomSplit:
    def test_exact_ratios(self):
        instances = make_instances([(f"h{i}", "neutral") for i in range(10)])
        ds = random_split(instances, seed=0, scheme=THREE_WAY)
        sizes = tuple(len(ds.split(s)) for s in ("train", "dev", "test"))
        assert sizes == (8, 1, 1)

    def test_n103_regression(self):
        # floor sizes (82, 10, 10), remainder 1 to train
        instances = make_instances([(f"h{i}", "neutral") for i in range(103)])
        ds = random_split(instances, seed=1, scheme=THREE_WAY)
        sizes = tuple(len(ds.split(s)) for s in ("train", "dev", "test"))
        assert sizes == (83, 10, 10)

    def test_same_seed_identical(self):
        instances = make_instances([(f"h{i}", "neutral") for i in range(37)])
        a = random_split(instances, seed=9, scheme=THREE_WAY)
        b = random_split(instances, seed=9, scheme=THREE_WAY)
        for name in ("train", "dev", "test"):
            assert a.split(name) == b.split(name)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            random_split([], seed=0)

    def test_bad_ratios_rejected(self):
        instances = make_instances([("h", "neutral")])
        with pytest.raises(ValueError):
            random_split(instances, ratios=(0.5, 0.2, 0.2), seed=0)

    @given(n=st.integers(1, 300), seed=st.integers(0, 2**16))
    @settings(max_examples=60, deadline=None)
    def test_partition(self, n, seed):
        instances = make_instances([(f"h{i}", "neutral") for i in range(n)])
        ds = random_split(instances, seed=seed, scheme=THREE_WAY)
        ids = [inst.instance_id for name in ("train", "dev", "test")
               for inst in ds.split(name)]
        assert len(ids) == n
        assert set(ids) == {f"i{i}" for i in range(n)}


class TestMajorityLabel:
    def test_simple(self):
        instances = make_instances([("a", "entailment"), ("b", "entailment"),
                                    ("c", "neutral")])
        assert majority_label(instances).name == "entailment"

    def test_tie_takes_lowest_index(self):
        instances = make_instances([("a", "entailment"), ("b", "neutral")])
        assert majority_label(instances).name == "entailment"
        instances = make_instances([("a", "contradiction"), ("b", "neutral")])
        assert majority_label(instances).name == "neutral"

    def test_counted_on_generated_prior(self):
        rng = np.random.default_rng(42)
        names = THREE_WAY.names
        draws = rng.choice(3, size=10_000, p=[0.5, 0.3, 0.2])
        instances = make_instances([(f"h{i}", names[d]) for i, d in enumerate(draws)])
        # independent count
        expected = max(range(3), key=lambda i: (np.sum(draws == i), -i))
        assert majority_label(instances).index == expected

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            majority_label([])


class TestRoundTrip:
    def test_jsonl_round_trip(self, tmp_path):
        instances = [
            NLIInstance("p one", "h one", THREE_WAY.by_index(0), "a", group_key="g1"),
            NLIInstance("p two", "h two", THREE_WAY.by_index(2), "b", ordinal=4),
            NLIInstance("p", "h été", THREE_WAY.by_index(1), "c"),
        ]
        path = tmp_path / "rt.jsonl"
        write_jsonl(instances, path)
        back, skipped = read_jsonl(path, NATIVE, THREE_WAY)
        assert skipped == 0
        assert back == instances
