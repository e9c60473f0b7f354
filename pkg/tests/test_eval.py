import numpy as np
import pytest

from hyponli import evaluate
from hyponli.corpus import THREE_WAY, TWO_WAY, Dataset, NLIInstance, majority_label
from hyponli.evaluate import (
    accuracy, build_report, confusion_sample, constant_prediction_check,
    delta_report, fmt2, per_class_accuracy, per_group_accuracy,
    premise_invariance_audit, report_csv, report_markdown,
)
from hyponli.model import ModelConfig, ModelParameters, predict
from hyponli.text import Vocabulary, seeded_random_embeddings, tokenize

from conftest import make_instances

E, N, C = THREE_WAY.labels


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy([E, N, C], [E, N, C]) == 100.0

    def test_two_of_three(self):
        assert accuracy([E, N, C], [E, N, N]) == pytest.approx(66.6667, abs=1e-3)

    def test_counting_oracle_on_1000(self):
        rng = np.random.default_rng(0)
        gold = [THREE_WAY.by_index(int(i)) for i in rng.integers(0, 3, 1000)]
        preds = [THREE_WAY.by_index(int(i)) for i in rng.integers(0, 3, 1000)]
        expected = 100.0 * sum(p == g for p, g in zip(preds, gold)) / 1000
        assert accuracy(preds, gold) == expected

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy([E], [E, N])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy([], [])


class TestDeltaReport:
    @pytest.mark.parametrize("hyp,maj,abs_exp,pct_exp", [
        (86.21, 65.27, 20.94, 32.08),   # recast proto-role dev row
        (69.17, 33.82, 35.35, 104.52),  # elicited 3-way dev row
        (50.21, 50.21, 0.00, 0.00),     # pronoun-recast dev row
    ])
    def test_published_rows(self, hyp, maj, abs_exp, pct_exp):
        abs_delta, pct_delta = delta_report(hyp, maj)
        assert abs_delta == pytest.approx(abs_exp, abs=0.005)
        assert pct_delta == pytest.approx(pct_exp, abs=0.005)

    def test_zero_majority_flags_pct(self):
        abs_delta, pct_delta = delta_report(42.0, 0.0)
        assert abs_delta == 42.0
        assert pct_delta is None

    def test_negative_majority_rejected(self):
        with pytest.raises(ValueError):
            delta_report(10.0, -1.0)


class TestPerClass:
    def test_perfect_single_class(self):
        assert per_class_accuracy([E, E], [E, E]) == {E: 100.0}

    def test_hand_tally_two_class(self):
        gold = [E, E, E, N, N]
        preds = [E, N, E, N, E]
        out = per_class_accuracy(preds, gold)
        assert out[E] == pytest.approx(100.0 * 2 / 3)
        assert out[N] == pytest.approx(50.0)

    def test_weighted_mean_equals_global(self):
        rng = np.random.default_rng(3)
        gold = [THREE_WAY.by_index(int(i)) for i in rng.integers(0, 3, 200)]
        preds = [THREE_WAY.by_index(int(i)) for i in rng.integers(0, 3, 200)]
        per = per_class_accuracy(preds, gold)
        weights = {lab: sum(1 for g in gold if g == lab) for lab in per}
        weighted = sum(per[lab] * weights[lab] for lab in per) / len(gold)
        assert weighted == pytest.approx(accuracy(preds, gold), abs=1e-9)


class TestPerGroup:
    def test_single_group_matches_global(self):
        gold = [E, N, E, C]
        preds = [E, N, N, C]
        out = per_group_accuracy(preds, gold, ["g"] * 4)
        hyp, maj, pct = out["g"]
        assert hyp == accuracy(preds, gold)
        assert maj == 50.0  # E is the within-group majority (tie with lower index)

    def test_two_known_groups(self):
        gold = [E, E, N, N, N, E]
        preds = [E, N, N, N, E, E]
        groups = ["a", "a", "a", "b", "b", "b"]
        out = per_group_accuracy(preds, gold, groups)
        hyp_a, maj_a, pct_a = out["a"]
        assert hyp_a == pytest.approx(100.0 * 2 / 3)
        assert maj_a == pytest.approx(100.0 * 2 / 3)  # E majority in group a
        assert pct_a == pytest.approx(0.0)
        hyp_b, maj_b, _ = out["b"]
        assert hyp_b == pytest.approx(100.0 * 2 / 3)
        assert maj_b == pytest.approx(100.0 * 2 / 3)  # N majority in group b

    def test_global_mode_uses_train_majority(self):
        gold = [E, N, N]
        preds = [E, N, N]
        out = per_group_accuracy(preds, gold, ["g"] * 3, mode="global",
                                 train_majority=E)
        _, maj, _ = out["g"]
        assert maj == pytest.approx(100.0 / 3)

    def test_global_mode_requires_majority(self):
        with pytest.raises(ValueError):
            per_group_accuracy([E], [E], ["g"], mode="global")


class TestConstantPrediction:
    def test_all_same(self):
        assert constant_prediction_check([E, E, E]) is True

    def test_mixed(self):
        assert constant_prediction_check([E, N]) is False

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            constant_prediction_check([])


def trained_params(seed=0):
    vocab = Vocabulary.from_texts(["alpha beta gamma delta epsilon"])
    table = seeded_random_embeddings(vocab, 6, seed=seed)
    cfg = ModelConfig("bag", embedding_dim=6, hidden_dim=2, mlp_hidden=4,
                      n_labels=3, seed=seed)
    return ModelParameters.init(cfg, table, vocab, THREE_WAY)


class TestPremiseInvariance:
    def test_any_model_is_invariant(self):
        params = trained_params()
        instances = make_instances([("alpha beta", "neutral"),
                                    ("gamma", "entailment"),
                                    ("delta epsilon alpha", "contradiction")])
        ds = Dataset("d", THREE_WAY, {"dev": instances})
        assert premise_invariance_audit(params, ds, perturbation_seed=1) is True

    def test_empty_premises_replacement(self):
        params = trained_params()
        instances = [NLIInstance("", "alpha", THREE_WAY.by_index(0), "i0")]
        ds = Dataset("d", THREE_WAY, {"dev": instances})
        assert premise_invariance_audit(params, ds, perturbation_seed=2) is True

    def test_hypothesis_perturbation_changes_predictions(self):
        # witness: the same audit applied to hypotheses is NOT invariant
        params = trained_params()
        a = predict(tokenize("alpha beta"), params)
        b = predict(tokenize("gamma delta epsilon"), params)
        assert not np.array_equal(a.logits, b.logits)


class TestConfusionSample:
    def big_inputs(self):
        rng = np.random.default_rng(7)
        gold = [TWO_WAY.by_index(int(i)) for i in rng.integers(0, 2, 600)]
        preds = [TWO_WAY.by_index(int(i)) for i in rng.integers(0, 2, 600)]
        ids = [f"x{i}" for i in range(600)]
        return preds, gold, ids

    def test_four_cells_times_fifty(self):
        preds, gold, ids = self.big_inputs()
        sample = confusion_sample(preds, gold, ids, n_per_cell=50, seed=1)
        assert len(sample.cells) == 4
        assert all(len(v) == 50 for v in sample.cells.values())
        total = sum(len(v) for v in sample.cells.values())
        assert total == 200

    def test_small_cell_capped(self):
        gold = [E, E, E, N]
        preds = [E, E, N, N]
        ids = ["a", "b", "c", "d"]
        sample = confusion_sample(preds, gold, ids, n_per_cell=50, seed=0)
        assert sample.cells[(E, E)] == ["a", "b"]
        assert sample.cells[(E, N)] == ["c"]
        assert sample.cells[(N, N)] == ["d"]

    def test_deterministic(self):
        preds, gold, ids = self.big_inputs()
        a = confusion_sample(preds, gold, ids, n_per_cell=10, seed=9)
        b = confusion_sample(preds, gold, ids, n_per_cell=10, seed=9)
        assert a.cells == b.cells

    def test_cells_partition_correctly(self):
        preds, gold, ids = self.big_inputs()
        truth = {iid: (g, p) for iid, g, p in zip(ids, gold, preds)}
        sample = confusion_sample(preds, gold, ids, n_per_cell=25, seed=3)
        for (g, p), members in sample.cells.items():
            assert len(set(members)) == len(members)  # without replacement
            for iid in members:
                assert truth[iid] == (g, p)


class TestFmt2:
    @pytest.mark.parametrize("value,expected", [
        (0.005, "0.01"), (-0.005, "-0.01"), (2.675, "2.68"),
        (32.081, "32.08"), (104.524, "104.52"), (None, "n/a"), (0.0, "0.00"),
    ])
    def test_round_half_away_from_zero(self, value, expected):
        assert fmt2(value) == expected


class TestReports:
    def setup_report(self):
        instances = make_instances([
            ("a", "entailment"), ("b", "entailment"), ("c", "neutral"),
            ("d", "contradiction"),
        ])
        preds = [E, E, N, N]
        maj = majority_label(instances)
        return build_report("dev", preds, instances, maj)

    def test_delta_invariant(self):
        rep = self.setup_report()
        assert rep.abs_delta == pytest.approx(rep.hyp_only_acc - rep.maj_acc, abs=1e-9)
        assert rep.hyp_only_acc == 75.0
        assert rep.maj_acc == 50.0
        assert rep.pct_delta == pytest.approx(50.0)

    def test_per_class_contents(self):
        rep = self.setup_report()
        assert rep.per_class[E] == (100.0, 50.0)
        assert rep.per_class[N] == (100.0, 25.0)
        assert rep.per_class[C] == (0.0, 25.0)

    def test_majority_mode_note_when_differs(self):
        # train majority differs from the split's own mode
        instances = make_instances([("a", "neutral"), ("b", "neutral"),
                                    ("c", "entailment")])
        rep = build_report("dev", [N, N, E], instances, train_majority=E)
        assert rep.maj_acc == pytest.approx(100.0 / 3)
        assert rep.split_mode_acc == pytest.approx(200.0 / 3)
        assert rep.notes

    def test_markdown_and_csv_render(self):
        rep = self.setup_report()
        md = report_markdown([rep], config_lines=["seed=0"])
        assert "| dev | 75.00 | 50.00 | 25.00 | 50.00 |" in md
        assert "seed=0" in md
        csv_text = report_csv([rep])
        assert csv_text.startswith("split,scope,key,")
        assert "dev,overall,,75.00,50.00,25.00,50.00,false" in csv_text

    def test_group_report(self):
        instances = [
            NLIInstance("p", "h1", E, "1", group_key="aware"),
            NLIInstance("p", "h2", E, "2", group_key="aware"),
            NLIInstance("p", "h3", N, "3", group_key="moved"),
            NLIInstance("p", "h4", N, "4", group_key="moved"),
        ]
        rep = build_report("dev", [E, N, N, N], instances, train_majority=E)
        assert rep.per_group is not None
        hyp, maj, _ = rep.per_group["aware"]
        assert hyp == 50.0 and maj == 100.0
        hyp, maj, pct = rep.per_group["moved"]
        assert hyp == 100.0 and maj == 100.0 and pct == 0.0
