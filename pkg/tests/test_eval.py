"""Fold planning, grid evaluation, report rendering, synthetic corpora."""

from __future__ import annotations

import json
from collections import Counter
from datetime import datetime, timedelta, timezone

import pytest

from mailtriage.corpus import Document
from mailtriage.errors import EvalError
from mailtriage.evaluate import (
    EvalReport,
    format_percent,
    make_folds,
    overall_performance,
    render_report,
    report_to_json,
    run_grid,
)
from mailtriage.learners import ClassifierSpec
from mailtriage.synth import PRESETS, synth_corpus

T0 = datetime(2000, 3, 1, tzinfo=timezone.utc)


def docs_for(counts: dict[str, int], text: str = "text egal") -> list[Document]:
    docs = []
    i = 0
    for cat, n in counts.items():
        for _ in range(n):
            docs.append(
                Document(
                    id=f"d-{i:05d}",
                    sender="x@example.org",
                    received_at=T0 + timedelta(minutes=i),
                    text=text,
                    category_id=cat,
                )
            )
            i += 1
    return docs


class TestMakeFolds:
    def test_ten_docs_one_category_ten_folds(self):
        plan = make_folds(docs_for({"a": 10}), n_folds=10, seed=0)
        fold_sizes = Counter(plan.assignment.values())
        assert sorted(fold_sizes.values()) == [1] * 10

    def test_balanced_arithmetic(self):
        counts = {f"c{i:02d}": 100 for i in range(47)}
        plan = make_folds(docs_for(counts), n_folds=10, seed=1)
        fold_sizes = Counter(plan.assignment.values())
        assert all(size == 470 for size in fold_sizes.values())
        # stratification: exactly 10 docs per category per fold
        docs = docs_for(counts)
        per = Counter((d.category_id, plan.fold_of(d.id)) for d in docs)
        assert all(v == 10 for v in per.values())

    def test_same_seed_identical(self):
        docs = docs_for({"a": 33, "b": 17})
        p1 = make_folds(docs, 10, seed=9)
        p2 = make_folds(docs, 10, seed=9)
        assert p1.assignment == p2.assignment

    def test_document_order_irrelevant(self):
        docs = docs_for({"a": 33, "b": 17})
        p1 = make_folds(docs, 10, seed=9)
        p2 = make_folds(list(reversed(docs)), 10, seed=9)
        assert p1.assignment == p2.assignment

    def test_per_category_sizes_differ_by_at_most_one(self):
        docs = docs_for({"a": 23, "b": 7, "c": 41})
        plan = make_folds(docs, n_folds=5, seed=3)
        for cat in ("a", "b", "c"):
            sizes = Counter(
                plan.fold_of(d.id) for d in docs if d.category_id == cat
            )
            counts = [sizes.get(f, 0) for f in range(5)]
            assert max(counts) - min(counts) <= 1

    def test_small_category_flagged(self):
        plan = make_folds(docs_for({"a": 3, "b": 30}), n_folds=10, seed=0)
        assert any("'a'" in w for w in plan.warnings)


SPECS = [
    ClassifierSpec("naive_bayes", seed=1),
    ClassifierSpec("knn", seed=1),
]


class TestRunGrid:
    def test_best5_is_one_with_five_categories(self, tiny_grid_report):
        report = tiny_grid_report
        for cell in report.cells.values():
            assert cell.error is None
            assert cell.best5 == 1.0

    def test_best5_at_least_best1(self, tiny_grid_report):
        for cell in tiny_grid_report.cells.values():
            assert cell.best5 >= cell.best1

    def test_rv_fingerprints_differ_per_fold(self, tiny_grid_report):
        for mode, fps in tiny_grid_report.rv_fingerprints.items():
            assert len(fps) == tiny_grid_report.n_folds
            assert len(set(fps)) == len(fps)

    def test_beats_majority_baseline(self, tiny_grid_report):
        report = tiny_grid_report
        for cell in report.cells.values():
            assert cell.best1 > report.majority_baseline

    def test_unknown_mode_rejected(self):
        corpus = synth_corpus("tiny", seed=2)
        with pytest.raises(EvalError, match="mode"):
            run_grid(corpus.documents, ["telepathy"], SPECS, n_folds=3, seed=0, min_docs=10)

    def test_no_labeled_docs_rejected(self):
        docs = [
            Document("x", "s", T0, "text", category_id=None),
        ]
        with pytest.raises(EvalError):
            run_grid(docs, ["morphana"], SPECS, n_folds=3, seed=0)

    def test_cell_failure_does_not_abort_run(self):
        corpus = synth_corpus("tiny", seed=2)
        bad = ClassifierSpec("lvq", {"rate": 0.999999}, seed=1)  # invalid rate range guard
        specs = [ClassifierSpec("naive_bayes", seed=1), ClassifierSpec("lvq", {"rate": 2.0}, seed=1)]
        report = run_grid(corpus.documents, ["morphana"], specs, n_folds=3, seed=0, min_docs=10)
        assert report.cells[("morphana", "lvq")].error is not None
        assert report.cells[("morphana", "naive_bayes")].best1 is not None


@pytest.fixture(scope="module")
def tiny_grid_report() -> EvalReport:
    corpus = synth_corpus("tiny", seed=2)
    return run_grid(
        corpus.documents, ["morphana", "heuristics"], SPECS, n_folds=3, seed=0, min_docs=10
    )


class TestNoLeakage:
    def test_noising_a_test_fold_keeps_its_rv_fingerprint(self):
        """The relevancy vector of a fold must not depend on that fold's texts."""
        corpus = synth_corpus("tiny", seed=4)
        docs = list(corpus.documents)
        specs = [ClassifierSpec("naive_bayes", seed=1)]
        base = run_grid(docs, ["morphana"], specs, n_folds=3, seed=5, min_docs=10)
        plan = make_folds(docs, n_folds=3, seed=5)
        for fold in range(3):
            noised = [
                Document(
                    d.id,
                    d.sender,
                    d.received_at,
                    "rauschen kauderwelsch blubb" if plan.fold_of(d.id) == fold else d.text,
                    d.category_id,
                )
                for d in docs
            ]
            rerun = run_grid(noised, ["morphana"], specs, n_folds=3, seed=5, min_docs=10)
            assert (
                rerun.rv_fingerprints["morphana"][fold]
                == base.rv_fingerprints["morphana"][fold]
            )


class TestOverallIdentity:
    def test_documented_values(self):
        assert overall_performance(0.94, 0.78) == pytest.approx(0.7332)
        assert format_percent(overall_performance(0.94, 0.78)) == "73%"

    def test_exact_product(self, tiny_grid_report):
        report = tiny_grid_report
        cell = report.cells[report.designated]
        assert report.overall_best5 == report.coverage * cell.best5


class TestRendering:
    def test_json_round_trips_and_is_byte_stable(self, tiny_grid_report):
        a = render_report(tiny_grid_report, "json")
        b = render_report(tiny_grid_report, "json")
        assert a == b
        doc = json.loads(a)
        assert doc["format_version"] == 1
        assert "grid" in doc and "morphana" in doc["grid"]

    def test_text_table_shape(self, tiny_grid_report):
        text = render_report(tiny_grid_report, "text-table").decode()
        assert "MorphAna" in text
        assert "STP-Heuristics" in text
        assert "Best" in text and "Best5" in text
        for family in ("naive_bayes", "knn"):
            assert family in text

    def test_csv(self, tiny_grid_report):
        text = render_report(tiny_grid_report, "csv").decode()
        lines = text.strip().splitlines()
        assert lines[0] == "mode,family,best1,best5,error"
        assert len(lines) == 1 + 2 * 2

    def test_unknown_format(self, tiny_grid_report):
        with pytest.raises(EvalError):
            render_report(tiny_grid_report, "pdf")

    def test_percent_formatting(self):
        assert format_percent(0.7332) == "73%"
        assert format_percent(0.945) == "94%"
        assert format_percent(1.0) == "100%"


class TestSynthCorpus:
    def test_unknown_preset(self):
        with pytest.raises(EvalError, match="preset"):
            synth_corpus("gigantic", seed=1)

    def test_deterministic(self):
        a = synth_corpus("tiny", seed=8)
        b = synth_corpus("tiny", seed=8)
        assert [d.text for d in a.documents] == [d.text for d in b.documents]
        assert [d.id for d in a.documents] == [d.id for d in b.documents]

    def test_seeds_differ(self):
        a = synth_corpus("tiny", seed=8)
        b = synth_corpus("tiny", seed=9)
        assert [d.text for d in a.documents] != [d.text for d in b.documents]

    def test_mini_shape(self, mini_corpus):
        counts = Counter(d.category_id for d in mini_corpus.documents)
        preset = PRESETS["mini"]
        learnable = {c for c, n in counts.items() if n >= 30}
        assert len(learnable) == preset.learnable_categories
        assert len(mini_corpus.documents) == preset.learnable_docs + preset.small_docs

    def test_paper_shape_geometry(self, paper_corpus):
        counts = Counter(d.category_id for d in paper_corpus.documents)
        assert len(paper_corpus.documents) == 4777
        assert len(counts) == 74
        learnable = {c for c, n in counts.items() if n >= 30}
        assert len(learnable) == 47
        assert sum(counts[c] for c in learnable) == 4490
        assert all(n >= 10 for n in counts.values())

    def test_paper_shape_word_length(self, paper_corpus):
        assert 55 <= paper_corpus.mean_words <= 65

    def test_timestamps_are_fixed_epoch(self, mini_corpus):
        assert mini_corpus.documents[0].received_at.year == 2000

    def test_all_docs_labeled_and_resolvable(self, mini_corpus):
        cat_ids = {c.id for c in mini_corpus.categories}
        assert all(d.category_id in cat_ids for d in mini_corpus.documents)
