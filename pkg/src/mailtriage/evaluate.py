"""Stratified cross-validation over the preprocessing-mode x family grid.

Per (mode, family) cell and fold: the relevancy vector is rebuilt from the
training split only (test texts never influence feature selection), a model
is fitted, and held-out documents are scored. Best1 counts a hit when the
gold category tops the ranking; Best5 when it appears in the top five (all
categories when fewer than five exist). The report also carries the overall
identity: coverage times the designated cell's Best5.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import features, learners, stp
from .corpus import Document
from .errors import EvalError, MailTriageError
from .learners import ClassifierSpec
from .stp import PipelineResources

MODE_LABELS = {
    "morphana": "MorphAna",
    "heuristics": "STP-Heuristics",
    "combined": "Combined",
}


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    n_folds: int
    assignment: dict[str, int]
    warnings: tuple[str, ...] = ()

    def fold_of(self, doc_id: str) -> int:
        return self.assignment[doc_id]


def make_folds(docs: Sequence[Document], n_folds: int = 10, seed: int = 0) -> FoldPlan:
    """Stratified fold assignment, deterministic in (docs, n_folds, seed).

    Per category the fold sizes differ by at most one; categories smaller
    than n_folds are flagged but still assigned best-effort. Document order
    does not matter: ids are sorted before the seeded shuffle.
    """
    if n_folds < 2:
        raise EvalError(f"n_folds must be >= 2, got {n_folds}")
    by_category: dict[str, list[str]] = {}
    for doc in docs:
        if doc.category_id is None:
            continue
        by_category.setdefault(doc.category_id, []).append(doc.id)

    rng = np.random.default_rng(seed)
    assignment: dict[str, int] = {}
    warnings: list[str] = []
    offset = 0
    for category in sorted(by_category):
        ids = sorted(by_category[category])
        if len(ids) < n_folds:
            warnings.append(
                f"category {category!r} has {len(ids)} documents for {n_folds} folds"
            )
        perm = rng.permutation(len(ids))
        for slot, idx in enumerate(perm):
            assignment[ids[int(idx)]] = (offset + slot) % n_folds
        offset = (offset + len(ids)) % n_folds
    return FoldPlan(seed=seed, n_folds=n_folds, assignment=assignment, warnings=tuple(warnings))


@dataclass
class CellResult:
    best1: float | None
    best5: float | None
    per_fold: list[dict[str, Any]] = field(default_factory=list)
    error: str | None = None


@dataclass
class EvalReport:
    seed: int
    n_folds: int
    modes: tuple[str, ...]
    families: tuple[str, ...]
    k: int
    min_docs: int
    n_docs: int
    coverage: float
    majority_baseline: float
    cells: dict[tuple[str, str], CellResult]
    rv_fingerprints: dict[str, tuple[str, ...]]
    designated: tuple[str, str]
    config_fingerprint: str
    warnings: tuple[str, ...] = ()

    @property
    def overall_best5(self) -> float | None:
        cell = self.cells.get(self.designated)
        if cell is None or cell.best5 is None:
            return None
        return self.coverage * cell.best5


def overall_performance(coverage: float, best5: float) -> float:
    """The headline identity: share of mail answered correctly in the top 5."""
    return coverage * best5


def format_percent(fraction: float) -> str:
    return f"{round(fraction * 100):d}%"


def _config_fingerprint(payload: Mapping[str, Any]) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def run_grid(
    docs: Sequence[Document],
    modes: Sequence[str],
    specs: Sequence[ClassifierSpec],
    n_folds: int = 10,
    seed: int = 0,
    k: int = 100,
    min_docs: int = 30,
    resources: PipelineResources | None = None,
) -> EvalReport:
    """Cross-validate every (mode, family) cell on the learnable documents.

    A fold failure aborts only its cell (the error is recorded in the cell);
    other cells still run. Relevancy vectors are shared across families
    within a (mode, fold) pair since they depend on the training split only.
    """
    if resources is None:
        resources = PipelineResources.default()
    for mode in modes:
        if mode not in stp.MODES:
            raise EvalError(f"unknown preprocessing mode {mode!r}")
    specs = [learners.resolve_spec(s) for s in specs]
    families = tuple(s.family for s in specs)
    if len(set(families)) != len(families):
        raise EvalError("duplicate classifier family in grid specs")

    labeled = [d for d in docs if d.category_id is not None]
    if not labeled:
        raise EvalError("no labeled documents to evaluate")
    per_category: dict[str, int] = {}
    for doc in labeled:
        per_category[doc.category_id] = per_category.get(doc.category_id, 0) + 1
    learnable = {c for c, n in per_category.items() if n >= min_docs}
    if len(learnable) < 2:
        raise EvalError(
            f"need at least 2 categories with >= {min_docs} documents, have {len(learnable)}"
        )
    eligible = [d for d in labeled if d.category_id in learnable]
    coverage = sum(per_category[c] for c in learnable) / len(docs)
    majority = max(per_category[c] for c in learnable) / len(eligible)

    plan = make_folds(eligible, n_folds=n_folds, seed=seed)

    config_fingerprint = _config_fingerprint(
        {
            "modes": list(modes),
            "specs": [
                {"family": s.family, "hyperparams": s.hyperparams, "seed": s.seed}
                for s in specs
            ],
            "n_folds": n_folds,
            "seed": seed,
            "k": k,
            "min_docs": min_docs,
            "n_docs": len(eligible),
        }
    )

    cells: dict[tuple[str, str], CellResult] = {
        (mode, s.family): CellResult(best1=None, best5=None) for mode in modes for s in specs
    }
    rv_fingerprints: dict[str, list[str]] = {mode: [] for mode in modes}

    for mode in modes:
        extractions = {d.id: stp.extract(d.text, mode, resources) for d in eligible}
        dead: set[str] = set()  # families whose cell already failed in this mode
        for fold in range(n_folds):
            train = [d for d in eligible if plan.fold_of(d.id) != fold]
            test = [d for d in eligible if plan.fold_of(d.id) == fold]
            try:
                rv = features.build_relevancy(
                    [(extractions[d.id], d.category_id) for d in train], k=k
                )
            except MailTriageError as exc:
                for s in specs:
                    cells[(mode, s.family)].error = f"fold {fold}: {exc}"
                rv_fingerprints[mode].append("")
                continue
            rv_fingerprints[mode].append(rv.fingerprint)
            X_train = features.vectorize_many([extractions[d.id] for d in train], rv)
            X_test = features.vectorize_many([extractions[d.id] for d in test], rv)
            y_train = [d.category_id for d in train]
            gold = [d.category_id for d in test]
            for spec in specs:
                cell = cells[(mode, spec.family)]
                if spec.family in dead:
                    continue
                try:
                    model = learners.fit(spec, X_train, y_train, rv_fingerprint=rv.fingerprint)
                    preds = learners.predict_many(model, X_test)
                except MailTriageError as exc:
                    cell.error = f"fold {fold}: {exc}"
                    dead.add(spec.family)
                    continue
                hits1 = sum(1 for p, g in zip(preds, gold) if p.best == g)
                hits5 = sum(1 for p, g in zip(preds, gold) if g in p.top(5))
                cell.per_fold.append(
                    {
                        "fold": fold,
                        "n_test": len(test),
                        "hits1": hits1,
                        "hits5": hits5,
                        "rv_fingerprint": rv.fingerprint,
                    }
                )

    for cell in cells.values():
        if cell.error is None and cell.per_fold:
            n = sum(f["n_test"] for f in cell.per_fold)
            cell.best1 = sum(f["hits1"] for f in cell.per_fold) / n
            cell.best5 = sum(f["hits5"] for f in cell.per_fold) / n

    designated = ("combined", learners.FAMILY_SVM)
    if designated[0] not in modes or designated[1] not in families:
        designated = (modes[0], families[0])

    return EvalReport(
        seed=seed,
        n_folds=n_folds,
        modes=tuple(modes),
        families=families,
        k=k,
        min_docs=min_docs,
        n_docs=len(eligible),
        coverage=coverage,
        majority_baseline=majority,
        cells=cells,
        rv_fingerprints={m: tuple(v) for m, v in rv_fingerprints.items()},
        designated=designated,
        config_fingerprint=config_fingerprint,
        warnings=plan.warnings,
    )


# ---------------------------------------------------------------------------
# Rendering (byte-stable given equal reports)
# ---------------------------------------------------------------------------


def report_to_json(report: EvalReport) -> dict[str, Any]:
    grid: dict[str, dict[str, Any]] = {}
    for (mode, family), cell in report.cells.items():
        grid.setdefault(mode, {})[family] = {
            "best1": cell.best1,
            "best5": cell.best5,
            "error": cell.error,
            "per_fold": cell.per_fold,
        }
    overall = report.overall_best5
    return {
        "format_version": 1,
        "seed": report.seed,
        "n_folds": report.n_folds,
        "modes": list(report.modes),
        "families": list(report.families),
        "k": report.k,
        "min_docs": report.min_docs,
        "n_docs": report.n_docs,
        "coverage": report.coverage,
        "majority_baseline": report.majority_baseline,
        "designated": {"mode": report.designated[0], "family": report.designated[1]},
        "overall_best5": overall,
        "overall_percent": format_percent(overall) if overall is not None else None,
        "grid": grid,
        "rv_fingerprints": {m: list(v) for m, v in report.rv_fingerprints.items()},
        "config_fingerprint": report.config_fingerprint,
        "warnings": list(report.warnings),
    }


def render_report(report: EvalReport, format: str = "text-table") -> bytes:
    if format == "json":
        return (
            json.dumps(report_to_json(report), sort_keys=True, separators=(",", ":"))
            + "\n"
        ).encode("utf-8")
    if format == "csv":
        lines = ["mode,family,best1,best5,error"]
        for mode in report.modes:
            for family in report.families:
                cell = report.cells[(mode, family)]
                lines.append(
                    ",".join(
                        [
                            mode,
                            family,
                            _num(cell.best1),
                            _num(cell.best5),
                            (cell.error or "").replace(",", ";"),
                        ]
                    )
                )
        return ("\n".join(lines) + "\n").encode("utf-8")
    if format == "text-table":
        return _render_table(report).encode("utf-8")
    raise EvalError(f"unknown report format {format!r}")


def _num(value: float | None) -> str:
    return "" if value is None else f"{100 * value:.2f}"


def _cellstr(value: float | None, error: str | None) -> str:
    if error is not None:
        return "ERR"
    return "-" if value is None else f"{100 * value:.2f}"


def _render_table(report: EvalReport) -> str:
    name_w = max(18, max((len(f) for f in report.families), default=0) + 2)
    mode_w = 16
    header1 = "SML algorithm".ljust(name_w) + "|"
    header2 = " ".ljust(name_w) + "|"
    for mode in report.modes:
        label = MODE_LABELS.get(mode, mode)
        header1 += f" {label:<{mode_w}}|"
        header2 += f" {'Best':>7} {'Best5':>7} |"
    sep = "-" * len(header2)
    lines = [header1, header2, sep]
    for family in report.families:
        row = family.ljust(name_w) + "|"
        for mode in report.modes:
            cell = report.cells[(mode, family)]
            row += f" {_cellstr(cell.best1, cell.error):>7} {_cellstr(cell.best5, cell.error):>7} |"
        lines.append(row)
    lines.append(sep)
    lines.append(
        f"docs: {report.n_docs}   folds: {report.n_folds}   seed: {report.seed}   "
        f"coverage: {100 * report.coverage:.1f}%   majority baseline: "
        f"{100 * report.majority_baseline:.2f}"
    )
    overall = report.overall_best5
    if overall is not None:
        cell = report.cells[report.designated]
        lines.append(
            f"overall: coverage x best5 [{report.designated[0]}/{report.designated[1]}] = "
            f"{report.coverage:.4g} x {cell.best5:.4g} = {overall:.4f} -> {format_percent(overall)}"
        )
    for warning in report.warnings:
        lines.append(f"warning: {warning}")
    return "\n".join(lines) + "\n"
