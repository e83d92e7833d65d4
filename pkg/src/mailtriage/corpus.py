"""File-backed corpus store: documents, category registry, agent records.

Layout on disk is one directory holding two JSONL files:

    documents.jsonl    append-only log of documents (ingested and
                       agent-confirmed), one JSON object per line
    categories.jsonl   the category registry, rewritten on every edit

Document line schema: {"id", "sender", "received_at" (RFC 3339), "text",
"category" (str|null), "source"}; agent-confirmed lines additionally carry
"edited_text" and "answered_at". Registry line schema: {"id", "name",
"answer_template", "active"}. Everything is UTF-8.

Concurrency: one writer, many readers. Writes are serialized behind a lock;
snapshots are immutable tuples and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import (
    EmptyCorpusError,
    NotTrainableError,
    StoreError,
    UnknownCategoryError,
)

SOURCE_INGESTED = "ingested"
SOURCE_AGENT_CONFIRMED = "agent_confirmed"

DEFAULT_MIN_DOCS = 30


@dataclass(frozen=True)
class Document:
    id: str
    sender: str
    received_at: datetime
    text: str
    category_id: str | None = None
    source: str = SOURCE_INGESTED


@dataclass(frozen=True)
class Category:
    id: str
    name: str
    answer_template: str
    active: bool = True


@dataclass(frozen=True)
class CorpusStats:
    total_docs: int
    per_category: dict[str, int]
    learnable: frozenset[str]
    coverage: float
    min_docs: int
    unlabeled: int


@dataclass(frozen=True)
class TrainingSnapshot:
    """Immutable view of the labeled documents in learnable categories."""

    documents: tuple[Document, ...]
    min_docs: int
    learnable: frozenset[str]

    def __len__(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class IngestError:
    line: int
    message: str


@dataclass(frozen=True)
class IngestReport:
    accepted: int
    errors: tuple[IngestError, ...] = ()


@dataclass(frozen=True)
class HistoryEntry:
    document: Document
    chosen_category: str | None
    edited_text: str | None
    answered_at: datetime | None

    @property
    def elapsed_seconds(self) -> float | None:
        if self.answered_at is None:
            return None
        return (self.answered_at - self.document.received_at).total_seconds()


def parse_timestamp(value: str) -> datetime:
    """RFC 3339 parse, normalized to UTC."""
    try:
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except (ValueError, AttributeError, TypeError) as exc:
        raise StoreError(f"bad timestamp {value!r}: {exc}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _doc_to_line(doc: Document, extras: dict | None = None) -> str:
    record = {
        "id": doc.id,
        "sender": doc.sender,
        "received_at": format_timestamp(doc.received_at),
        "text": doc.text,
        "category": doc.category_id,
        "source": doc.source,
    }
    if extras:
        record.update(extras)
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


class CorpusStore:
    """Append-only document store plus category registry in one directory."""

    def __init__(self, root: Path | str, clock: Callable[[], datetime] | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._documents_path = self.root / "documents.jsonl"
        self._categories_path = self.root / "categories.jsonl"
        self._clock = clock or (lambda: datetime.now(timezone.utc))
        self._lock = threading.RLock()
        self._docs: dict[str, Document] = {}
        self._extras: dict[str, dict] = {}
        self._categories: dict[str, Category] = {}
        self._load()

    # -- loading -----------------------------------------------------------

    def _load(self) -> None:
        if self._categories_path.exists():
            for lineno, line in enumerate(
                self._categories_path.read_text(encoding="utf-8").splitlines(), 1
            ):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                    cat = Category(
                        id=str(raw["id"]),
                        name=str(raw["name"]),
                        answer_template=str(raw["answer_template"]),
                        active=bool(raw.get("active", True)),
                    )
                except (json.JSONDecodeError, KeyError) as exc:
                    raise StoreError(
                        f"{self._categories_path}:{lineno}: bad registry line: {exc}"
                    ) from exc
                self._categories[cat.id] = cat
        if self._documents_path.exists():
            for lineno, line in enumerate(
                self._documents_path.read_text(encoding="utf-8").splitlines(), 1
            ):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                    doc, extras = self._doc_from_record(raw)
                except (json.JSONDecodeError, KeyError, StoreError) as exc:
                    raise StoreError(
                        f"{self._documents_path}:{lineno}: bad document line: {exc}"
                    ) from exc
                self._docs[doc.id] = doc
                if extras:
                    self._extras[doc.id] = extras

    @staticmethod
    def _doc_from_record(raw: dict) -> tuple[Document, dict]:
        doc = Document(
            id=str(raw["id"]),
            sender=str(raw["sender"]),
            received_at=parse_timestamp(raw["received_at"]),
            text=str(raw["text"]),
            category_id=raw.get("category"),
            source=raw.get("source", SOURCE_INGESTED),
        )
        extras = {}
        if raw.get("edited_text") is not None:
            extras["edited_text"] = raw["edited_text"]
        if raw.get("answered_at") is not None:
            extras["answered_at"] = raw["answered_at"]
        return doc, extras

    # -- registry ----------------------------------------------------------

    @property
    def categories(self) -> dict[str, Category]:
        return dict(self._categories)

    def get_category(self, category_id: str) -> Category:
        try:
            return self._categories[category_id]
        except KeyError:
            raise UnknownCategoryError(f"unknown category {category_id!r}") from None

    def upsert_category(self, category: Category) -> Category:
        if not category.id:
            raise StoreError("category id must be non-empty")
        if category.active and not category.answer_template.strip():
            raise StoreError(
                f"active category {category.id!r} needs a non-empty answer template"
            )
        with self._lock:
            self._categories[category.id] = category
            self._write_registry()
        return category

    def load_categories(self, path: Path | str) -> int:
        """Import a registry JSONL file; returns the number of upserts."""
        count = 0
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                cat = Category(
                    id=str(raw["id"]),
                    name=str(raw["name"]),
                    answer_template=str(raw["answer_template"]),
                    active=bool(raw.get("active", True)),
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise StoreError(f"{path}:{lineno}: bad registry line: {exc}") from exc
            self.upsert_category(cat)
            count += 1
        return count

    def _write_registry(self) -> None:
        lines = [
            json.dumps(
                {
                    "id": c.id,
                    "name": c.name,
                    "answer_template": c.answer_template,
                    "active": c.active,
                },
                ensure_ascii=False,
                sort_keys=True,
            )
            for c in self._categories.values()
        ]
        tmp = self._categories_path.with_suffix(".jsonl.tmp")
        tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        tmp.replace(self._categories_path)

    # -- ingestion ---------------------------------------------------------

    def ingest(self, path: Path | str, format: str = "jsonl") -> IngestReport:
        """Load documents from a file; invalid rows are rejected one by one.

        Valid rows are appended to the store; the report carries the accepted
        count plus one error per rejected row with its line number. Duplicate
        ids (against the store or earlier rows) are rejected, which makes
        re-ingesting the same file a no-op.
        """
        path = Path(path)
        if not path.exists():
            raise StoreError(f"input file not found: {path}")
        if format == "jsonl":
            rows = self._iter_jsonl(path)
        elif format == "csv":
            rows = self._iter_csv(path)
        else:
            raise StoreError(f"unknown ingest format {format!r}; expected jsonl or csv")

        accepted = 0
        errors: list[IngestError] = []
        with self._lock:
            with self._documents_path.open("a", encoding="utf-8") as fh:
                for lineno, raw, parse_error in rows:
                    if parse_error is not None:
                        errors.append(IngestError(lineno, parse_error))
                        continue
                    try:
                        doc = self._validate_new(raw)
                    except StoreError as exc:
                        errors.append(IngestError(lineno, str(exc)))
                        continue
                    fh.write(_doc_to_line(doc) + "\n")
                    self._docs[doc.id] = doc
                    accepted += 1
        return IngestReport(accepted=accepted, errors=tuple(errors))

    @staticmethod
    def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict | None, str | None]]:
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    yield lineno, json.loads(line), None
                except json.JSONDecodeError as exc:
                    yield lineno, None, f"malformed JSON: {exc}"

    @staticmethod
    def _iter_csv(path: Path) -> Iterator[tuple[int, dict | None, str | None]]:
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"id", "sender", "received_at", "text"}
            if reader.fieldnames is None or not required <= set(reader.fieldnames):
                raise StoreError(
                    f"csv header must contain {sorted(required)}; got {reader.fieldnames}"
                )
            for lineno, row in enumerate(reader, 2):  # header is line 1
                record = dict(row)
                if not record.get("category"):
                    record["category"] = None
                yield lineno, record, None

    def _validate_new(self, raw: dict) -> Document:
        for key in ("id", "sender", "received_at", "text"):
            if raw.get(key) in (None, ""):
                raise StoreError(f"missing field {key!r}")
        doc_id = str(raw["id"])
        if doc_id in self._docs:
            raise StoreError(f"duplicate document id {doc_id!r}")
        text = str(raw["text"])
        if not text.strip():
            raise StoreError("text is empty after trimming")
        category = raw.get("category")
        if category is not None:
            category = str(category)
            if category not in self._categories:
                raise UnknownCategoryError(f"unknown category {category!r}")
        return Document(
            id=doc_id,
            sender=str(raw["sender"]),
            received_at=parse_timestamp(str(raw["received_at"])),
            text=text,
            category_id=category,
            source=str(raw.get("source", SOURCE_INGESTED)),
        )

    # -- statistics and snapshots -------------------------------------------

    def stats(self, min_docs: int = DEFAULT_MIN_DOCS) -> CorpusStats:
        if not self._docs:
            raise EmptyCorpusError("the corpus store holds no documents")
        per_category: dict[str, int] = {}
        unlabeled = 0
        for doc in self._docs.values():
            if doc.category_id is None:
                unlabeled += 1
            else:
                per_category[doc.category_id] = per_category.get(doc.category_id, 0) + 1
        learnable = frozenset(
            c for c, count in per_category.items() if count >= min_docs
        )
        covered = sum(per_category[c] for c in learnable)
        total = len(self._docs)
        return CorpusStats(
            total_docs=total,
            per_category=per_category,
            learnable=learnable,
            coverage=covered / total,
            min_docs=min_docs,
            unlabeled=unlabeled,
        )

    def snapshot(self, min_docs: int = DEFAULT_MIN_DOCS) -> TrainingSnapshot:
        """Training view: labeled documents of learnable categories, by id."""
        stats = self.stats(min_docs)
        if len(stats.learnable) < 2:
            raise NotTrainableError(
                f"need at least 2 learnable categories (>= {min_docs} docs); "
                f"have {len(stats.learnable)}"
            )
        docs = tuple(
            sorted(
                (
                    d
                    for d in self._docs.values()
                    if d.category_id in stats.learnable
                ),
                key=lambda d: d.id,
            )
        )
        return TrainingSnapshot(documents=docs, min_docs=min_docs, learnable=stats.learnable)

    # -- agent records -------------------------------------------------------

    def record_classification(
        self,
        doc: Document,
        chosen: str,
        edited_text: str | None = None,
        answered_at: datetime | None = None,
    ) -> str:
        """Append one agent-confirmed classification; returns the record id.

        The stored text is the original request text; edited answer text is
        kept alongside for audit but never used for training.
        """
        if chosen not in self._categories:
            raise UnknownCategoryError(f"unknown category {chosen!r}")
        if not doc.text.strip():
            raise StoreError("cannot record a classification for empty text")
        with self._lock:
            record_id = self._next_record_id()
            stored = Document(
                id=record_id,
                sender=doc.sender,
                received_at=doc.received_at,
                text=doc.text,
                category_id=chosen,
                source=SOURCE_AGENT_CONFIRMED,
            )
            extras = {
                "answered_at": format_timestamp(answered_at or self._clock()),
            }
            if edited_text is not None:
                extras["edited_text"] = edited_text
            line = _doc_to_line(stored, extras)
            with self._documents_path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
            self._docs[record_id] = stored
            self._extras[record_id] = extras
        return record_id

    def _next_record_id(self) -> str:
        n = len(self._docs) + 1
        while f"rec-{n:06d}" in self._docs:
            n += 1
        return f"rec-{n:06d}"

    # -- views ----------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._docs)

    def get(self, doc_id: str) -> Document | None:
        return self._docs.get(doc_id)

    def documents(self) -> tuple[Document, ...]:
        return tuple(self._docs.values())

    def history(self, sender: str) -> list[HistoryEntry]:
        """Prior documents of one sender, newest first, with answers."""
        entries = []
        for doc in self._docs.values():
            if doc.sender != sender:
                continue
            extras = self._extras.get(doc.id, {})
            answered_at = extras.get("answered_at")
            entries.append(
                HistoryEntry(
                    document=doc,
                    chosen_category=(
                        doc.category_id if doc.source == SOURCE_AGENT_CONFIRMED else None
                    ),
                    edited_text=extras.get("edited_text"),
                    answered_at=parse_timestamp(answered_at) if answered_at else None,
                )
            )
        entries.sort(key=lambda e: (e.document.received_at, e.document.id), reverse=True)
        return entries

    def compact(self) -> None:
        """Rewrite the document log in memory order (drops nothing)."""
        with self._lock:
            tmp = self._documents_path.with_suffix(".jsonl.tmp")
            with tmp.open("w", encoding="utf-8") as fh:
                for doc in self._docs.values():
                    fh.write(_doc_to_line(doc, self._extras.get(doc.id)) + "\n")
            tmp.replace(self._documents_path)


def write_documents_jsonl(docs: Iterable[Document], path: Path | str) -> int:
    """Write documents in the ingest JSONL schema; returns the line count."""
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(_doc_to_line(doc) + "\n")
            count += 1
    return count


def write_registry_jsonl(categories: Iterable[Category], path: Path | str) -> int:
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for cat in categories:
            fh.write(
                json.dumps(
                    {
                        "id": cat.id,
                        "name": cat.name,
                        "answer_template": cat.answer_template,
                        "active": cat.active,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )
            count += 1
    return count
