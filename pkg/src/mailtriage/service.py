"""HTTP agent-assist service: classify, record answers, history, relearn.

Endpoints (JSON bodies; see docs/api.md):

    GET  /health                liveness plus model presence
    GET  /model                 active model version and provenance
    POST /classify              top-5 answer proposals for a text or span
    POST /answers               record an agent-confirmed classification
    GET  /history/{sender}      prior mails, chosen answers, elapsed time
    GET  /categories            registry with learnability flags
    POST /categories            upsert one category
    POST /admin/relearn         rebuild the model and swap it atomically

The active model lives in a ModelSlot. Classification reads one immutable
snapshot per request; relearn builds off to the side and publishes the new
(model, relevancy vector, mode) tuple in a single assignment, so concurrent
requests always see exactly one version. At most one relearn runs at a time.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import features, learners, stp
from .corpus import (
    DEFAULT_MIN_DOCS,
    Category,
    CorpusStore,
    Document,
    parse_timestamp,
)
from .errors import (
    MailTriageError,
    NotTrainableError,
    StoreError,
    UnknownCategoryError,
)
from .features import RelevancyVector
from .learners import ClassifierSpec, TrainedModel

BUNDLE_FORMAT_VERSION = 1

logger = logging.getLogger(__name__)


class RelearnBusyError(StoreError):
    """Another relearn already holds the single relearn slot."""


@dataclass(frozen=True)
class ModelBundle:
    """Everything classification needs, versioned as one unit."""

    version: int
    mode: str
    rv: RelevancyVector
    model: TrainedModel

    def to_bytes(self) -> bytes:
        doc = {
            "format_version": BUNDLE_FORMAT_VERSION,
            "version": self.version,
            "mode": self.mode,
            "rv": features.rv_to_json(self.rv),
            "model": json.loads(learners.save(self.model).decode("utf-8")),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModelBundle":
        try:
            doc = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise StoreError(f"model bundle is not valid JSON: {exc}") from exc
        if doc.get("format_version") != BUNDLE_FORMAT_VERSION:
            raise StoreError(
                f"unsupported model bundle format_version {doc.get('format_version')!r}"
            )
        rv = features.rv_from_json(doc["rv"])
        model = learners.load(
            json.dumps(doc["model"], sort_keys=True, separators=(",", ":")).encode("utf-8"),
            expected_fingerprint=rv.fingerprint,
        )
        return cls(version=int(doc["version"]), mode=doc["mode"], rv=rv, model=model)

    def save(self, path: Path | str) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(self.to_bytes())
        tmp.replace(path)

    @classmethod
    def load(cls, path: Path | str) -> "ModelBundle":
        path = Path(path)
        if not path.exists():
            raise StoreError(f"model bundle not found: {path}")
        return cls.from_bytes(path.read_bytes())


class ModelSlot:
    """Atomic holder for the active bundle; readers get one snapshot."""

    def __init__(self) -> None:
        self._bundle: ModelBundle | None = None
        self._swap_lock = threading.Lock()

    def get(self) -> ModelBundle | None:
        return self._bundle  # single reference read: atomic under the GIL

    def swap(self, bundle: ModelBundle) -> None:
        with self._swap_lock:
            self._bundle = bundle

    @property
    def version(self) -> int:
        bundle = self._bundle
        return bundle.version if bundle else 0


@dataclass
class ServiceConfig:
    store_dir: str = "./triage-store"
    model_path: str = "./triage-model.json"
    host: str = "127.0.0.1"
    port: int = 8033
    mode: str = "combined"
    family: str = learners.FAMILY_SVM
    min_docs: int = DEFAULT_MIN_DOCS
    k: int = 100
    seed: int = 0
    console_dir: str | None = None
    relearn_interval_seconds: float | None = None

    @classmethod
    def from_file(cls, path: Path | str | None, env: dict[str, str] | None = None) -> "ServiceConfig":
        """File keys overridden by MAILTRIAGE_* environment variables."""
        values: dict[str, Any] = {}
        if path is not None:
            values.update(json.loads(Path(path).read_text(encoding="utf-8")))
        env = os.environ if env is None else env
        for name in cls.__dataclass_fields__:
            env_key = f"MAILTRIAGE_{name.upper()}"
            if env_key in env:
                values[name] = env[env_key]
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        cfg = cls(**known)
        cfg.port = int(cfg.port)
        cfg.min_docs = int(cfg.min_docs)
        cfg.k = int(cfg.k)
        cfg.seed = int(cfg.seed)
        if cfg.relearn_interval_seconds is not None:
            cfg.relearn_interval_seconds = float(cfg.relearn_interval_seconds)
        return cfg


# -- request/response bodies -------------------------------------------------


class ClassifyRequest(BaseModel):
    text: str
    span: tuple[int, int] | None = None


class ProposalBody(BaseModel):
    category_id: str
    name: str
    answer_template: str
    score: float
    rank: int


class ClassifyResponse(BaseModel):
    model_version: int
    mode: str
    fallback_used: bool
    proposals: list[ProposalBody]


class InlineDocument(BaseModel):
    id: str | None = None
    sender: str
    received_at: str
    text: str


class SubmitAnswerRequest(BaseModel):
    doc: InlineDocument | None = None
    doc_id: str | None = None
    category: str
    edited_text: str | None = None


class CategoryBody(BaseModel):
    id: str
    name: str
    answer_template: str
    active: bool = True


class RelearnRequest(BaseModel):
    min_docs: int | None = None
    mode: str | None = None
    family: str | None = None
    seed: int | None = None
    hyperparams: dict[str, Any] = Field(default_factory=dict)


def build_bundle(
    store: CorpusStore,
    mode: str,
    spec: ClassifierSpec,
    min_docs: int,
    k: int,
    version: int,
    resources: stp.PipelineResources | None = None,
) -> ModelBundle:
    """Offline build: snapshot -> relevancy vector -> fit."""
    resources = resources or stp.PipelineResources.default()
    snapshot = store.snapshot(min_docs=min_docs)
    extractions = [
        (stp.extract(d.text, mode, resources), d.category_id)
        for d in snapshot.documents
    ]
    rv = features.build_relevancy(extractions, k=k)
    X = features.vectorize_many([e for e, _ in extractions], rv)
    labels = [c for _, c in extractions]
    model = learners.fit(spec, X, labels, rv_fingerprint=rv.fingerprint, version=version)
    return ModelBundle(version=version, mode=mode, rv=rv, model=model)


@asynccontextmanager
async def _lifespan(app: FastAPI):
    starter = getattr(app.state, "start_relearn_timer", None)
    if starter is not None:
        starter()
    yield
    stopper = getattr(app.state, "relearn_timer_stop", None)
    if stopper is not None:
        stopper.set()


def create_app(config: ServiceConfig | None = None, store: CorpusStore | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="mailtriage assist service", version="0.1.0", lifespan=_lifespan)

    try:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )
    except ImportError:  # pragma: no cover - cors ships with fastapi
        pass

    state = app.state
    state.config = config
    state.store = store if store is not None else CorpusStore(config.store_dir)
    state.resources = stp.PipelineResources.default()
    state.slot = ModelSlot()
    state.relearn_lock = threading.Lock()

    model_path = Path(config.model_path)
    if model_path.exists():
        state.slot.swap(ModelBundle.load(model_path))

    if config.console_dir and Path(config.console_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.console_dir, html=True), name="ui")

    # -- endpoints -----------------------------------------------------------

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "model_loaded": state.slot.get() is not None}

    @app.get("/model")
    def model_info() -> dict:
        bundle = state.slot.get()
        if bundle is None:
            raise HTTPException(status_code=503, detail="no active model; run a relearn first")
        return {
            "version": bundle.version,
            "mode": bundle.mode,
            "family": bundle.model.spec.family,
            "rv_fingerprint": bundle.rv.fingerprint,
            "n_features": bundle.model.n_features,
            "n_categories": len(bundle.model.categories),
        }

    @app.post("/classify", response_model=ClassifyResponse)
    def classify(request: ClassifyRequest) -> ClassifyResponse:
        bundle = state.slot.get()  # one snapshot for the whole request
        if bundle is None:
            raise HTTPException(status_code=503, detail="no active model; run a relearn first")
        text = request.text
        if request.span is not None:
            start, end = request.span
            if not (0 <= start < end <= len(text)):
                raise HTTPException(
                    status_code=400,
                    detail=f"span [{start}, {end}) out of bounds for text of length {len(text)}",
                )
            text = text[start:end]
        if not text.strip():
            raise HTTPException(status_code=400, detail="text is empty")
        extraction = stp.extract(text, bundle.mode, state.resources)
        bits = features.vectorize(extraction, bundle.rv)
        prediction = learners.predict(bundle.model, bits)
        registry = state.store.categories
        proposals = []
        for rank, (cat_id, score) in enumerate(prediction.ranking[:5], start=1):
            cat = registry.get(cat_id)
            proposals.append(
                ProposalBody(
                    category_id=cat_id,
                    name=cat.name if cat else cat_id,
                    answer_template=cat.answer_template if cat else "",
                    score=score,
                    rank=rank,
                )
            )
        return ClassifyResponse(
            model_version=bundle.version,
            mode=bundle.mode,
            fallback_used=extraction.fallback_used,
            proposals=proposals,
        )

    @app.post("/answers")
    def submit_answer(request: SubmitAnswerRequest) -> dict:
        if (request.doc is None) == (request.doc_id is None):
            raise HTTPException(status_code=400, detail="provide exactly one of doc or doc_id")
        if request.doc_id is not None:
            doc = state.store.get(request.doc_id)
            if doc is None:
                raise HTTPException(status_code=404, detail=f"unknown document {request.doc_id!r}")
        else:
            body = request.doc
            try:
                doc = Document(
                    id=body.id or "inline",
                    sender=body.sender,
                    received_at=parse_timestamp(body.received_at),
                    text=body.text,
                )
            except StoreError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            record_id = state.store.record_classification(
                doc, request.category, edited_text=request.edited_text
            )
        except UnknownCategoryError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except StoreError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"record_id": record_id}

    @app.get("/history/{sender}")
    def history(sender: str) -> dict:
        entries = []
        for entry in state.store.history(sender):
            entries.append(
                {
                    "doc_id": entry.document.id,
                    "received_at": entry.document.received_at.isoformat().replace("+00:00", "Z"),
                    "text": entry.document.text,
                    "chosen_category": entry.chosen_category,
                    "edited_text": entry.edited_text,
                    "answered_at": (
                        entry.answered_at.isoformat().replace("+00:00", "Z")
                        if entry.answered_at
                        else None
                    ),
                    "elapsed_seconds": entry.elapsed_seconds,
                }
            )
        return {"sender": sender, "entries": entries}

    @app.get("/categories")
    def list_categories() -> dict:
        store: CorpusStore = state.store
        try:
            stats = store.stats(min_docs=state.config.min_docs)
            counts = stats.per_category
            learnable = stats.learnable
        except MailTriageError:
            counts, learnable = {}, frozenset()
        return {
            "min_docs": state.config.min_docs,
            "categories": [
                {
                    "id": c.id,
                    "name": c.name,
                    "answer_template": c.answer_template,
                    "active": c.active,
                    "doc_count": counts.get(c.id, 0),
                    "learnable": c.id in learnable,
                }
                for c in store.categories.values()
            ],
        }

    @app.post("/categories")
    def upsert_category(body: CategoryBody) -> dict:
        try:
            state.store.upsert_category(
                Category(
                    id=body.id,
                    name=body.name,
                    answer_template=body.answer_template,
                    active=body.active,
                )
            )
        except StoreError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            stats = state.store.stats(min_docs=state.config.min_docs)
            doc_count = stats.per_category.get(body.id, 0)
            learnable = body.id in stats.learnable
        except MailTriageError:
            doc_count, learnable = 0, False
        return {
            "id": body.id,
            "doc_count": doc_count,
            "learnable": learnable,
            "note": None if learnable else (
                f"not yet learnable: needs {state.config.min_docs} classified documents"
            ),
        }

    def perform_relearn(request: RelearnRequest) -> dict:
        """Offline build plus atomic swap; raises package errors on failure."""
        if not state.relearn_lock.acquire(blocking=False):
            raise RelearnBusyError("a relearn is already running")
        try:
            cfg: ServiceConfig = state.config
            mode = request.mode or cfg.mode
            family = request.family or cfg.family
            min_docs = request.min_docs if request.min_docs is not None else cfg.min_docs
            seed = request.seed if request.seed is not None else cfg.seed
            if mode not in stp.MODES:
                raise StoreError(f"unknown mode {mode!r}")
            old_version = state.slot.version
            spec = ClassifierSpec(family=family, hyperparams=request.hyperparams, seed=seed)
            bundle = build_bundle(
                state.store,
                mode=mode,
                spec=spec,
                min_docs=min_docs,
                k=cfg.k,
                version=old_version + 1,
                resources=state.resources,
            )
            bundle.save(cfg.model_path)
            state.slot.swap(bundle)
            return {
                "version": bundle.version,
                "previous_version": old_version,
                "mode": bundle.mode,
                "family": family,
                "n_training_docs": len(state.store.snapshot(min_docs=min_docs).documents),
            }
        finally:
            state.relearn_lock.release()

    @app.post("/admin/relearn")
    def relearn(request: RelearnRequest) -> dict:
        try:
            return perform_relearn(request)
        except RelearnBusyError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except NotTrainableError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except StoreError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except MailTriageError as exc:
            # training failed: report, keep the old model active
            raise HTTPException(status_code=500, detail=f"relearn failed: {exc}") from exc

    # optional interval relearning, off unless configured; the lifespan hook
    # starts the thread on app startup and stops it on shutdown
    if config.relearn_interval_seconds and config.relearn_interval_seconds > 0:
        stop_event = threading.Event()
        state.relearn_timer_stop = stop_event

        def timer_loop() -> None:
            while not stop_event.wait(config.relearn_interval_seconds):
                try:
                    perform_relearn(RelearnRequest())
                except MailTriageError as exc:
                    logger.warning("scheduled relearn skipped: %s", exc)

        state.relearn_timer = threading.Thread(
            target=timer_loop, name="relearn-timer", daemon=True
        )
        state.start_relearn_timer = state.relearn_timer.start

    return app


def run_server(config: ServiceConfig) -> None:  # pragma: no cover - thin wrapper
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
