"""Assist-service endpoint tests over a live in-process app."""

from __future__ import annotations

import concurrent.futures
import json
import threading

from fastapi.testclient import TestClient

from mailtriage.corpus import Category, CorpusStore, write_documents_jsonl, write_registry_jsonl
from mailtriage.service import ModelBundle, ServiceConfig, build_bundle, create_app
from mailtriage.synth import synth_corpus

GARBLED = (
    "Wie mache ich zum mein Programm total deinstalieren, und wieder neu "
    "instalierem, mit, wen Sie mir senden Version 4.0 ??????????????"
)


def make_service(tmp_path, with_model: bool = True, family: str = "naive_bayes"):
    corpus = synth_corpus("tiny", seed=6)
    store = CorpusStore(tmp_path / "store")
    reg = tmp_path / "cats.jsonl"
    docs = tmp_path / "docs.jsonl"
    write_registry_jsonl(corpus.categories, reg)
    write_documents_jsonl(corpus.documents, docs)
    store.load_categories(reg)
    store.ingest(docs)
    config = ServiceConfig(
        store_dir=str(tmp_path / "store"),
        model_path=str(tmp_path / "model.json"),
        mode="combined",
        family=family,
        min_docs=30,
        seed=1,
    )
    app = create_app(config, store=store)
    client = TestClient(app)
    if with_model:
        response = client.post("/admin/relearn", json={})
        assert response.status_code == 200, response.text
    return client, store, app


class TestHealthAndModel:
    def test_health_without_model(self, tmp_path):
        client, _, _ = make_service(tmp_path, with_model=False)
        body = client.get("/health").json()
        assert body == {"status": "ok", "model_loaded": False}

    def test_model_info_after_relearn(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        body = client.get("/model").json()
        assert body["version"] == 1
        assert body["mode"] == "combined"
        assert body["family"] == "naive_bayes"
        assert body["n_categories"] == 5

    def test_model_503_without_model(self, tmp_path):
        client, _, _ = make_service(tmp_path, with_model=False)
        assert client.get("/model").status_code == 503


class TestClassify:
    def test_exactly_five_proposals_on_five_category_model(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        body = client.post("/classify", json={"text": "warum geht das nicht?"}).json()
        assert len(body["proposals"]) == 5
        assert [p["rank"] for p in body["proposals"]] == [1, 2, 3, 4, 5]
        scores = [p["score"] for p in body["proposals"]]
        assert scores == sorted(scores, reverse=True)
        assert all(p["answer_template"] for p in body["proposals"])

    def test_span_equal_to_full_text_gives_identical_proposals(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        text = "warum startet das programm nicht?"
        whole = client.post("/classify", json={"text": text}).json()
        spanned = client.post(
            "/classify", json={"text": text, "span": [0, len(text)]}
        ).json()
        assert whole["proposals"] == spanned["proposals"]

    def test_span_classifies_only_the_span(self, tmp_path):
        client, store, app = make_service(tmp_path)
        corpus = synth_corpus("tiny", seed=6)
        kw_a = corpus.documents[0].text.split()[0]
        text = f"unrelated preamble. {kw_a} geht nicht."
        start = text.index(kw_a)
        spanned = client.post(
            "/classify", json={"text": text, "span": [start, len(text)]}
        ).json()
        direct = client.post("/classify", json={"text": text[start:]}).json()
        assert spanned["proposals"] == direct["proposals"]

    def test_empty_text_400(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        assert client.post("/classify", json={"text": "   "}).status_code == 400

    def test_bad_span_400(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        response = client.post("/classify", json={"text": "kurz", "span": [2, 99]})
        assert response.status_code == 400

    def test_no_model_503(self, tmp_path):
        client, _, _ = make_service(tmp_path, with_model=False)
        assert client.post("/classify", json={"text": "hallo"}).status_code == 503

    def test_reinstall_fixture_category_among_proposals(self, tmp_path):
        """A model whose training texts carry the garbled mail's misspellings
        must propose the matching category; oracle is a direct predict call."""
        store = CorpusStore(tmp_path / "store")
        cats = [
            Category("delete-reinstall", "Software / Delete & Reinstall 4.0", "Bitte neu installieren."),
            Category("zugang", "Zugang / Login", "Bitte Zugangsdaten prüfen."),
        ]
        for c in cats:
            store.upsert_category(c)
        from datetime import datetime, timedelta, timezone

        t0 = datetime(2000, 3, 1, tzinfo=timezone.utc)
        from mailtriage.corpus import Document

        reinstall_texts = [
            "ich will mein programm deinstalieren und neu instalierem version 4.0",
            "wie kann ich alles deinstalieren? das programm klemmt",
            "bitte neu instalierem, version kaputt",
        ]
        login_texts = [
            "mein zugang geht nicht, kennwort falsch",
            "warum klappt der login nicht?",
            "kennwort vergessen, zugang gesperrt",
        ]
        i = 0
        for k in range(12):
            for text, cat in ((reinstall_texts[k % 3], "delete-reinstall"), (login_texts[k % 3], "zugang")):
                store.record_classification(
                    Document(f"x{i}", "k@example.org", t0 + timedelta(minutes=i), text),
                    cat,
                )
                i += 1
        config = ServiceConfig(
            store_dir=str(tmp_path / "store"),
            model_path=str(tmp_path / "model.json"),
            mode="combined",
            family="naive_bayes",
            min_docs=10,
            seed=1,
        )
        app = create_app(config, store=store)
        client = TestClient(app)
        assert client.post("/admin/relearn", json={}).status_code == 200
        body = client.post("/classify", json={"text": GARBLED}).json()
        proposed = [p["category_id"] for p in body["proposals"]]
        assert proposed[0] == "delete-reinstall"

        # oracle: the same ranking straight from the model
        from mailtriage import features, learners, stp

        bundle = ModelBundle.load(config.model_path)
        extraction = stp.extract(GARBLED, bundle.mode)
        bits = features.vectorize(extraction, bundle.rv)
        assert learners.predict(bundle.model, bits).best == "delete-reinstall"

    def test_classify_is_read_only(self, tmp_path):
        client, store, _ = make_service(tmp_path)
        before = len(store)
        for _ in range(20):
            client.post("/classify", json={"text": "warum geht das nicht?"})
        assert len(store) == before


class TestAnswers:
    def test_submit_inline_doc(self, tmp_path):
        client, store, _ = make_service(tmp_path)
        cat = next(iter(store.categories))
        response = client.post(
            "/answers",
            json={
                "doc": {
                    "sender": "kunde@example.org",
                    "received_at": "2000-03-02T10:00:00Z",
                    "text": "mein text bleibt wie er ist",
                },
                "category": cat,
                "edited_text": "Hallo, danke für Ihre Anfrage.",
            },
        )
        assert response.status_code == 200
        rid = response.json()["record_id"]
        stored = store.get(rid)
        assert stored.text == "mein text bleibt wie er ist"
        assert stored.category_id == cat

    def test_submit_by_doc_id(self, tmp_path):
        client, store, _ = make_service(tmp_path)
        doc = store.documents()[0]
        cat = next(iter(store.categories))
        response = client.post("/answers", json={"doc_id": doc.id, "category": cat})
        assert response.status_code == 200
        rid = response.json()["record_id"]
        assert store.get(rid).text == doc.text

    def test_unknown_category_404(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        response = client.post(
            "/answers",
            json={
                "doc": {
                    "sender": "a@b",
                    "received_at": "2000-03-02T10:00:00Z",
                    "text": "text",
                },
                "category": "phantom",
            },
        )
        assert response.status_code == 404

    def test_unknown_doc_id_404(self, tmp_path):
        client, store, _ = make_service(tmp_path)
        cat = next(iter(store.categories))
        assert (
            client.post("/answers", json={"doc_id": "gibtsnicht", "category": cat}).status_code
            == 404
        )

    def test_doc_and_doc_id_together_400(self, tmp_path):
        client, store, _ = make_service(tmp_path)
        cat = next(iter(store.categories))
        response = client.post(
            "/answers",
            json={
                "doc": {"sender": "a@b", "received_at": "2000-03-02T10:00:00Z", "text": "t"},
                "doc_id": "auch",
                "category": cat,
            },
        )
        assert response.status_code == 400


class TestHistory:
    def test_history_round_trip(self, tmp_path):
        client, store, _ = make_service(tmp_path)
        cat = next(iter(store.categories))
        client.post(
            "/answers",
            json={
                "doc": {
                    "sender": "history@example.org",
                    "received_at": "2000-03-02T10:00:00Z",
                    "text": "erste frage",
                },
                "category": cat,
            },
        )
        body = client.get("/history/history@example.org").json()
        assert body["sender"] == "history@example.org"
        assert len(body["entries"]) == 1
        entry = body["entries"][0]
        assert entry["chosen_category"] == cat
        assert entry["elapsed_seconds"] is not None

    def test_unknown_sender_empty(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        assert client.get("/history/unbekannt@example.org").json()["entries"] == []


class TestCategories:
    def test_list_carries_learnable_flags(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        body = client.get("/categories").json()
        assert body["min_docs"] == 30
        assert len(body["categories"]) == 5
        assert all(c["learnable"] for c in body["categories"])

    def test_new_category_not_yet_learnable(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        response = client.post(
            "/categories",
            json={"id": "frisch", "name": "Frisch", "answer_template": "Vorlage frisch"},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["learnable"] is False
        assert "not yet learnable" in body["note"]

    def test_invalid_category_400(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        response = client.post(
            "/categories", json={"id": "kaputt", "name": "Kaputt", "answer_template": "  "}
        )
        assert response.status_code == 400


class TestRelearn:
    def test_version_increments_and_persists(self, tmp_path):
        client, _, app = make_service(tmp_path)
        response = client.post("/admin/relearn", json={"family": "knn"})
        assert response.status_code == 200
        body = response.json()
        assert body["version"] == 2
        assert body["previous_version"] == 1
        bundle = ModelBundle.load(app.state.config.model_path)
        assert bundle.version == 2
        assert bundle.model.spec.family == "knn"

    def test_not_trainable_409_keeps_old_model(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        response = client.post("/admin/relearn", json={"min_docs": 10_000})
        assert response.status_code == 409
        assert client.get("/model").json()["version"] == 1

    def test_unknown_mode_400(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        assert client.post("/admin/relearn", json={"mode": "psychic"}).status_code == 400

    def test_concurrent_classify_sees_exactly_one_version(self, tmp_path):
        client, _, _ = make_service(tmp_path)
        stop = threading.Event()
        versions = set()
        failures = []

        def classify_loop():
            while not stop.is_set():
                r = client.post("/classify", json={"text": "warum geht das nicht?"})
                if r.status_code != 200:
                    failures.append(r.status_code)
                else:
                    versions.add(r.json()["model_version"])

        with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
            workers = [pool.submit(classify_loop) for _ in range(8)]
            relearn = client.post("/admin/relearn", json={})
            # the swap happened before the relearn response: this one is v2
            after = client.post("/classify", json={"text": "warum geht das nicht?"})
            stop.set()
            for w in workers:
                w.result()
        versions.add(after.json()["model_version"])
        assert relearn.status_code == 200
        assert not failures
        assert versions <= {1, 2}
        assert 2 in versions


class TestSubmitThenRelearn:
    def test_confirmed_doc_joins_training_iff_learnable(self, tmp_path):
        client, store, _ = make_service(tmp_path)
        n_before = client.post("/admin/relearn", json={}).json()["n_training_docs"]
        learnable_cat = next(iter(store.categories))
        client.post(
            "/answers",
            json={
                "doc": {
                    "sender": "a@b",
                    "received_at": "2000-03-02T10:00:00Z",
                    "text": "neue anfrage zum bekannten thema",
                },
                "category": learnable_cat,
            },
        )
        # a fresh category with a single confirmed doc stays out of training
        client.post(
            "/categories",
            json={"id": "jung", "name": "Neu / Jung", "answer_template": "Vorlage jung"},
        )
        client.post(
            "/answers",
            json={
                "doc": {
                    "sender": "a@b",
                    "received_at": "2000-03-02T10:05:00Z",
                    "text": "einzelstück für die junge kategorie",
                },
                "category": "jung",
            },
        )
        n_after = client.post("/admin/relearn", json={}).json()["n_training_docs"]
        assert n_after == n_before + 1


class TestIntervalRelearn:
    def test_timer_relearns_until_shutdown(self, tmp_path):
        import time

        corpus = synth_corpus("tiny", seed=6)
        store = CorpusStore(tmp_path / "store")
        reg = tmp_path / "cats.jsonl"
        docs = tmp_path / "docs.jsonl"
        write_registry_jsonl(corpus.categories, reg)
        write_documents_jsonl(corpus.documents, docs)
        store.load_categories(reg)
        store.ingest(docs)
        config = ServiceConfig(
            store_dir=str(tmp_path / "store"),
            model_path=str(tmp_path / "model.json"),
            family="naive_bayes",
            min_docs=30,
            relearn_interval_seconds=0.2,
        )
        app = create_app(config, store=store)
        with TestClient(app) as client:
            deadline = time.monotonic() + 10.0
            version = 0
            while time.monotonic() < deadline:
                if client.get("/health").json()["model_loaded"]:
                    version = client.get("/model").json()["version"]
                    if version >= 2:
                        break
                time.sleep(0.1)
            assert version >= 2  # the timer built and swapped at least twice
        assert app.state.relearn_timer_stop.is_set()  # shutdown stopped it


class TestBundle:
    def test_bundle_round_trip(self, tmp_path):
        _, store, app = make_service(tmp_path)
        bundle = app.state.slot.get()
        again = ModelBundle.from_bytes(bundle.to_bytes())
        assert again.version == bundle.version
        assert again.rv.fingerprint == bundle.rv.fingerprint
        assert again.model.categories == bundle.model.categories

    def test_startup_loads_existing_bundle(self, tmp_path):
        client, store, app = make_service(tmp_path)
        config = app.state.config
        app2 = create_app(config, store=store)
        client2 = TestClient(app2)
        assert client2.get("/model").json()["version"] == 1


class TestServiceConfig:
    def test_file_and_env_precedence(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"port": 9001, "mode": "morphana"}), encoding="utf-8")
        cfg = ServiceConfig.from_file(cfg_file, env={"MAILTRIAGE_PORT": "9002"})
        assert cfg.port == 9002  # env beats file
        assert cfg.mode == "morphana"  # file beats default
        assert cfg.min_docs == 30  # default
