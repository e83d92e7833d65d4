"""Relevancy vector construction and binary document vectors.

The global feature axis is built from a labeled training set: extraction
results are pooled per category, every pooled feature is scored tf x idf
(tf = raw count in the category pool, idf = ln(C / c_t) over the C category
pools), and each category contributes its top-k features. The deduplicated
union, in a fixed category-then-rank order, is the relevancy vector.
Documents are then mapped to binary membership vectors over that axis.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .errors import FeatureSpaceError
from .stp import ExtractionResult

FORMAT_VERSION = 1


@dataclass(frozen=True)
class FeatureScore:
    feature: str
    category: str
    tf: int
    idf: float

    @property
    def score(self) -> float:
        return self.tf * self.idf


@dataclass(frozen=True)
class RelevancyVector:
    """Immutable global feature list plus the per-category top-k lists."""

    features: tuple[str, ...]
    per_category_top: dict[str, tuple[str, ...]]
    k: int
    mode: str
    fingerprint: str
    index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.features)

    @property
    def categories(self) -> tuple[str, ...]:
        return tuple(sorted(self.per_category_top))


def _fingerprint(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _make_rv(
    per_category_top: dict[str, tuple[str, ...]], k: int, mode: str
) -> RelevancyVector:
    features: list[str] = []
    seen: set[str] = set()
    for category in sorted(per_category_top):
        for feat in per_category_top[category]:
            if feat not in seen:
                seen.add(feat)
                features.append(feat)
    fingerprint = _fingerprint(
        {
            "features": features,
            "per_category_top": {c: list(v) for c, v in per_category_top.items()},
            "k": k,
            "mode": mode,
        }
    )
    return RelevancyVector(
        features=tuple(features),
        per_category_top=per_category_top,
        k=k,
        mode=mode,
        fingerprint=fingerprint,
        index={f: i for i, f in enumerate(features)},
    )


def score_category_pool(
    pool: Counter[str], category: str, idf: dict[str, float]
) -> list[FeatureScore]:
    return [
        FeatureScore(feature=f, category=category, tf=tf, idf=idf[f])
        for f, tf in pool.items()
    ]


def build_relevancy(
    training: Iterable[tuple[ExtractionResult, str]],
    k: int = 100,
) -> RelevancyVector:
    """Select each category's top-k pooled features and merge them.

    Ties are broken by higher tf, then lexicographic feature order, so the
    result is independent of training-document order. Zero-idf features stay
    eligible: a category short on discriminative vocabulary still fills its
    list up to k.
    """
    pools: dict[str, Counter[str]] = {}
    modes: set[str] = set()
    for result, category in training:
        modes.add(result.mode)
        pool = pools.setdefault(category, Counter())
        pool.update(result.items)

    if len(pools) < 2:
        raise FeatureSpaceError(
            f"need at least 2 categories to build a relevancy vector, got {len(pools)}"
        )
    for category in sorted(pools):
        if not pools[category]:
            raise FeatureSpaceError(
                f"category {category!r} has an empty extraction pool"
            )
    if len(modes) > 1:
        raise FeatureSpaceError(
            f"training mixes extraction modes {sorted(modes)}; use exactly one"
        )
    mode = modes.pop()

    n_categories = len(pools)
    pool_presence: Counter[str] = Counter()
    for pool in pools.values():
        pool_presence.update(pool.keys())
    idf = {f: math.log(n_categories / c_t) for f, c_t in pool_presence.items()}

    per_category_top: dict[str, tuple[str, ...]] = {}
    for category in sorted(pools):
        scored = score_category_pool(pools[category], category, idf)
        scored.sort(key=lambda fs: (-fs.score, -fs.tf, fs.feature))
        per_category_top[category] = tuple(fs.feature for fs in scored[:k])

    return _make_rv(per_category_top, k, mode)


def vectorize(doc: ExtractionResult | Iterable[str], rv: RelevancyVector) -> np.ndarray:
    """Binary membership vector over the relevancy-vector axis.

    Multiplicity in the document never changes a bit: present means 1.
    """
    items = doc.items if isinstance(doc, ExtractionResult) else doc
    bits = np.zeros(len(rv.features), dtype=np.uint8)
    index = rv.index
    for item in items:
        pos = index.get(item)
        if pos is not None:
            bits[pos] = 1
    return bits


def vectorize_many(
    docs: Sequence[ExtractionResult], rv: RelevancyVector
) -> sparse.csr_matrix:
    """Stack binary vectors for many documents as a CSR matrix."""
    indptr = [0]
    indices: list[int] = []
    index = rv.index
    for doc in docs:
        cols = {index[item] for item in doc.items if item in index}
        indices.extend(sorted(cols))
        indptr.append(len(indices))
    data = np.ones(len(indices), dtype=np.uint8)
    return sparse.csr_matrix(
        (data, np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(docs), len(rv.features)),
    )


def rv_to_json(rv: RelevancyVector, corpus_fingerprint: str | None = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "k": rv.k,
        "mode": rv.mode,
        "fingerprint": rv.fingerprint,
        "corpus_fingerprint": corpus_fingerprint,
        "features": list(rv.features),
        "per_category_top": {c: list(v) for c, v in sorted(rv.per_category_top.items())},
    }


def rv_to_bytes(rv: RelevancyVector, corpus_fingerprint: str | None = None) -> bytes:
    doc = rv_to_json(rv, corpus_fingerprint)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def rv_from_json(doc: dict) -> RelevancyVector:
    if doc.get("format_version") != FORMAT_VERSION:
        raise FeatureSpaceError(
            f"unsupported relevancy-vector format_version {doc.get('format_version')!r}"
        )
    per_category_top = {c: tuple(v) for c, v in doc["per_category_top"].items()}
    rv = _make_rv(per_category_top, k=int(doc["k"]), mode=doc["mode"])
    if list(rv.features) != list(doc["features"]):
        raise FeatureSpaceError("relevancy-vector feature order does not round-trip")
    if rv.fingerprint != doc["fingerprint"]:
        raise FeatureSpaceError("relevancy-vector fingerprint mismatch")
    return rv


def rv_from_bytes(data: bytes) -> RelevancyVector:
    return rv_from_json(json.loads(data.decode("utf-8")))
