"""Five classifier families behind one fit/predict/save/load contract.

Families over binary document vectors:

    knn             instance store, vote of the k nearest by Euclidean distance
    naive_bayes     Bernoulli model, Laplace-smoothed, ranked by log-posterior
    id3             information-gain decision tree grown to purity
    linear_svm_ovr  one hinge+L2 separator per class, epoch-wise subgradient
                    descent with seeded shuffling, ranked by signed margin
    lvq             LVQ1 prototypes, ranked by distance to the nearest
                    per-class codebook

Every family returns a full ranking over all trained categories with
non-increasing scores. Fitting is deterministic: identical spec and data give
bit-identical serialized models. The two sequential-update trainers (SVM,
LVQ) run in numba kernels; everything else is numpy/scipy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from numba import njit
from scipy import sparse

from .errors import LearnerError, ModelIOError, PredictError

MODEL_FORMAT_VERSION = 1

FAMILY_KNN = "knn"
FAMILY_NAIVE_BAYES = "naive_bayes"
FAMILY_ID3 = "id3"
FAMILY_SVM = "linear_svm_ovr"
FAMILY_LVQ = "lvq"
FAMILIES = (FAMILY_KNN, FAMILY_NAIVE_BAYES, FAMILY_ID3, FAMILY_SVM, FAMILY_LVQ)

DEFAULT_HYPERPARAMS: dict[str, dict[str, Any]] = {
    FAMILY_KNN: {"k": 5},
    FAMILY_NAIVE_BAYES: {"alpha": 1.0},
    FAMILY_ID3: {"max_depth": None},
    FAMILY_SVM: {"epochs": 50, "lambda": 1e-2, "track_objective": False},
    FAMILY_LVQ: {"codebooks_per_class": 5, "rate": 0.1, "passes": 20},
}


@dataclass(frozen=True)
class ClassifierSpec:
    family: str
    hyperparams: dict[str, Any] = field(default_factory=dict)
    seed: int = 0


@dataclass(frozen=True)
class RankedPrediction:
    ranking: tuple[tuple[str, float], ...]

    @property
    def best(self) -> str:
        return self.ranking[0][0]

    def top(self, n: int) -> tuple[str, ...]:
        return tuple(cat for cat, _ in self.ranking[:n])


@dataclass
class TrainedModel:
    spec: ClassifierSpec
    rv_fingerprint: str
    n_features: int
    categories: tuple[str, ...]
    payload: dict[str, Any]
    version: int = 1


def resolve_spec(spec: ClassifierSpec) -> ClassifierSpec:
    """Fill hyperparameter defaults; reject unknown families and keys."""
    if spec.family not in FAMILIES:
        raise LearnerError(f"unknown classifier family {spec.family!r}; expected one of {FAMILIES}")
    defaults = DEFAULT_HYPERPARAMS[spec.family]
    unknown = set(spec.hyperparams) - set(defaults)
    if unknown:
        raise LearnerError(
            f"unknown hyperparameters for {spec.family}: {sorted(unknown)}"
        )
    merged = {**defaults, **spec.hyperparams}
    return replace(spec, hyperparams=merged)


# ---------------------------------------------------------------------------
# Input normalization
# ---------------------------------------------------------------------------


def _as_csr(vectors: Any) -> sparse.csr_matrix:
    if sparse.issparse(vectors):
        mat = vectors.tocsr().astype(np.uint8)
    else:
        arr = np.asarray(vectors)
        if arr.ndim == 1 and arr.dtype == object:
            raise LearnerError("ragged vector input: all vectors must share one length")
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise LearnerError(f"expected 2-d training data, got ndim={arr.ndim}")
        mat = sparse.csr_matrix((arr != 0).astype(np.uint8))
    mat.data = np.ones_like(mat.data)
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def _query_indices(v: Any, n_features: int) -> np.ndarray:
    arr = np.asarray(v).ravel()
    if arr.shape[0] != n_features:
        raise PredictError(expected=n_features, actual=int(arr.shape[0]))
    return np.flatnonzero(arr).astype(np.int64)


def fit(
    spec: ClassifierSpec,
    vectors: Any,
    labels: Sequence[str],
    rv_fingerprint: str = "",
    version: int = 1,
) -> TrainedModel:
    """Train one model; deterministic given (spec, data)."""
    spec = resolve_spec(spec)
    X = _as_csr(vectors)
    if X.shape[0] != len(labels):
        raise LearnerError(
            f"{X.shape[0]} vectors but {len(labels)} labels"
        )
    if X.shape[0] == 0:
        raise LearnerError("empty training set")
    if X.shape[1] == 0:
        raise LearnerError("zero-length document vectors cannot be trained on")
    categories = tuple(sorted(set(labels)))
    if len(categories) < 2:
        raise LearnerError(
            f"need at least 2 categories to train, got {len(categories)}"
        )
    cat_index = {c: i for i, c in enumerate(categories)}
    y = np.asarray([cat_index[l] for l in labels], dtype=np.int64)

    fitter = _FITTERS[spec.family]
    payload = fitter(spec, X, y, len(categories))
    return TrainedModel(
        spec=spec,
        rv_fingerprint=rv_fingerprint,
        n_features=int(X.shape[1]),
        categories=categories,
        payload=payload,
        version=version,
    )


def predict(model: TrainedModel, v: Any) -> RankedPrediction:
    """Rank all trained categories for one vector."""
    idx = _query_indices(v, model.n_features)
    return _rank_one(model, idx)


def _rank_one(model: TrainedModel, idx: np.ndarray) -> RankedPrediction:
    if model.spec.family == FAMILY_KNN:
        neighbors, dists = knn_neighbors(model, idx)
        return _rank_knn_votes(model, neighbors, dists)
    scores = _SCORERS[model.spec.family](model, idx)
    return _rank(model, scores)


def predict_many(model: TrainedModel, vectors: Any) -> list[RankedPrediction]:
    """Batch variant of predict; same results, row by row."""
    X = _as_csr(vectors)
    if X.shape[1] != model.n_features:
        raise PredictError(expected=model.n_features, actual=int(X.shape[1]))
    if model.spec.family == FAMILY_KNN:
        return _predict_many_knn(model, X)
    out = []
    for i in range(X.shape[0]):
        idx = X.indices[X.indptr[i] : X.indptr[i + 1]].astype(np.int64)
        out.append(_rank_one(model, idx))
    return out


def _rank(model: TrainedModel, scores: np.ndarray) -> RankedPrediction:
    # primary: score descending; ties: lexicographic category id
    order = sorted(range(len(model.categories)), key=lambda c: (-scores[c], model.categories[c]))
    return RankedPrediction(
        ranking=tuple((model.categories[c], float(scores[c])) for c in order)
    )


# ---------------------------------------------------------------------------
# k-nearest neighbours
# ---------------------------------------------------------------------------


def _fit_knn(spec: ClassifierSpec, X: sparse.csr_matrix, y: np.ndarray, n_classes: int) -> dict:
    return {"X": X, "y": y, "row_norms": np.diff(X.indptr).astype(np.int64)}


def knn_neighbors(model: TrainedModel, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices and squared distances of the k nearest training vectors.

    Distances are exact integers for binary vectors; ties break on the lower
    training-row index (stable sort).
    """
    payload = model.payload
    X: sparse.csr_matrix = payload["X"]
    k = min(int(model.spec.hyperparams["k"]), X.shape[0])
    overlap = np.zeros(X.shape[0], dtype=np.int64)
    if idx.size:
        sub = X[:, idx]
        overlap = np.asarray(sub.sum(axis=1, dtype=np.int64)).ravel()
    dist = payload["row_norms"] + idx.size - 2 * overlap
    order = np.argsort(dist, kind="stable")[:k]
    return order, dist[order]


def _rank_knn_votes(
    model: TrainedModel, neighbors: np.ndarray, dists: np.ndarray
) -> RankedPrediction:
    """Vote count among the k nearest; ties by smaller summed distance over a
    class's neighbors, then lexicographic. Reported scores are vote counts."""
    n_classes = len(model.categories)
    y = model.payload["y"]
    votes = np.bincount(y[neighbors], minlength=n_classes)
    summed = np.zeros(n_classes, dtype=np.float64)
    np.add.at(summed, y[neighbors], dists.astype(np.float64))
    order = sorted(
        range(n_classes),
        key=lambda c: (
            -votes[c],
            summed[c] if votes[c] > 0 else np.inf,
            model.categories[c],
        ),
    )
    return RankedPrediction(
        ranking=tuple((model.categories[c], float(votes[c])) for c in order)
    )


def _predict_many_knn(model: TrainedModel, Xq: sparse.csr_matrix) -> list[RankedPrediction]:
    Xt: sparse.csr_matrix = model.payload["X"]
    k = min(int(model.spec.hyperparams["k"]), Xt.shape[0])
    # int64 operands: a uint8 product would overflow past 255 shared features
    overlap = np.asarray(
        (Xq.astype(np.int64) @ Xt.T.astype(np.int64)).todense(), dtype=np.int64
    )
    qn = np.diff(Xq.indptr).astype(np.int64)
    dist = qn[:, None] + model.payload["row_norms"][None, :] - 2 * overlap
    out = []
    for i in range(Xq.shape[0]):
        order = np.argsort(dist[i], kind="stable")[:k]
        out.append(_rank_knn_votes(model, order, dist[i][order]))
    return out


# ---------------------------------------------------------------------------
# Bernoulli Naive Bayes
# ---------------------------------------------------------------------------


def _fit_naive_bayes(spec, X, y, n_classes) -> dict:
    alpha = float(spec.hyperparams["alpha"])
    onehot = np.zeros((X.shape[0], n_classes), dtype=np.float64)
    onehot[np.arange(X.shape[0]), y] = 1.0
    feature_counts = np.asarray((X.T @ onehot).T)  # classes x features
    class_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    return {
        "alpha": alpha,
        "class_counts": class_counts.astype(np.int64),
        # C-contiguous so reductions sum in the same order after a round-trip
        "feature_counts": np.ascontiguousarray(feature_counts.astype(np.int64)),
    }


def _nb_tables(model: TrainedModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    payload = model.payload
    cached = payload.get("_tables")
    if cached is not None:
        return cached
    alpha = payload["alpha"]
    nc = payload["class_counts"].astype(np.float64)
    n1 = payload["feature_counts"].astype(np.float64)
    log_prior = np.log(nc / nc.sum())
    log_p1 = np.log((n1 + alpha) / (nc[:, None] + 2.0 * alpha))
    log_p0 = np.log((nc[:, None] - n1 + alpha) / (nc[:, None] + 2.0 * alpha))
    base = log_prior + log_p0.sum(axis=1)
    delta = log_p1 - log_p0
    payload["_tables"] = (base, delta, log_prior)
    return payload["_tables"]


def _score_naive_bayes(model: TrainedModel, idx: np.ndarray) -> np.ndarray:
    base, delta, _ = _nb_tables(model)
    if idx.size == 0:
        return base.copy()
    return base + delta[:, idx].sum(axis=1)


def naive_bayes_log_posteriors(model: TrainedModel, v: Any) -> dict[str, float]:
    """Normalized log-posteriors per category (log-sum-exp normalized)."""
    idx = _query_indices(v, model.n_features)
    joint = _score_naive_bayes(model, idx)
    norm = joint - _logsumexp(joint)
    return {c: float(norm[i]) for i, c in enumerate(model.categories)}


def _logsumexp(a: np.ndarray) -> float:
    m = float(a.max())
    return m + math.log(float(np.exp(a - m).sum()))


# ---------------------------------------------------------------------------
# ID3 decision tree
# ---------------------------------------------------------------------------


def _entropy_rows(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    # Shannon entropy in nats per row; empty rows get 0
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / totals[..., None]
        term = np.where(counts > 0, p * np.log(p), 0.0)
    out = -term.sum(axis=-1)
    return np.where(totals > 0, out, 0.0)


def _fit_id3(spec, X, y, n_classes) -> dict:
    max_depth = spec.hyperparams["max_depth"]
    n, n_features = X.shape
    Xcsc = X.tocsc()
    col_rows = [
        np.sort(Xcsc.indices[Xcsc.indptr[f] : Xcsc.indptr[f + 1]]).astype(np.int64)
        for f in range(n_features)
    ]

    def node_counts(rows: np.ndarray) -> np.ndarray:
        return np.bincount(y[rows], minlength=n_classes)

    root: dict[str, Any] = {}
    all_rows = np.arange(n, dtype=np.int64)
    stack: list[tuple[np.ndarray, np.ndarray, int, dict]] = [
        (all_rows, np.zeros(n_features, dtype=bool), 0, root)
    ]
    while stack:
        rows, used, depth, node = stack.pop()
        counts = node_counts(rows)
        node["counts"] = counts
        node["feature"] = None
        node["children"] = None
        if (counts > 0).sum() <= 1:
            continue  # pure leaf
        if max_depth is not None and depth >= max_depth:
            continue
        sub = X[rows]
        onehot = np.zeros((len(rows), n_classes), dtype=np.float64)
        onehot[np.arange(len(rows)), y[rows]] = 1.0
        n1c = np.asarray(sub.T @ onehot)  # features x classes
        n1 = n1c.sum(axis=1)
        total = float(len(rows))
        candidates = (~used) & (n1 > 0) & (n1 < total)
        if not candidates.any():
            continue  # feature exhaustion: no remaining feature separates
        h_node = _entropy_rows(counts[None, :].astype(np.float64), np.array([total]))[0]
        h1 = _entropy_rows(n1c, n1)
        n0c = counts[None, :].astype(np.float64) - n1c
        n0 = total - n1
        h0 = _entropy_rows(n0c, n0)
        gain = h_node - (n1 * h1 + n0 * h0) / total
        gain = np.where(candidates, gain, -np.inf)
        best = int(np.argmax(gain))  # first maximum: smallest feature index
        rows1 = np.intersect1d(rows, col_rows[best], assume_unique=True)
        rows0 = np.setdiff1d(rows, rows1, assume_unique=True)
        node["feature"] = best
        child0: dict[str, Any] = {}
        child1: dict[str, Any] = {}
        node["children"] = [child0, child1]
        child_used = used.copy()
        child_used[best] = True
        for child, child_rows in ((child0, rows0), (child1, rows1)):
            if len(child_rows) == 0:
                # unseen path: leaf carrying the parent's distribution
                child["counts"] = counts.copy()
                child["feature"] = None
                child["children"] = None
            else:
                stack.append((child_rows, child_used, depth + 1, child))
    return {"tree": root}


def _score_id3(model: TrainedModel, idx: np.ndarray) -> np.ndarray:
    member = set(int(i) for i in idx)
    node = model.payload["tree"]
    while node["feature"] is not None:
        bit = 1 if node["feature"] in member else 0
        node = node["children"][bit]
    counts = np.asarray(node["counts"], dtype=np.float64)
    total = counts.sum()
    return counts / total if total > 0 else counts


def id3_root_feature(model: TrainedModel) -> int | None:
    return model.payload["tree"]["feature"]


# ---------------------------------------------------------------------------
# Linear SVM, one-vs-rest, epoch-wise subgradient descent
# ---------------------------------------------------------------------------


@njit(cache=True)
def _svm_epoch(W, b, scale, indptr, indices, y, order, lam, t0, viol):
    # The bias is an always-on augmented feature: it shares the L2 decay via
    # the scale factor, which keeps the huge early steps (eta_1 = 1/lam) from
    # leaving a permanent class-prior imprint.
    n_classes = W.shape[0]
    n_features = W.shape[1]
    for pos in range(order.shape[0]):
        i = order[pos]
        t = t0 + pos + 1
        eta = 1.0 / (lam * t)
        start = indptr[i]
        end = indptr[i + 1]
        # margin check against the pre-step weights
        for c in range(n_classes):
            m = 0.0
            for j in range(start, end):
                m += W[c, indices[j]]
            m = (m + b[c]) * scale
            ysign = 1.0 if y[i] == c else -1.0
            viol[c] = ysign * m < 1.0
        # weight decay via the shared scale factor
        scale *= 1.0 - eta * lam
        if scale < 1e-9:
            for c in range(n_classes):
                b[c] *= scale
                for f in range(n_features):
                    W[c, f] *= scale
            scale = 1.0
        # subgradient step for violated classes
        for c in range(n_classes):
            if viol[c]:
                ysign = 1.0 if y[i] == c else -1.0
                upd = eta * ysign / scale
                for j in range(start, end):
                    W[c, indices[j]] += upd
                b[c] += upd
    return scale


def svm_objective(
    W: np.ndarray, b: np.ndarray, X: sparse.csr_matrix, y: np.ndarray, lam: float
) -> float:
    """Summed per-class hinge+L2 objective, the quantity the trainer descends."""
    margins = np.asarray(X @ W.T) + b[None, :]
    ysign = np.where(y[:, None] == np.arange(W.shape[0])[None, :], 1.0, -1.0)
    hinge = np.maximum(0.0, 1.0 - ysign * margins).mean(axis=0)
    reg = 0.5 * lam * (W * W).sum(axis=1)
    return float((hinge + reg).sum())


def _fit_svm(spec, X, y, n_classes) -> dict:
    lam = float(spec.hyperparams["lambda"])
    epochs = int(spec.hyperparams["epochs"])
    track = bool(spec.hyperparams["track_objective"])
    if lam <= 0:
        raise LearnerError("svm lambda must be positive")
    n, n_features = X.shape
    rng = np.random.default_rng(spec.seed)
    W = np.zeros((n_classes, n_features), dtype=np.float64)
    b = np.zeros(n_classes, dtype=np.float64)
    viol = np.zeros(n_classes, dtype=np.bool_)
    scale = 1.0
    t0 = 0
    indptr = X.indptr.astype(np.int64)
    indices = X.indices.astype(np.int64)
    history: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(n).astype(np.int64)
        scale = _svm_epoch(W, b, scale, indptr, indices, y, order, lam, t0, viol)
        t0 += n
        if track:
            history.append(svm_objective(W * scale, b * scale, X, y, lam))
    W *= scale
    b *= scale
    payload: dict[str, Any] = {"W": W, "b": b}
    if track:
        payload["objective_history"] = history
    return payload


def _score_svm(model: TrainedModel, idx: np.ndarray) -> np.ndarray:
    W = model.payload["W"]
    b = model.payload["b"]
    if idx.size == 0:
        return b.copy()
    return W[:, idx].sum(axis=1) + b


# ---------------------------------------------------------------------------
# LVQ1 prototype classifier
# ---------------------------------------------------------------------------


@njit(cache=True)
def _lvq_pass(CB, cb_norm2, cb_class, indptr, indices, y, order, alpha):
    n_codebooks, n_features = CB.shape
    for pos in range(order.shape[0]):
        i = order[pos]
        start = indptr[i]
        end = indptr[i + 1]
        nnz = float(end - start)
        best = 0
        best_d = 1e300
        for k in range(n_codebooks):
            dot = 0.0
            for j in range(start, end):
                dot += CB[k, indices[j]]
            d = cb_norm2[k] - 2.0 * dot + nnz
            if d < best_d:
                best_d = d
                best = k
        a = alpha if cb_class[best] == y[i] else -alpha
        one_minus = 1.0 - a
        for f in range(n_features):
            CB[best, f] *= one_minus
        for j in range(start, end):
            CB[best, indices[j]] += a
        s = 0.0
        for f in range(n_features):
            s += CB[best, f] * CB[best, f]
        cb_norm2[best] = s


def _fit_lvq(spec, X, y, n_classes) -> dict:
    m = int(spec.hyperparams["codebooks_per_class"])
    rate = float(spec.hyperparams["rate"])
    passes = int(spec.hyperparams["passes"])
    if m < 1 or passes < 1 or not (0.0 < rate < 1.0):
        raise LearnerError("lvq hyperparameters out of range")
    rng = np.random.default_rng(spec.seed)
    n, n_features = X.shape
    codebooks = np.zeros((n_classes * m, n_features), dtype=np.float64)
    cb_class = np.zeros(n_classes * m, dtype=np.int64)
    for c in range(n_classes):
        class_rows = np.flatnonzero(y == c)
        replace_draw = len(class_rows) < m
        chosen = rng.choice(len(class_rows), size=m, replace=replace_draw)
        block = np.asarray(X[class_rows[chosen]].todense(), dtype=np.float64)
        codebooks[c * m : (c + 1) * m] = block
        cb_class[c * m : (c + 1) * m] = c
    cb_norm2 = (codebooks * codebooks).sum(axis=1)
    indptr = X.indptr.astype(np.int64)
    indices = X.indices.astype(np.int64)
    for p in range(passes):
        alpha = rate * (1.0 - p / passes)  # linear decay toward zero
        order = rng.permutation(n).astype(np.int64)
        _lvq_pass(codebooks, cb_norm2, cb_class, indptr, indices, y, order, alpha)
    return {"codebooks": codebooks, "codebook_classes": cb_class}


def _score_lvq(model: TrainedModel, idx: np.ndarray) -> np.ndarray:
    CB = model.payload["codebooks"]
    cb_class = model.payload["codebook_classes"]
    norms = (CB * CB).sum(axis=1)
    dots = CB[:, idx].sum(axis=1) if idx.size else np.zeros(CB.shape[0])
    dist = norms - 2.0 * dots + float(idx.size)
    n_classes = len(model.categories)
    best = np.full(n_classes, np.inf)
    np.minimum.at(best, cb_class, dist)
    return -best


_FITTERS = {
    FAMILY_KNN: _fit_knn,
    FAMILY_NAIVE_BAYES: _fit_naive_bayes,
    FAMILY_ID3: _fit_id3,
    FAMILY_SVM: _fit_svm,
    FAMILY_LVQ: _fit_lvq,
}

_SCORERS = {
    FAMILY_NAIVE_BAYES: _score_naive_bayes,
    FAMILY_ID3: _score_id3,
    FAMILY_SVM: _score_svm,
    FAMILY_LVQ: _score_lvq,
}


# ---------------------------------------------------------------------------
# Serialization (versioned JSON container; layout documented in docs/)
# ---------------------------------------------------------------------------


def _tree_to_json(node: dict) -> dict:
    out = {"counts": [int(x) for x in node["counts"]], "feature": node["feature"]}
    if node["children"] is not None:
        out["children"] = [_tree_to_json(c) for c in node["children"]]
    else:
        out["children"] = None
    return out


def _tree_from_json(node: dict) -> dict:
    out = {
        "counts": np.asarray(node["counts"], dtype=np.int64),
        "feature": node["feature"],
        "children": None,
    }
    if node["children"] is not None:
        out["children"] = [_tree_from_json(c) for c in node["children"]]
    return out


def _payload_to_json(family: str, payload: dict) -> dict:
    if family == FAMILY_KNN:
        X: sparse.csr_matrix = payload["X"]
        rows = [
            [int(j) for j in X.indices[X.indptr[i] : X.indptr[i + 1]]]
            for i in range(X.shape[0])
        ]
        return {"rows": rows, "y": [int(v) for v in payload["y"]]}
    if family == FAMILY_NAIVE_BAYES:
        return {
            "alpha": payload["alpha"],
            "class_counts": [int(v) for v in payload["class_counts"]],
            "feature_counts": [[int(v) for v in row] for row in payload["feature_counts"]],
        }
    if family == FAMILY_ID3:
        return {"tree": _tree_to_json(payload["tree"])}
    if family == FAMILY_SVM:
        out = {
            "W": [[float(v) for v in row] for row in payload["W"]],
            "b": [float(v) for v in payload["b"]],
        }
        if "objective_history" in payload:
            out["objective_history"] = [float(v) for v in payload["objective_history"]]
        return out
    if family == FAMILY_LVQ:
        return {
            "codebooks": [[float(v) for v in row] for row in payload["codebooks"]],
            "codebook_classes": [int(v) for v in payload["codebook_classes"]],
        }
    raise ModelIOError(f"cannot serialize family {family!r}")


def _payload_from_json(family: str, doc: dict, n_features: int) -> dict:
    if family == FAMILY_KNN:
        indptr = [0]
        indices: list[int] = []
        for row in doc["rows"]:
            indices.extend(row)
            indptr.append(len(indices))
        X = sparse.csr_matrix(
            (
                np.ones(len(indices), dtype=np.uint8),
                np.asarray(indices, dtype=np.int64),
                np.asarray(indptr, dtype=np.int64),
            ),
            shape=(len(doc["rows"]), n_features),
        )
        return {
            "X": X,
            "y": np.asarray(doc["y"], dtype=np.int64),
            "row_norms": np.diff(X.indptr).astype(np.int64),
        }
    if family == FAMILY_NAIVE_BAYES:
        return {
            "alpha": float(doc["alpha"]),
            "class_counts": np.asarray(doc["class_counts"], dtype=np.int64),
            "feature_counts": np.asarray(doc["feature_counts"], dtype=np.int64),
        }
    if family == FAMILY_ID3:
        return {"tree": _tree_from_json(doc["tree"])}
    if family == FAMILY_SVM:
        out = {
            "W": np.asarray(doc["W"], dtype=np.float64),
            "b": np.asarray(doc["b"], dtype=np.float64),
        }
        if "objective_history" in doc:
            out["objective_history"] = [float(v) for v in doc["objective_history"]]
        return out
    if family == FAMILY_LVQ:
        return {
            "codebooks": np.asarray(doc["codebooks"], dtype=np.float64),
            "codebook_classes": np.asarray(doc["codebook_classes"], dtype=np.int64),
        }
    raise ModelIOError(f"cannot deserialize family {family!r}")


def save(model: TrainedModel) -> bytes:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "family": model.spec.family,
        "spec": {
            "family": model.spec.family,
            "hyperparams": model.spec.hyperparams,
            "seed": model.spec.seed,
        },
        "rv_fingerprint": model.rv_fingerprint,
        "version": model.version,
        "n_features": model.n_features,
        "categories": list(model.categories),
        "payload": _payload_to_json(model.spec.family, model.payload),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def load(
    data: bytes,
    expected_fingerprint: str | None = None,
    expected_version: int | None = None,
) -> TrainedModel:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelIOError(f"model bytes are not valid JSON: {exc}") from exc
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelIOError(
            f"unsupported model format_version {doc.get('format_version')!r}"
        )
    family = doc["family"]
    if family not in FAMILIES:
        raise ModelIOError(f"unknown model family {family!r}")
    if expected_fingerprint is not None and doc["rv_fingerprint"] != expected_fingerprint:
        raise ModelIOError(
            "relevancy-vector fingerprint mismatch: model was trained on a different feature axis"
        )
    if expected_version is not None and doc["version"] != expected_version:
        raise ModelIOError(
            f"model version mismatch: expected {expected_version}, found {doc['version']}"
        )
    spec = ClassifierSpec(
        family=family,
        hyperparams=dict(doc["spec"]["hyperparams"]),
        seed=int(doc["spec"]["seed"]),
    )
    return TrainedModel(
        spec=spec,
        rv_fingerprint=doc["rv_fingerprint"],
        n_features=int(doc["n_features"]),
        categories=tuple(doc["categories"]),
        payload=_payload_from_json(family, doc["payload"], int(doc["n_features"])),
        version=int(doc["version"]),
    )
