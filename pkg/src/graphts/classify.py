"""Classifiers, confusion-matrix metrics and repeated stratified cross-validation.

Models work on plain arrays: ``x`` is ``(m, p)`` float, ``y`` holds integer
class codes ``0..c-1``.  :func:`encode_labels` turns :class:`ClassLabel`
lists into codes for the two tasks:

* ``three_class``: H=0, M=1, N=2
* ``two_class``:   H=0, Patient (M or N)=1

Seeds: repetition ``r`` of :func:`cross_validate` draws its folds with seed
``seed + r``; the model trained on fold ``f`` of that repetition is seeded
with ``derive_seed(seed + r, f)``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BadK, BadSpec, ClassTooSmall, EmptyMatrix, SingleClass
from .features import Standardizer, anova_f_values, top_k
from .rng import SplitMix64, derive_seed
from .types import ClassLabel

log = logging.getLogger(__name__)

TASKS = {
    "three_class": ("H", "M", "N"),
    "two_class": ("H", "P"),
}

MLP_PROFILES = {"ann": (16,), "dnn": (32, 16)}


def encode_labels(labels: Sequence[ClassLabel], task: str = "three_class") -> np.ndarray:
    if task not in TASKS:
        raise BadSpec(f"unknown task {task!r}")
    codes = np.array([lab.index for lab in labels], dtype=np.int64)
    if task == "two_class":
        codes = np.minimum(codes, 1)
    return codes


# -- folds -----------------------------------------------------------------


@dataclass(frozen=True)
class FoldAssignment:
    folds: np.ndarray
    k: int
    seed: int

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.folds == fold)
        train = np.flatnonzero(self.folds != fold)
        return train, test


def stratified_kfold(labels, k: int, seed: int) -> FoldAssignment:
    """Seeded stratified partition into ``k`` folds.

    Members of each class (classes in sorted order) are shuffled and the
    shuffled lists are concatenated; position ``i`` of the concatenation
    goes to fold ``i mod k``.  Fold sizes then differ by at most one both
    overall and within every class.
    """
    y = np.asarray(labels)
    if k < 2:
        raise BadK(f"need at least 2 folds, got {k}")
    rng = SplitMix64(derive_seed(seed))
    sequence = []
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if members.size < k:
            raise ClassTooSmall(f"class {c!r} has {members.size} members, fewer than {k} folds")
        sequence.append(members[rng.permutation(members.size)])
    order = np.concatenate(sequence)
    folds = np.empty(y.size, dtype=np.int64)
    folds[order] = np.arange(order.size) % k
    return FoldAssignment(folds, k, seed)


# -- models ----------------------------------------------------------------


@dataclass
class ModelSpec:
    kind: str = "mlp"
    task: str = "three_class"
    name: str = ""
    # knn
    k: int = 5
    # logreg and mlp
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    # mlp
    hidden: tuple = (32, 16)
    activation: str = "tanh"
    batch_size: int = 32
    optimizer: str = "adam"
    seed: int = 0
    # ANOVA top-k selection inside each training fold, None keeps all features
    select_k: Optional[int] = None

    def __post_init__(self):
        if not self.name:
            self.name = self.kind
        self.hidden = tuple(int(h) for h in self.hidden)
        self.validate()

    def validate(self) -> None:
        if self.kind not in ("knn", "logreg", "mlp"):
            raise BadSpec(f"unknown model kind {self.kind!r}")
        if self.task not in TASKS:
            raise BadSpec(f"unknown task {self.task!r}")
        if self.kind == "knn" and self.k < 1:
            raise BadSpec("knn needs k >= 1")
        if self.kind in ("logreg", "mlp"):
            if not self.learning_rate > 0 or self.epochs < 1 or self.l2 < 0:
                raise BadSpec("learning_rate and epochs must be positive, l2 non-negative")
        if self.kind == "mlp":
            if not self.hidden or min(self.hidden) < 1:
                raise BadSpec("hidden layer sizes must be positive")
            if self.activation not in ACTIVATIONS:
                raise BadSpec(f"unknown activation {self.activation!r}")
            if self.batch_size < 1:
                raise BadSpec("batch_size must be positive")
            if self.optimizer not in ("adam", "sgd"):
                raise BadSpec(f"unknown optimizer {self.optimizer!r}")
        if self.select_k is not None and self.select_k < 1:
            raise BadSpec("select_k must be positive")

    @classmethod
    def profile(cls, name: str, **overrides) -> "ModelSpec":
        """``ann`` / ``dnn`` MLP presets, or ``knn`` / ``logreg`` defaults."""
        if name in MLP_PROFILES:
            base = dict(kind="mlp", hidden=MLP_PROFILES[name], learning_rate=0.01, epochs=300, name=name)
        elif name == "knn":
            base = dict(kind="knn", k=5, select_k=3, name=name)
        elif name == "logreg":
            base = dict(kind="logreg", learning_rate=0.5, epochs=1000, name=name)
        else:
            raise BadSpec(f"unknown model profile {name!r}")
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_classes(y: np.ndarray) -> int:
    if np.unique(y).size < 2:
        raise SingleClass("training data holds a single class")
    return int(y.max()) + 1


class KNNClassifier:
    """Majority vote of the ``k`` nearest rows (Euclidean).

    Equal distances rank the lower row index first.  A tied vote goes to
    the tied class whose nearest member is closest, which is the class of
    the single nearest neighbour whenever that class is among the tied.
    """

    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, x, y) -> "KNNClassifier":
        self.x = np.asarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        if not 1 <= self.k <= self.x.shape[0]:
            raise BadK(f"k={self.k} but only {self.x.shape[0]} training rows")
        self.n_classes = int(self.y.max()) + 1
        return self

    def _neighbours(self, q: np.ndarray) -> np.ndarray:
        d = np.sum((self.x - q) ** 2, axis=1)
        return np.lexsort((np.arange(d.size), d))[: self.k]

    def predict_one(self, q) -> int:
        near = self.y[self._neighbours(np.asarray(q, dtype=np.float64))]
        votes = np.bincount(near, minlength=self.n_classes)
        tied = np.flatnonzero(votes == votes.max())
        for label in near:
            if label in tied:
                return int(label)
        raise AssertionError("unreachable")

    def predict(self, x) -> np.ndarray:
        return np.array([self.predict_one(q) for q in np.atleast_2d(x)], dtype=np.int64)

    def predict_proba(self, x) -> np.ndarray:
        out = []
        for q in np.atleast_2d(x):
            near = self.y[self._neighbours(np.asarray(q, dtype=np.float64))]
            out.append(np.bincount(near, minlength=self.n_classes) / self.k)
        return np.array(out)


def knn_predict(x_train, y_train, k: int, query) -> int:
    return KNNClassifier(k).fit(x_train, y_train).predict_one(query)


class SoftmaxRegression:
    """Multinomial logistic regression, full-batch gradient descent from zero weights."""

    def __init__(self, learning_rate: float = 0.5, epochs: int = 1000, l2: float = 1e-4):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2

    def loss(self, x, y) -> float:
        p = self.predict_proba(x)
        nll = -np.mean(np.log(np.maximum(p[np.arange(y.size), y], 1e-300)))
        return float(nll + 0.5 * self.l2 * np.sum(self.w**2))

    def fit(self, x, y) -> "SoftmaxRegression":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        c = _check_classes(y)
        m, p = x.shape
        self.w = np.zeros((p, c))
        self.b = np.zeros(c)
        onehot = np.eye(c)[y]
        self.loss_history = []
        for _ in range(self.epochs):
            probs = _softmax(x @ self.w + self.b)
            self.loss_history.append(
                float(-np.mean(np.log(np.maximum(probs[np.arange(m), y], 1e-300))) + 0.5 * self.l2 * np.sum(self.w**2))
            )
            delta = (probs - onehot) / m
            self.w -= self.learning_rate * (x.T @ delta + self.l2 * self.w)
            self.b -= self.learning_rate * delta.sum(axis=0)
        self.loss_history.append(self.loss(x, y))
        self.diverged = bool(np.any(np.diff(self.loss_history) > 1e-12))
        if self.diverged:
            log.warning("logistic regression loss increased during training; lower the learning rate")
        return self

    def predict_proba(self, x) -> np.ndarray:
        return _softmax(np.atleast_2d(np.asarray(x, dtype=np.float64)) @ self.w + self.b)

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)


def logreg_train(x, y, spec: Optional[ModelSpec] = None) -> SoftmaxRegression:
    spec = spec or ModelSpec.profile("logreg")
    return SoftmaxRegression(spec.learning_rate, spec.epochs, spec.l2).fit(x, y)


def logreg_predict(model: SoftmaxRegression, query) -> tuple[int, np.ndarray]:
    p = model.predict_proba(query)[0]
    return int(np.argmax(p)), p


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z, a):
    return (z > 0).astype(np.float64)


def _tanh_grad(z, a):
    return 1.0 - a * a


ACTIVATIONS = {"tanh": (np.tanh, _tanh_grad), "relu": (_relu, _relu_grad)}


class MLPClassifier:
    """Fully connected network with softmax output and cross-entropy loss.

    Weights start Glorot-uniform from :class:`SplitMix64`, biases at zero.
    Each epoch visits the rows in a fresh seeded order in mini-batches;
    updates use Adam (or plain gradient descent with ``optimizer="sgd"``).
    """

    def __init__(self, hidden=(32, 16), activation="tanh", learning_rate=0.01, epochs=300,
                 batch_size=32, l2=1e-4, optimizer="adam", seed=0):
        self.hidden = tuple(hidden)
        self.activation = activation
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.l2 = l2
        self.optimizer = optimizer
        self.seed = seed

    def init_params(self, n_in: int, n_out: int) -> None:
        rng = SplitMix64(derive_seed(self.seed, 0x5EED))
        sizes = (n_in, *self.hidden, n_out)
        self.weights, self.biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, fan_in * fan_out).reshape(fan_in, fan_out)
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    @property
    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def _forward(self, x):
        act, _ = ACTIVATIONS[self.activation]
        zs, acts = [], [x]
        a = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ w + b
            a = act(z)
            zs.append(z)
            acts.append(a)
        logits = a @ self.weights[-1] + self.biases[-1]
        return zs, acts, _softmax(logits)

    def loss_and_grads(self, x, y) -> tuple[float, list[np.ndarray]]:
        """Mean cross-entropy plus ``l2/2 * sum(W**2)`` and its gradient.

        Gradients are returned in the order of :attr:`params`.
        """
        _, dact = ACTIVATIONS[self.activation]
        x = np.asarray(x, dtype=np.float64)
        m = x.shape[0]
        zs, acts, probs = self._forward(x)
        loss = -np.mean(np.log(np.maximum(probs[np.arange(m), y], 1e-300)))
        loss += 0.5 * self.l2 * sum(np.sum(w * w) for w in self.weights)
        delta = probs.copy()
        delta[np.arange(m), y] -= 1.0
        delta /= m
        gw = [None] * len(self.weights)
        gb = [None] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            gw[layer] = acts[layer].T @ delta + self.l2 * self.weights[layer]
            gb[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * dact(zs[layer - 1], acts[layer])
        return float(loss), [*gw, *gb]

    def fit(self, x, y) -> "MLPClassifier":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        c = _check_classes(y)
        self.n_classes = c
        self.init_params(x.shape[1], c)
        params = self.params
        first = [np.zeros_like(p) for p in params]
        second = [np.zeros_like(p) for p in params]
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        rng = SplitMix64(derive_seed(self.seed, 0xBA7C))
        step = 0
        m = x.shape[0]
        for _ in range(self.epochs):
            order = rng.permutation(m)
            for start in range(0, m, self.batch_size):
                batch = order[start : start + self.batch_size]
                _, grads = self.loss_and_grads(x[batch], y[batch])
                step += 1
                for p, g, m1, m2 in zip(params, grads, first, second):
                    if self.optimizer == "sgd":
                        p -= self.learning_rate * g
                        continue
                    m1 *= beta1
                    m1 += (1 - beta1) * g
                    m2 *= beta2
                    m2 += (1 - beta2) * g * g
                    p -= self.learning_rate * (m1 / (1 - beta1**step)) / (np.sqrt(m2 / (1 - beta2**step)) + eps)
        return self

    def predict_proba(self, x) -> np.ndarray:
        return self._forward(np.atleast_2d(np.asarray(x, dtype=np.float64)))[2]

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)


def mlp_train(x, y, spec: Optional[ModelSpec] = None) -> MLPClassifier:
    spec = spec or ModelSpec.profile("dnn")
    if spec.kind != "mlp":
        raise BadSpec(f"mlp_train got a {spec.kind!r} spec")
    return MLPClassifier(spec.hidden, spec.activation, spec.learning_rate, spec.epochs,
                         spec.batch_size, spec.l2, spec.optimizer, spec.seed).fit(x, y)


def mlp_predict(model: MLPClassifier, query) -> tuple[int, np.ndarray]:
    p = model.predict_proba(query)[0]
    return int(np.argmax(p)), p


def build_model(spec: ModelSpec, seed: Optional[int] = None):
    if spec.kind == "knn":
        return KNNClassifier(spec.k)
    if spec.kind == "logreg":
        return SoftmaxRegression(spec.learning_rate, spec.epochs, spec.l2)
    return MLPClassifier(spec.hidden, spec.activation, spec.learning_rate, spec.epochs,
                         spec.batch_size, spec.l2, spec.optimizer, spec.seed if seed is None else seed)


# -- metrics ---------------------------------------------------------------


def confusion_matrix(y_true, y_pred, n_classes: Optional[int] = None) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    c = n_classes or int(max(y_true.max(initial=0), y_pred.max(initial=0))) + 1
    cm = np.zeros((c, c), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f_score: float
    specificity: float
    zero_division: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


METRIC_NAMES = ("accuracy", "precision", "recall", "f_score", "specificity")


def _ratio(num: float, den: float) -> tuple[float, bool]:
    return (num / den, False) if den > 0 else (0.0, True)


def binary_metrics(tp: int, fp: int, tn: int, fn: int) -> Metrics:
    """Accuracy, precision, recall, F-score and specificity from one class's counts."""
    acc, z0 = _ratio(tp + tn, tp + fp + tn + fn)
    prec, z1 = _ratio(tp, tp + fp)
    rec, z2 = _ratio(tp, tp + fn)
    f, z3 = _ratio(2 * prec * rec, prec + rec)
    spec, z4 = _ratio(tn, tn + fp)
    return Metrics(acc, prec, rec, f, spec, z0 or z1 or z2 or z3 or z4)


def one_vs_rest(cm: np.ndarray, cls: int) -> tuple[int, int, int, int]:
    tp = int(cm[cls, cls])
    fn = int(cm[cls].sum()) - tp
    fp = int(cm[:, cls].sum()) - tp
    tn = int(cm.sum()) - tp - fn - fp
    return tp, fp, tn, fn


def evaluate(cm, average: str = "auto", positive: int = 1) -> Metrics:
    """Scores of a confusion matrix (rows = true class, columns = predicted).

    ``average="binary"`` reports the ``positive`` class's one-vs-rest
    precision, recall and specificity; ``"macro"`` averages them over
    classes.  ``"auto"`` (default) is binary for 2x2 matrices and macro
    otherwise.  Accuracy is always ``trace / total`` and the F-score is the
    harmonic mean of the reported precision and recall.  Classes whose
    ratios have a zero denominator contribute 0 and set ``zero_division``.
    """
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or total == 0:
        raise EmptyMatrix("confusion matrix must be square with a positive total")
    c = cm.shape[0]
    if average == "auto":
        average = "binary" if c == 2 else "macro"
    accuracy = float(np.trace(cm)) / total
    if average == "binary":
        per = [binary_metrics(*one_vs_rest(cm, positive))]
    elif average == "macro":
        per = [binary_metrics(*one_vs_rest(cm, k)) for k in range(c)]
    else:
        raise ValueError(f"unknown average {average!r}")
    precision = float(np.mean([m.precision for m in per]))
    recall = float(np.mean([m.recall for m in per]))
    specificity = float(np.mean([m.specificity for m in per]))
    flagged = any(m.zero_division for m in per)
    f, zf = _ratio(2 * precision * recall, precision + recall)
    return Metrics(accuracy, precision, recall, f, specificity, flagged or zf)


# -- cross-validation ------------------------------------------------------


@dataclass
class CVReport:
    model: str
    task: str
    k: int
    repetitions: int
    seed: int
    mean: dict
    std: dict
    per_repetition: list
    fold_confusions: list
    selected_features: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _fit_fold(args):
    x, y, spec, train, test, model_seed, n_classes = args
    scaler = Standardizer.fit(x[train])
    xtr, xte = scaler.transform(x[train]), scaler.transform(x[test])
    cols = list(range(x.shape[1]))
    if spec.select_k is not None and spec.select_k < x.shape[1]:
        f, _, _ = anova_f_values(xtr, y[train])
        cols = top_k(f, spec.select_k)
        xtr, xte = xtr[:, cols], xte[:, cols]
    model = build_model(spec, model_seed).fit(xtr, y[train])
    pred = model.predict(xte)
    return confusion_matrix(y[test], pred, n_classes), cols


def cross_validate(x, labels: Sequence[ClassLabel], spec: ModelSpec, k: int = 5, repetitions: int = 20,
                   seed: int = 0, workers: int = 1) -> CVReport:
    """Repeated stratified k-fold evaluation.

    Scaling statistics and any ANOVA feature selection are fitted on the
    training folds only.  Each repetition's metrics come from the sum of its
    out-of-fold confusion matrices; the report gives their mean and
    population standard deviation over repetitions.
    """
    x = np.asarray(x, dtype=np.float64)
    y = encode_labels(labels, spec.task)
    n_classes = len(TASKS[spec.task])
    jobs = []
    for r in range(repetitions):
        folds = stratified_kfold(y, k, seed + r)
        for f in range(k):
            train, test = folds.split(f)
            jobs.append((x, y, spec, train, test, derive_seed(seed + r, f), n_classes))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fit_fold, jobs))
    else:
        results = [_fit_fold(j) for j in jobs]
    per_rep, fold_cms, selections = [], [], []
    for r in range(repetitions):
        chunk = results[r * k : (r + 1) * k]
        cm = sum(c for c, _ in chunk)
        per_rep.append(evaluate(cm).to_dict())
        fold_cms.append([c.tolist() for c, _ in chunk])
        selections.append([cols for _, cols in chunk])
    table = np.array([[rep[name] for name in METRIC_NAMES] for rep in per_rep])
    return CVReport(
        model=spec.name,
        task=spec.task,
        k=k,
        repetitions=repetitions,
        seed=seed,
        mean={n: float(v) for n, v in zip(METRIC_NAMES, table.mean(axis=0))},
        std={n: float(v) for n, v in zip(METRIC_NAMES, table.std(axis=0))},
        per_repetition=per_rep,
        fold_confusions=fold_cms,
        selected_features=selections if spec.select_k is not None else [],
    )
