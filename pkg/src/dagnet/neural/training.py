"""Losses, gradients, minibatch SGD and classification metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ArgumentError
from ..rng import make_rng
from .network import MaskedNetwork

LOSSES = ("cross_entropy", "mse", "mae")
CE_EPS = 1e-12


@dataclass(frozen=True)
class TrainScheme:
    learning_rate: float = 0.1
    batch_size: int = 32
    epochs: int = 100
    loss: str = "cross_entropy"
    seed: int = 0
    standardize_inputs: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ArgumentError("learning rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ArgumentError("batch size and epochs must be positive")
        if self.loss not in LOSSES:
            raise ArgumentError(f"loss must be one of {LOSSES}")

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(pred, target) -> tuple:
    pred = np.atleast_2d(np.asarray(pred, dtype=float))
    target = np.atleast_2d(np.asarray(target, dtype=float))
    if pred.shape != target.shape:
        raise ArgumentError(f"prediction shape {pred.shape} != target shape {target.shape}")
    return pred, target


def loss(kind: str, pred, target) -> float:
    """Batch-mean loss; MSE and MAE sum over output coordinates per sample."""
    pred, target = _pair(pred, target)
    if kind == "cross_entropy":
        per = -np.sum(target * np.log(np.clip(pred, CE_EPS, 1.0)), axis=1)
    elif kind == "mse":
        per = np.sum((pred - target) ** 2, axis=1)
    elif kind == "mae":
        per = np.sum(np.abs(pred - target), axis=1)
    else:
        raise ArgumentError(f"unknown loss {kind!r}")
    return float(per.mean())


def loss_grad(kind: str, pred, target) -> np.ndarray:
    pred, target = _pair(pred, target)
    b = pred.shape[0]
    if kind == "cross_entropy":
        inside = pred > CE_EPS
        return np.where(inside, -target / np.where(inside, pred, 1.0), 0.0) / b
    if kind == "mse":
        return 2.0 * (pred - target) / b
    if kind == "mae":
        return np.sign(pred - target) / b
    raise ArgumentError(f"unknown loss {kind!r}")


def backward(net: MaskedNetwork, X, Y, kind: str) -> tuple:
    """Loss value and gradients for every parameter; masked entries are 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0:
        raise ArgumentError("batch must not be empty")
    _, tr = net.forward(X, trace=True)
    value = loss(kind, tr.pred, Y)
    return value, net.backward_from(tr, loss_grad(kind, tr.pred, Y))


def sgd_step(net: MaskedNetwork, grads: dict, lr: float) -> MaskedNetwork:
    net.sgd_step(grads, lr)
    return net


def set_input_standardization(net: MaskedNetwork, X) -> None:
    X = np.asarray(X, dtype=float)
    std = X.std(axis=0)
    net.input_mean = X.mean(axis=0)
    net.input_std = np.where(std > 0, std, 1.0)


def train(net: MaskedNetwork, X, Y, scheme: TrainScheme) -> list:
    """Minibatch SGD in place; returns the mean training loss of each epoch."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[0] == 0:
        raise ArgumentError("training set is empty")
    if Y.ndim != 2 or Y.shape[1] != net.spec.output_dim:
        raise ArgumentError(f"targets must have {net.spec.output_dim} columns")
    if scheme.standardize_inputs:
        set_input_standardization(net, X)
    rng = make_rng(scheme.seed)
    n = X.shape[0]
    history = []
    for _ in range(scheme.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, scheme.batch_size):
            idx = order[start : start + scheme.batch_size]
            value, grads = backward(net, X[idx], Y[idx], scheme.loss)
            net.sgd_step(grads, scheme.learning_rate)
            total += value * len(idx)
        history.append(total / n)
    return history


# -- metrics -----------------------------------------------------------------

def confusion_matrix(actual, predicted, classes: int) -> np.ndarray:
    cm = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(actual, dtype=int), np.asarray(predicted, dtype=int)), 1)
    return cm


def _safe_div(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.divide(a, b, out=np.zeros_like(a), where=b != 0)


def metrics_from_confusion(cm: np.ndarray) -> dict:
    """Accuracy plus one-vs-rest precision, recall and F1 (0/0 counts as 0)."""
    cm = np.asarray(cm)
    total = cm.sum()
    tp = np.diag(cm).astype(float)
    precision = _safe_div(tp, cm.sum(axis=0))
    recall = _safe_div(tp, cm.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return {
        "accuracy": float(tp.sum() / total) if total else 0.0,
        "precision": precision.tolist(),
        "recall": recall.tolist(),
        "f1": f1.tolist(),
        "f1_macro": float(f1.mean()),
    }


def evaluate(net: MaskedNetwork, X, labels, loss_kind: str = "cross_entropy") -> dict:
    """Argmax classification metrics, the confusion matrix and the loss."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if X.shape[0] == 0:
        raise ArgumentError("evaluation set is empty")
    pred = net.forward(X)
    c = net.spec.output_dim
    cm = confusion_matrix(labels, pred.argmax(axis=1), c)
    out = metrics_from_confusion(cm)
    onehot = np.zeros((len(labels), c))
    onehot[np.arange(len(labels)), labels] = 1.0
    out["loss"] = loss(loss_kind, pred, onehot)
    out["confusion"] = cm
    return out


def accuracy(net: MaskedNetwork, X, labels) -> float:
    return float(np.mean(net.forward(X).argmax(axis=1) == np.asarray(labels)))
