"""Synthetic classification data labeled by randomly placed, FIFO-ordered spheres."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, FormatError
from .rng import make_rng


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float
    label: int

    def __post_init__(self):
        if not self.radius > 0:
            raise ArgumentError("sphere radius must be positive")


@dataclass
class SpheresDataset:
    dim: int
    classes: int
    spheres: list
    points: np.ndarray  # (N, dim)
    labels: np.ndarray  # (N,) int
    bounds: np.ndarray  # (dim, 2)
    radius_range: tuple
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.labels)

    def one_hot(self, idx=None) -> np.ndarray:
        y = self.labels if idx is None else self.labels[idx]
        out = np.zeros((len(y), self.classes))
        out[np.arange(len(y)), y] = 1.0
        return out

    def subset(self, idx) -> "SpheresDataset":
        idx = np.asarray(idx, dtype=int)
        return SpheresDataset(
            self.dim, self.classes, self.spheres, self.points[idx], self.labels[idx], self.bounds, self.radius_range, self.seed
        )


def get_label(spheres: Sequence[Sphere], x) -> int | None:
    """Label of the first sphere strictly containing ``x``, or None."""
    x = np.asarray(x, dtype=float)
    for s in spheres:
        if s.center.shape != x.shape:
            raise ArgumentError(f"point has dimension {x.size}, sphere has {s.center.size}")
        if float(np.sum((x - s.center) ** 2)) < s.radius**2:
            return s.label
    return None


def _check_bounds(bounds, dim) -> np.ndarray:
    b = np.asarray(bounds, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (dim, 1))
    if b.shape != (dim, 2):
        raise ArgumentError(f"bounds must have shape ({dim}, 2)")
    if np.any(b[:, 0] >= b[:, 1]):
        raise ArgumentError("every lower bound must be below its upper bound")
    return b


def generate(dim: int, classes: int, n: int, radius_range, bounds, seed) -> SpheresDataset:
    """Sample ``n`` uniform points; uncovered points spawn a new sphere at themselves."""
    if dim < 1:
        raise ArgumentError("dim must be positive")
    if n < 1:
        raise ArgumentError("n must be positive")
    if classes < 2:
        raise ArgumentError("need at least two classes")
    r_lo, r_hi = (float(r) for r in radius_range)
    if not 0 < r_lo <= r_hi:
        raise ArgumentError("radius range must satisfy 0 < r_lo <= r_hi")
    b = _check_bounds(bounds, dim)
    rng = make_rng(seed)
    spheres: list = []
    points = np.empty((n, dim))
    labels = np.empty(n, dtype=np.int64)
    centers = np.empty((0, dim))
    radii_sq = np.empty(0)
    for i in range(n):
        x = rng.uniform(b[:, 0], b[:, 1])
        inside = np.nonzero(np.sum((centers - x) ** 2, axis=1) < radii_sq)[0]
        if inside.size:
            label = spheres[inside[0]].label
        else:
            r = float(rng.uniform(r_lo, r_hi))
            label = int(rng.integers(0, classes))
            spheres.append(Sphere(x.copy(), r, label))
            centers = np.vstack([centers, x])
            radii_sq = np.append(radii_sq, r * r)
        points[i] = x
        labels[i] = label
    return SpheresDataset(dim, classes, spheres, points, labels, b, (r_lo, r_hi), None if seed is None else int(seed))


def split_indices(n: int, fractions, seed) -> tuple:
    fr = [float(f) for f in fractions]
    if len(fr) != 3 or any(f <= 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
        raise ArgumentError("fractions must be three positive numbers summing to 1")
    n_valid = int(np.floor(fr[1] * n))
    n_test = int(np.floor(fr[2] * n))
    n_train = n - n_valid - n_test
    perm = make_rng(seed).permutation(n)
    return perm[:n_train], perm[n_train : n_train + n_valid], perm[n_train + n_valid :]


def split(ds: SpheresDataset, fractions=(0.7, 0.15, 0.15), seed=0) -> tuple:
    """Disjoint train/valid/test subsets; floor sizes, remainder goes to train."""
    return tuple(ds.subset(idx) for idx in split_indices(len(ds), fractions, seed))


def dataset_to_dict(ds: SpheresDataset) -> dict:
    return {
        "dim": ds.dim,
        "classes": ds.classes,
        "bounds": ds.bounds.tolist(),
        "radius_range": list(ds.radius_range),
        "seed": ds.seed,
        "spheres": [{"center": s.center.tolist(), "radius": s.radius, "label": s.label} for s in ds.spheres],
        "samples": [{"x": x.tolist(), "y": int(y)} for x, y in zip(ds.points, ds.labels)],
    }


def dataset_from_dict(d: dict) -> SpheresDataset:
    try:
        dim = int(d["dim"])
        spheres = [Sphere(np.asarray(s["center"], dtype=float), float(s["radius"]), int(s["label"])) for s in d["spheres"]]
        samples = d["samples"]
        points = np.asarray([s["x"] for s in samples], dtype=float).reshape(len(samples), dim)
        labels = np.asarray([s["y"] for s in samples], dtype=np.int64)
        return SpheresDataset(
            dim, int(d["classes"]), spheres, points, labels,
            np.asarray(d["bounds"], dtype=float), tuple(d["radius_range"]), d.get("seed"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed dataset document: {exc}") from exc


def save_dataset(ds: SpheresDataset, path) -> None:
    with open(path, "w") as fh:
        json.dump(dataset_to_dict(ds), fh)
        fh.write("\n")


def load_dataset(path) -> SpheresDataset:
    with open(path) as fh:
        try:
            return dataset_from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise FormatError(str(exc)) from exc
