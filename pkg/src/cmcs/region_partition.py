"""Mini-batch k-means over (lat, lon) points and the per-cluster bounding boxes.

Each cluster's box becomes one recruitment region, served by its own
solver instance. Distances are haversine km throughout; centroid updates
move in degree space.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .geo import haversine

log = logging.getLogger(__name__)


@dataclass
class KMeansResult:
    centroids: np.ndarray
    counts: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int

    @property
    def k(self) -> int:
        return len(self.centroids)


def _as_points(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must be an (n, 2) array of (lat, lon), got shape {pts.shape}")
    if len(pts) == 0:
        raise ValueError("no points")
    if not np.isfinite(pts).all():
        raise ValueError("non-finite coordinates")
    return pts


def kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding under squared haversine distance."""
    n = len(points)
    first = int(rng.integers(n))
    chosen = {first}
    cents = [points[first]]
    _, d = kernels.nearest_centroid(points, np.array(cents))
    d2 = d * d
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            # every remaining point coincides with a centroid: take the first unused index
            nxt = next((i for i in range(n) if i not in chosen), first)
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        chosen.add(nxt)
        cents.append(points[nxt])
        _, dn = kernels.nearest_centroid(points, points[nxt : nxt + 1])
        d2 = np.minimum(d2, dn * dn)
    return np.array(cents)


def inertia(points, centroids, labels=None) -> float:
    """Sum of squared haversine distances (km^2) to the nearest (or given) centroid."""
    pts = _as_points(points)
    cents = np.ascontiguousarray(centroids, dtype=np.float64)
    if labels is None:
        _, d = kernels.nearest_centroid(pts, cents)
        return float(np.sum(d * d))
    c = cents[np.asarray(labels)]
    d = haversine(pts[:, 0], pts[:, 1], c[:, 0], c[:, 1])
    return float(np.sum(d * d))


def minibatch_kmeans(
    points,
    k: int,
    batch: int = 3100,
    max_iter: int = 100,
    seed: int = 0,
    tol: float = 1e-6,
    rate: str = "count",
) -> KMeansResult:
    """Mini-batch k-means with haversine assignment.

    ``rate="count"`` moves each touched centroid toward its batch members
    with learning rate 1/(cumulative count), which equals the running mean
    of every point it has absorbed; ``rate="batch_mean"`` jumps straight to
    the current batch mean. Stops after ``max_iter`` batches or when no
    centroid moves more than ``tol`` degrees, then assigns all points, sets
    each non-empty centroid to its members' mean and reassigns.
    """
    pts = _as_points(points)
    n = len(pts)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be between 1 and the number of points ({n})")
    if batch < 1:
        raise ValueError("batch must be >= 1")
    if rate not in ("count", "batch_mean"):
        raise ValueError("rate must be 'count' or 'batch_mean'")
    rng = np.random.default_rng(seed)
    b = min(batch, n)
    seed_pool = pts if b < k else pts[rng.choice(n, b, replace=False)]
    cents = kmeans_pp(seed_pool, k, rng)
    counts = np.zeros(k, dtype=np.int64)
    it = 0
    for it in range(1, max_iter + 1):
        sample = pts[rng.choice(n, b, replace=False)] if b < n else pts
        lab, _ = kernels.nearest_centroid(sample, cents)
        m = np.bincount(lab, minlength=k)
        sums = np.zeros((k, 2))
        np.add.at(sums, lab, sample)
        touched = m > 0
        new = cents.copy()
        if rate == "count":
            tot = counts + m
            new[touched] = (cents[touched] * counts[touched, None] + sums[touched]) / tot[touched, None]
        else:
            new[touched] = sums[touched] / m[touched, None]
        counts += m
        move = float(np.max(np.abs(new - cents)))
        cents = new
        if not np.isfinite(cents).all():
            raise FloatingPointError("non-finite centroid")
        if move < tol:
            break
    labels, _ = kernels.nearest_centroid(pts, cents)
    sums = np.zeros((k, 2))
    np.add.at(sums, labels, pts)
    size = np.bincount(labels, minlength=k)
    full = size > 0
    cents[full] = sums[full] / size[full, None]
    labels, d = kernels.nearest_centroid(pts, cents)
    return KMeansResult(cents, counts, labels, float(np.sum(d * d)), it)


def lloyd_kmeans(points, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-9):
    """Full-batch Lloyd iterations (k-means++ start), haversine assignment.

    Returns the result and the inertia after every assignment step.
    """
    pts = _as_points(points)
    rng = np.random.default_rng(seed)
    cents = kmeans_pp(pts, k, rng)
    history = []
    labels = None
    for it in range(1, max_iter + 1):
        labels, d = kernels.nearest_centroid(pts, cents)
        history.append(float(np.sum(d * d)))
        sums = np.zeros((k, 2))
        np.add.at(sums, labels, pts)
        size = np.bincount(labels, minlength=k)
        new = cents.copy()
        new[size > 0] = sums[size > 0] / size[size > 0, None]
        move = float(np.max(np.abs(new - cents)))
        cents = new
        if move < tol:
            break
    labels, d = kernels.nearest_centroid(pts, cents)
    return KMeansResult(cents, np.bincount(labels, minlength=k), labels, float(np.sum(d * d)), it), history


@dataclass(frozen=True)
class Region:
    """Bounding box of one cluster; ``bounds`` is (lon_max, lat_max, lon_min, lat_min)."""

    id: int
    bounds: tuple[float, float, float, float]
    centroid: tuple[float, float]
    n_points: int = 0

    @property
    def lon_max(self) -> float:
        return self.bounds[0]

    @property
    def lat_max(self) -> float:
        return self.bounds[1]

    @property
    def lon_min(self) -> float:
        return self.bounds[2]

    @property
    def lat_min(self) -> float:
        return self.bounds[3]

    def contains(self, loc) -> bool:
        lat, lon = loc
        return self.lat_min <= lat <= self.lat_max and self.lon_min <= lon <= self.lon_max

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Uniform (lat, lon) points inside the box."""
        lat = rng.uniform(self.lat_min, self.lat_max, size)
        lon = rng.uniform(self.lon_min, self.lon_max, size)
        return np.column_stack([lat, lon])


def region_bounds(points, labels, centroids) -> list[Region]:
    """One region per cluster; an empty cluster becomes a point box at its centroid."""
    pts = _as_points(points)
    labels = np.asarray(labels)
    cents = np.asarray(centroids, dtype=np.float64)
    out = []
    for c in range(len(cents)):
        mem = pts[labels == c]
        if len(mem) == 0:
            lat, lon = cents[c]
            bounds = (lon, lat, lon, lat)
        else:
            bounds = (mem[:, 1].max(), mem[:, 0].max(), mem[:, 1].min(), mem[:, 0].min())
        out.append(Region(c, tuple(float(x) for x in bounds), (float(cents[c, 0]), float(cents[c, 1])), len(mem)))
    return out


def assign_to_region(loc, regions: Sequence[Region]) -> int:
    """Id of the region with the nearest centroid; ties go to the lowest id."""
    if not regions:
        raise ValueError("no regions")
    regions = sorted(regions, key=lambda r: r.id)
    cents = np.array([r.centroid for r in regions])
    lab, _ = kernels.nearest_centroid(np.array([loc], dtype=np.float64), cents)
    return regions[int(lab[0])].id


def partition(points, k: int = 100, batch: int = 3100, seed: int = 0, **kw) -> tuple[list[Region], KMeansResult]:
    res = minibatch_kmeans(points, k, batch=batch, seed=seed, **kw)
    return region_bounds(points, res.labels, res.centroids), res


def save_regions(regions: Sequence[Region], path: str | Path) -> None:
    data = [{"id": r.id, "bounds": list(r.bounds), "centroid": list(r.centroid), "n_points": r.n_points}
            for r in regions]
    Path(path).write_text(json.dumps({"regions": data}, indent=1))


def load_regions(path: str | Path) -> list[Region]:
    data = json.loads(Path(path).read_text())
    return [Region(int(r["id"]), tuple(r["bounds"]), tuple(r["centroid"]), int(r.get("n_points", 0)))
            for r in data["regions"]]
