"""Synthetic stand-ins for the trust and check-in datasets.

Trust graphs: each node has a latent skill (the level it tends to be
certified at) and a trustor bias; edges pick trustors by activity and
trustees by popularity, both heavy tailed, popularity growing with skill.
Check-ins: users hop between a few city-sized Gaussian clusters.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from ..graph_store import CheckIns, TrustGraph, TrustLevel


def trust_graph(n_nodes: int = 1000, n_edges: int = 8000, seed: int = 0, noise: float = 0.45,
                skill_probs=(0.15, 0.3, 0.35, 0.2)) -> TrustGraph:
    rng = np.random.default_rng(seed)
    skill = rng.choice(4, size=n_nodes, p=skill_probs).astype(float)
    bias = rng.normal(0.0, 0.35, n_nodes)
    popularity = np.exp(0.7 * skill + rng.normal(0.0, 1.0, n_nodes))
    activity = np.exp(rng.normal(0.0, 1.0, n_nodes))
    popularity /= popularity.sum()
    activity /= activity.sum()
    ids = [f"n{i:05d}" for i in range(n_nodes)]
    edges: dict[tuple[str, str], TrustLevel] = {}
    target = min(n_edges, n_nodes * (n_nodes - 1))
    while len(edges) < target:
        m = target - len(edges)
        src = rng.choice(n_nodes, size=2 * m, p=activity)
        dst = rng.choice(n_nodes, size=2 * m, p=popularity)
        lvl = np.clip(np.rint(skill[dst] + bias[src] + rng.normal(0.0, noise, 2 * m)), 0, 3).astype(int)
        for a, b, l in zip(src.tolist(), dst.tolist(), lvl.tolist()):
            if a != b and (ids[a], ids[b]) not in edges:
                edges[(ids[a], ids[b])] = TrustLevel(l)
                if len(edges) >= target:
                    break
    return TrustGraph(edges, ids)


def checkins(n_users: int = 2000, n_cities: int = 12, per_user_mean: float = 20.0, seed: int = 0,
             city_spread_deg: float = 0.35, bbox=(25.0, 50.0, -125.0, -70.0)) -> CheckIns:
    """Heavy-tailed per-user check-in counts over clustered city locations."""
    rng = np.random.default_rng(seed)
    lat0, lat1, lon0, lon1 = bbox
    cities = np.column_stack([rng.uniform(lat0, lat1, n_cities), rng.uniform(lon0, lon1, n_cities)])
    weights = rng.dirichlet(np.ones(n_cities))
    counts = np.maximum(1, rng.lognormal(np.log(per_user_mean) - 0.5, 1.0, n_users).astype(int))
    home = rng.choice(n_cities, size=n_users, p=weights)
    users, lat, lon, ts = [], [], [], []
    t0 = pd.Timestamp("2009-02-01", tz="UTC").value // 10**9
    for u in range(n_users):
        c = counts[u]
        city = np.where(rng.random(c) < 0.85, home[u], rng.choice(n_cities, size=c, p=weights))
        pts = cities[city] + rng.normal(0.0, city_spread_deg, (c, 2))
        users += [f"u{u:06d}"] * c
        lat.append(np.clip(pts[:, 0], -90, 90))
        lon.append(np.clip(pts[:, 1], -180, 180))
        ts.append(np.sort(t0 + rng.integers(0, 600 * 86400, c)))
    frame = pd.DataFrame({
        "user_id": users,
        "timestamp": pd.to_datetime(np.concatenate(ts), unit="s", utc=True),
        "lat": np.concatenate(lat),
        "lon": np.concatenate(lon),
    })
    return CheckIns(frame)


def blobs(n_blobs: int, per_blob: int, spread_deg: float, seed: int = 0, separation_deg: float = 10.0):
    """Gaussian (lat, lon) blobs on a grid ``separation_deg`` apart, with their labels."""
    rng = np.random.default_rng(seed)
    side = int(np.ceil(np.sqrt(n_blobs)))
    centers = np.array([(i // side, i % side) for i in range(n_blobs)], dtype=float) * separation_deg
    centers += np.array([20.0, -20.0])
    pts = np.concatenate([c + rng.normal(0.0, spread_deg, (per_blob, 2)) for c in centers])
    labels = np.repeat(np.arange(n_blobs), per_blob)
    return pts, labels
