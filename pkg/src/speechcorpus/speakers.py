"""Two-stage speaker labeling.

Stage one runs per recording: preprocess embeddings, pick the cluster count
k* by a consensus vote of four estimators, cluster with agglomerative and
spectral methods, keep the higher-silhouette result, and attach a confidence
to every segment. Stage two merges the confidence-weighted local-cluster
centroids across recordings into global speaker identities.

Determinism: all seeds are explicit and the optional dimensionality
reduction defaults to off, so every operation is bit-stable across runs.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import HDBSCAN, AgglomerativeClustering, SpectralClustering
from sklearn.manifold import SpectralEmbedding
from sklearn.metrics import (
    calinski_harabasz_score,
    davies_bouldin_score,
    silhouette_samples,
    silhouette_score,
)

from .providers import Embedding

DEFAULT_CONFIDENCE_FLOOR = 0.35
DEFAULT_MERGE_THRESHOLD = 0.25


@dataclass(frozen=True)
class SpeakerConfig:
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR
    merge_threshold: float = DEFAULT_MERGE_THRESHOLD
    k_max: int = 10  # effective max is min(k_max, n // 5)
    reduce_dim: Optional[int] = None  # None disables reduction (the tested path)
    seed: int = 0


@dataclass
class PreprocessResult:
    embeddings: List[Embedding]
    kept_indices: List[int]


@dataclass
class LocalClusterResult:
    assignments: np.ndarray  # local cluster id per point
    confidences: np.ndarray  # c_i per point
    k_star: int
    method: str  # agglomerative | spectral
    silhouette: float
    unassigned: np.ndarray  # True where c_i fell below the confidence floor


@dataclass(frozen=True)
class LocalClusterSummary:
    """One local cluster prepared for the global merge."""

    recording_id: str
    local_cluster: int
    centroid: np.ndarray  # confidence-weighted, L2-normalized
    weight: float  # sum of member confidences


@dataclass
class GlobalSpeaker:
    global_id: int
    centroid: np.ndarray
    member_local_clusters: List[Tuple[str, int, float]] = field(default_factory=list)


def _as_matrix(embeddings: Sequence[Embedding]) -> np.ndarray:
    return np.stack([e.vector for e in embeddings])


def _l2_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / np.maximum(norms, 1e-30)


def preprocess_embeddings(
    embeddings: Sequence[Embedding], cfg: SpeakerConfig = SpeakerConfig()
) -> PreprocessResult:
    """Outlier removal (3 sigma from the global centroid), L2 normalization,
    optional nonlinear reduction to cfg.reduce_dim."""
    if len(embeddings) < 2:
        raise ValueError("need at least 2 embeddings to preprocess")
    matrix = _as_matrix(embeddings)
    centroid = matrix.mean(axis=0)
    dists = np.linalg.norm(matrix - centroid, axis=1)
    cutoff = dists.mean() + 3.0 * dists.std()
    kept = [i for i in range(len(matrix)) if dists[i] <= cutoff + 1e-12]
    matrix = _l2_rows(matrix[kept])
    if cfg.reduce_dim is not None and len(kept) > cfg.reduce_dim + 1:
        reducer = SpectralEmbedding(
            n_components=cfg.reduce_dim, affinity="rbf", random_state=cfg.seed
        )
        matrix = reducer.fit_transform(matrix)
    return PreprocessResult(
        embeddings=[Embedding(vector=row) for row in matrix], kept_indices=kept
    )


def _agglomerative(points: np.ndarray, k: int, linkage: str = "ward") -> np.ndarray:
    if linkage == "ward":
        model = AgglomerativeClustering(n_clusters=k, linkage="ward")
    else:
        model = AgglomerativeClustering(n_clusters=k, linkage=linkage, metric="cosine")
    return model.fit_predict(points)


def estimate_k(
    points: np.ndarray, k_range: Tuple[int, int], cfg: SpeakerConfig = SpeakerConfig()
) -> int:
    """Consensus cluster count: votes from silhouette, Calinski-Harabasz,
    Davies-Bouldin, and HDBSCAN; strict majority wins, else the lower median."""
    points = np.asarray(points)
    n = len(points)
    k_min, k_max = k_range
    if k_min < 2:
        raise ValueError("k_range lower bound must be >= 2")
    if n < k_max + 1:
        k_max = max(k_min, n - 1)
        warnings.warn(f"too few points for requested k range; shrinking to [{k_min}, {k_max}]")
    if n <= 2 or k_max < k_min:
        return 1 if n < 2 else k_min

    best = {"silhouette": (k_min, -np.inf), "ch": (k_min, -np.inf), "db": (k_min, np.inf)}
    for k in range(k_min, k_max + 1):
        labels = _agglomerative(points, k)
        if len(set(labels)) < 2:
            continue
        sil = silhouette_score(points, labels)
        ch = calinski_harabasz_score(points, labels)
        db = davies_bouldin_score(points, labels)
        if sil > best["silhouette"][1]:
            best["silhouette"] = (k, sil)
        if ch > best["ch"][1]:
            best["ch"] = (k, ch)
        if db < best["db"][1]:
            best["db"] = (k, db)

    hdb_labels = HDBSCAN(min_cluster_size=max(2, n // (k_max * 2) or 2)).fit_predict(points)
    hdb_k = int(hdb_labels.max()) + 1 if hdb_labels.max() >= 0 else 1
    hdb_k = min(max(hdb_k, k_min), k_max)

    votes = [best["silhouette"][0], best["ch"][0], best["db"][0], hdb_k]
    counts = Counter(votes)
    winner, count = counts.most_common(1)[0]
    if count >= 3:  # strict majority of four
        return winner
    ordered = sorted(votes)
    return ordered[(len(ordered) - 1) // 2]  # lower median on ties


def cluster_local(
    points: np.ndarray, k_star: int, cfg: SpeakerConfig = SpeakerConfig()
) -> LocalClusterResult:
    """Cluster one recording's embeddings into k_star speakers with confidences."""
    points = np.asarray(points)
    n = len(points)
    if k_star < 1:
        raise ValueError("k_star must be >= 1")
    if k_star == 1 or n <= 2 or float(np.ptp(points)) < 1e-12:
        return LocalClusterResult(
            assignments=np.zeros(n, dtype=int),
            confidences=np.ones(n),
            k_star=1,
            method="agglomerative",
            silhouette=1.0,
            unassigned=np.zeros(n, dtype=bool),
        )

    agg_labels = _agglomerative(points, k_star, linkage="average")
    candidates = [("agglomerative", agg_labels)]
    try:
        sim = np.clip(points @ points.T, 0.0, None)
        spec_labels = SpectralClustering(
            n_clusters=k_star, affinity="precomputed", random_state=cfg.seed,
            assign_labels="kmeans",
        ).fit_predict(sim)
        candidates.append(("spectral", spec_labels))
    except Exception:  # degenerate affinity; agglomerative result stands
        pass

    scored = []
    for method, labels in candidates:
        if len(set(labels)) < 2:
            scored.append((method, labels, -1.0))
        else:
            scored.append((method, labels, float(silhouette_score(points, labels, metric="cosine"))))
    # tie goes to agglomerative (listed first, strict comparison)
    method, labels, overall = scored[0]
    for m, l, s in scored[1:]:
        if s > overall:
            method, labels, overall = m, l, s

    if len(set(labels)) < 2:
        s_i = np.ones(n)
    else:
        s_i = silhouette_samples(points, labels, metric="cosine")
    centroids = np.stack(
        [_l2_rows(points[labels == c].mean(axis=0, keepdims=True))[0] for c in range(k_star)]
    )
    # relative distance: own-centroid distance against the farthest centroid,
    # so points deep inside a cluster approach 1 and midpoints approach 0
    dist = np.clip(1.0 - points @ centroids.T, 0.0, None)
    d_own = dist[np.arange(n), labels]
    d_max = np.maximum(dist.max(axis=1), 1e-12)
    proximity = 1.0 - d_own / d_max
    confidences = np.clip(0.5 * (s_i + 1.0) / 2.0 + 0.5 * proximity, 0.0, 1.0)
    return LocalClusterResult(
        assignments=np.asarray(labels, dtype=int),
        confidences=confidences,
        k_star=k_star,
        method=method,
        silhouette=overall,
        unassigned=confidences < cfg.confidence_floor,
    )


def summarize_local_clusters(
    recording_id: str, points: np.ndarray, result: LocalClusterResult
) -> List[LocalClusterSummary]:
    """Confidence-weighted centroid per local cluster, skipping unassigned points."""
    summaries = []
    for c in range(result.k_star):
        mask = (result.assignments == c) & ~result.unassigned
        if not mask.any():
            continue
        weights = result.confidences[mask]
        centroid = (points[mask] * weights[:, None]).sum(axis=0) / weights.sum()
        centroid = centroid / max(np.linalg.norm(centroid), 1e-30)
        summaries.append(
            LocalClusterSummary(
                recording_id=recording_id,
                local_cluster=c,
                centroid=centroid,
                weight=float(weights.sum()),
            )
        )
    return summaries


def merge_global(
    locals_: Sequence[LocalClusterSummary],
    merge_threshold: float = DEFAULT_MERGE_THRESHOLD,
) -> List[GlobalSpeaker]:
    """Merge local clusters into global identities by average-linkage
    agglomerative clustering over cosine distance, cut at merge_threshold.
    Groups whose mean internal similarity falls below 1 - merge_threshold
    are dissolved back into singletons."""
    if not locals_:
        raise ValueError("need at least one local cluster")
    ordered = sorted(locals_, key=lambda s: (s.recording_id, s.local_cluster))
    centroids = np.stack([s.centroid for s in ordered])
    n = len(ordered)
    if n == 1:
        groups = [[0]]
    else:
        sim = centroids @ centroids.T
        dist = np.clip(1.0 - sim, 0.0, None)
        np.fill_diagonal(dist, 0.0)
        labels = AgglomerativeClustering(
            n_clusters=None,
            metric="precomputed",
            linkage="average",
            distance_threshold=merge_threshold,
        ).fit_predict(dist)
        groups = [list(np.flatnonzero(labels == c)) for c in range(labels.max() + 1)]
        # dissolve low-cohesion groups
        dissolved = []
        for group in groups:
            if len(group) > 1:
                block = sim[np.ix_(group, group)]
                mean_sim = (block.sum() - len(group)) / (len(group) * (len(group) - 1))
                if mean_sim < 1.0 - merge_threshold:
                    dissolved.extend([[i] for i in group])
                    continue
            dissolved.append(group)
        groups = dissolved

    groups.sort(key=lambda g: min(g))
    speakers = []
    for gid, group in enumerate(groups):
        members = [ordered[i] for i in group]
        weights = np.array([m.weight for m in members])
        centroid = (np.stack([m.centroid for m in members]) * weights[:, None]).sum(axis=0)
        centroid /= weights.sum()
        centroid /= max(np.linalg.norm(centroid), 1e-30)
        speakers.append(
            GlobalSpeaker(
                global_id=gid,
                centroid=centroid,
                member_local_clusters=[
                    (m.recording_id, m.local_cluster, m.weight) for m in members
                ],
            )
        )
    return speakers


def consistency_report(
    assignments: Mapping[str, Sequence[Optional[int]]],
    metadata_labels: Mapping[str, Sequence[str]],
) -> Optional[float]:
    """Percent of single-narrator recordings whose majority global id maps to
    the narrator under the best one-to-one matching. None when no recording
    has usable labels."""
    majority: Dict[str, int] = {}
    for rec, gids in assignments.items():
        counted = Counter(g for g in gids if g is not None)
        if counted:
            top = max(counted.items(), key=lambda kv: (kv[1], -kv[0]))
            majority[rec] = top[0]

    labeled = [
        (rec, labels[0])
        for rec, labels in metadata_labels.items()
        if len(labels) == 1 and rec in majority
    ]
    if not labeled:
        return None

    narrators = sorted({narrator for _, narrator in labeled})
    gids = sorted({majority[rec] for rec, _ in labeled})
    counts = np.zeros((len(narrators), len(gids)))
    for rec, narrator in labeled:
        counts[narrators.index(narrator), gids.index(majority[rec])] += 1
    rows, cols = linear_sum_assignment(-counts)
    matched = counts[rows, cols].sum()
    return 100.0 * matched / len(labeled)
