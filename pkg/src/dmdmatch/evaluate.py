"""Identification and verification metrics over query x gallery scores.

A score ``s`` is accepted at threshold ``t`` when ``s >= t``. Ranking ties
go to the lower gallery index.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import TemplateError
from .relaxation import PRESETS, MatchParams, match_templates


@dataclass
class ScoreMatrix:
    scores: np.ndarray          # (queries, gallery)
    query_ids: list[str]
    gallery_ids: list[str]
    query_labels: list[str] | None = None
    gallery_labels: list[str] | None = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.query_labels is None:
            self.query_labels = [label_of(i) for i in self.query_ids]
        if self.gallery_labels is None:
            self.gallery_labels = [label_of(i) for i in self.gallery_ids]
        nq, ng = self.scores.shape
        if not (len(self.query_ids) == len(self.query_labels) == nq
                and len(self.gallery_ids) == len(self.gallery_labels) == ng):
            raise ValueError("labels do not match score matrix dimensions")

    def genuine_mask(self) -> np.ndarray:
        q = np.asarray(self.query_labels, dtype=object)[:, None]
        g = np.asarray(self.gallery_labels, dtype=object)[None, :]
        return q == g

    def split(self) -> tuple[np.ndarray, np.ndarray]:
        """Genuine and impostor score arrays."""
        mask = self.genuine_mask()
        return self.scores[mask], self.scores[~mask]


def label_of(identifier: str) -> str:
    """Finger label from an ``<fingerid>_<impression>`` identifier."""
    head, sep, _ = identifier.rpartition("_")
    return head if sep else identifier


def _score_rows(args):
    queries, gallery, params = args
    return [[match_templates(q, g, params).score for g in gallery] for q in queries]


def score_all(queries, gallery, params: MatchParams = PRESETS["verifinger"],
              workers: int = 1, query_ids=None, gallery_ids=None) -> ScoreMatrix:
    """Match every query against every gallery template.

    Work is split by query rows; each entry is computed by the same
    single-threaded call whatever ``workers`` is, so results do not depend
    on it.
    """
    queries, gallery = list(queries), list(gallery)
    if not queries or not gallery:
        raise TemplateError("queries and gallery must be nonempty")
    flavors = {t.flavor for t in queries + gallery}
    if len(flavors) > 1:
        raise TemplateError("mixed template flavors")
    query_ids = list(query_ids) if query_ids is not None else [str(i) for i in range(len(queries))]
    gallery_ids = list(gallery_ids) if gallery_ids is not None else [str(j) for j in range(len(gallery))]
    if workers <= 1 or len(queries) == 1:
        rows = _score_rows((queries, gallery, params))
    else:
        n_chunks = min(len(queries), workers * 4)
        bounds = np.linspace(0, len(queries), n_chunks + 1).astype(int)
        jobs = [(queries[a:b], gallery, params) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [row for chunk in pool.map(_score_rows, jobs) for row in chunk]
    return ScoreMatrix(np.array(rows, dtype=np.float64), query_ids, gallery_ids)


def _genuine_ranks(sm: ScoreMatrix) -> np.ndarray:
    """1-based rank of the best-placed genuine entry for each query."""
    genuine = sm.genuine_mask()
    if not genuine.any(axis=1).all():
        missing = [sm.query_ids[i] for i in np.flatnonzero(~genuine.any(axis=1))]
        raise ValueError(f"queries without a genuine mate: {missing}")
    ranks = np.empty(len(sm.scores), dtype=np.int64)
    for i, row in enumerate(sm.scores):
        order = np.lexsort((np.arange(len(row)), -row))
        positions = np.flatnonzero(genuine[i, order])
        ranks[i] = positions[0] + 1
    return ranks


def rank_k_accuracy(sm: ScoreMatrix, k: int = 1) -> float:
    return float(np.mean(_genuine_ranks(sm) <= k))


def cmc_curve(sm: ScoreMatrix, max_rank: int | None = None) -> list[tuple[int, float]]:
    ranks = _genuine_ranks(sm)
    max_rank = max_rank or sm.scores.shape[1]
    return [(k, float(np.mean(ranks <= k))) for k in range(1, max_rank + 1)]


def _check_lists(genuine, impostor):
    genuine = np.asarray(genuine, dtype=np.float64).ravel()
    impostor = np.asarray(impostor, dtype=np.float64).ravel()
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("genuine and impostor score lists must be nonempty")
    return genuine, impostor


def far_threshold(impostor, far: float) -> float:
    """Lowest impostor score whose accept rate is at most ``far``.

    If no observed impostor score qualifies, the threshold sits just above
    the highest impostor.
    """
    imp = np.sort(np.asarray(impostor, dtype=np.float64))
    n = len(imp)
    for t in np.unique(imp):
        accepted = n - np.searchsorted(imp, t, side="left")
        if accepted / n <= far:
            return float(t)
    return float(np.nextafter(imp[-1], np.inf))


def tar_at_far(genuine, impostor, far: float) -> float:
    genuine, impostor = _check_lists(genuine, impostor)
    if not 0.0 < far < 1.0:
        raise ValueError("far must lie in (0, 1)")
    t = far_threshold(impostor, far)
    return float(np.mean(genuine >= t))


def det_curve(genuine, impostor, points: int = 100) -> list[tuple[float, float]]:
    """(FAR, FNMR) at thresholds swept upward over the observed scores."""
    genuine, impostor = _check_lists(genuine, impostor)
    thresholds = np.unique(np.concatenate([genuine, impostor]))
    if points and len(thresholds) > points:
        pick = np.unique(np.round(np.linspace(0, len(thresholds) - 1, points)).astype(int))
        thresholds = thresholds[pick]
    g = np.sort(genuine)
    imp = np.sort(impostor)
    far = (len(imp) - np.searchsorted(imp, thresholds, side="left")) / len(imp)
    tar = (len(g) - np.searchsorted(g, thresholds, side="left")) / len(g)
    return [(float(a), float(1.0 - b)) for a, b in zip(far, tar)]


# CSV exchange

def write_scores_csv(sm: ScoreMatrix, sink) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["query"] + list(sm.gallery_ids))
    for qid, row in zip(sm.query_ids, sm.scores):
        w.writerow([qid] + [repr(float(v)) for v in row])


def scores_to_csv(sm: ScoreMatrix) -> str:
    buf = io.StringIO()
    write_scores_csv(sm, buf)
    return buf.getvalue()


def read_scores_csv(source) -> ScoreMatrix:
    rows = [r for r in csv.reader(source) if r]
    if len(rows) < 2 or len(rows[0]) < 2:
        raise ValueError("score CSV needs a header and at least one query row")
    gallery_ids = rows[0][1:]
    query_ids, values = [], []
    for n, r in enumerate(rows[1:], start=2):
        if len(r) != len(gallery_ids) + 1:
            raise ValueError(f"line {n}: expected {len(gallery_ids) + 1} fields, got {len(r)}")
        query_ids.append(r[0])
        try:
            values.append([float(v) for v in r[1:]])
        except ValueError as exc:
            raise ValueError(f"line {n}: {exc}") from None
    return ScoreMatrix(np.array(values), query_ids, gallery_ids)


def write_curve_csv(points, header, sink) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(header)
    for point in points:
        w.writerow([v if isinstance(v, (int, np.integer)) else repr(float(v)) for v in point])
