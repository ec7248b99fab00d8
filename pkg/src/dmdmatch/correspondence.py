"""Minutiae correspondence tooling: seed pairs, RANSAC affine filter, FPS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Template, TemplateError
from .similarity import similarity_matrix

COLLINEAR_AREA = 1e-6
DEFAULT_INLIER_TOL = 8.0


class RansacError(ValueError):
    pass


@dataclass(frozen=True)
class AffineTransform2D:
    A: np.ndarray  # (2, 2)
    b: np.ndarray  # (2,)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return pts @ self.A.T + self.b

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.A))


def initial_correspondences(t_q: Template, t_g: Template, top_k: int = 1):
    """For every query minutia, its ``top_k`` gallery minutiae by S1.

    Returns ``(i, j, score)`` triples, query-major, best first within a row;
    ties go to the lower gallery index.
    """
    if len(t_q) == 0 or len(t_g) == 0:
        raise TemplateError("cannot pair an empty template")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    s1 = similarity_matrix(t_q, t_g)
    k = min(top_k, s1.shape[1])
    out = []
    seen = set()
    for i, row in enumerate(s1):
        for j in np.argsort(-row, kind="stable")[:k]:
            if (i, int(j)) not in seen:
                seen.add((i, int(j)))
                out.append((i, int(j), float(row[j])))
    return out


def fit_affine(src, dst) -> AffineTransform2D:
    """Least-squares affine map taking ``src`` points onto ``dst``."""
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    design = np.hstack([src, np.ones((len(src), 1))])
    sol, *_ = np.linalg.lstsq(design, dst, rcond=None)
    return AffineTransform2D(sol[:2].T.copy(), sol[2].copy())


def _triangle_area(p) -> float:
    (x0, y0), (x1, y1), (x2, y2) = p
    return 0.5 * abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def ransac_affine(src, dst, iterations: int = 500, inlier_tol: float = DEFAULT_INLIER_TOL,
                  seed: int = 0):
    """Robust affine fit between paired positions ``src[k] -> dst[k]``.

    Returns ``(model, inlier_indices)``. The winning minimal-sample model is
    refit on its inliers; the refit is kept only if it does not lose inliers.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    n = len(src)
    if n < 3 or len(dst) != n:
        raise RansacError("need at least 3 paired points")
    rng = np.random.Generator(np.random.PCG64(seed))
    best_model, best_inliers = None, None
    for _ in range(iterations):
        sample = rng.choice(n, size=3, replace=False)
        if _triangle_area(src[sample]) < COLLINEAR_AREA:
            continue
        model = fit_affine(src[sample], dst[sample])
        if abs(model.det) < 1e-12:
            continue
        resid = np.linalg.norm(model.apply(src) - dst, axis=1)
        inliers = np.flatnonzero(resid <= inlier_tol)
        if best_inliers is None or len(inliers) > len(best_inliers):
            best_model, best_inliers = model, inliers
    if best_model is None:
        raise RansacError("every sample was collinear")
    refit = fit_affine(src[best_inliers], dst[best_inliers])
    if abs(refit.det) >= 1e-12:
        resid = np.linalg.norm(refit.apply(src) - dst, axis=1)
        inliers = np.flatnonzero(resid <= inlier_tol)
        if len(inliers) >= len(best_inliers):
            return refit, inliers
    return best_model, best_inliers


def farthest_point_sampling(points, k: int, start: int = 0) -> list[int]:
    """Greedy max-min subset of ``k`` indices, beginning at ``start``."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("no points to sample")
    pts = pts.reshape(len(pts), -1)
    n = len(pts)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= n:
        return list(range(n))
    chosen = [start]
    dist = np.linalg.norm(pts - pts[start], axis=1)
    for _ in range(k - 1):
        nxt = int(np.argmax(dist))  # first max wins ties
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
    return chosen
