"""Seeded synthetic fingers and impressions with known correspondences.

Nothing here tries to look like a fingerprint. A finger is a set of
well-separated minutiae, each carrying an i.i.d. standard normal descriptor;
an impression re-poses the minutiae rigidly, perturbs descriptors, erodes
masks from one border, drops minutiae and injects spurious ones.

Randomness comes from numpy's PCG64 bit generator keyed through
``SeedSequence``, so output is reproducible across platforms for a given
numpy major version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_CHANNELS, GRID, Flavor, Template, normalize_angle

CANVAS = 512.0
MIN_SEPARATION = 12.0
_STREAM_FINGER = 0
_STREAM_IMPRESSION = 1
_STREAM_POSE = 2


class SynthError(ValueError):
    pass


def _rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in key])))


@dataclass(frozen=True, eq=False)
class FingerModel:
    finger_id: int
    minutiae: np.ndarray     # (n, 3) canonical x, y, theta
    descriptors: np.ndarray  # (n, C, 8, 8) float32
    masks: np.ndarray        # (n, 8, 8) float32

    def __len__(self):
        return len(self.minutiae)


@dataclass(frozen=True)
class ImpressionParams:
    rotation: float = 0.0
    tx: float = 0.0
    ty: float = 0.0
    sigma: float = 0.5
    erosion: float = 0.2
    dropout: float = 0.2
    spurious: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("erosion", "dropout", "spurious"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def generate_finger(finger_id: int, n_minutiae: int = 40, seed: int = 0,
                    channels: int = DEFAULT_CHANNELS, max_tries: int = 10000) -> FingerModel:
    if n_minutiae < 1:
        raise SynthError("n_minutiae must be >= 1")
    rng = _rng(seed, _STREAM_FINGER, finger_id)
    pts = []
    tries = 0
    while len(pts) < n_minutiae:
        tries += 1
        if tries > max_tries:
            raise SynthError(
                f"could not place {n_minutiae} minutiae {MIN_SEPARATION} px apart")
        p = rng.uniform(0.0, CANVAS, size=2)
        if all(math.dist(p, q) >= MIN_SEPARATION for q in pts):
            pts.append(p)
    theta = rng.uniform(0.0, 2 * math.pi, size=n_minutiae)
    minutiae = np.column_stack([np.array(pts), normalize_angle(theta)])
    masks = np.ones((n_minutiae, GRID, GRID), dtype=np.float32)
    desc = rng.standard_normal((n_minutiae, channels, GRID, GRID)).astype(np.float32)
    desc *= masks[:, None]
    return FingerModel(finger_id, minutiae, desc, masks)


def _erode(masks: np.ndarray, erosion: float, rng: np.random.Generator) -> np.ndarray:
    """Zero a random-depth band along one random border of each mask."""
    masks = masks.copy()
    max_depth = int(math.floor(erosion * GRID + 0.5))
    sides = rng.integers(0, 4, size=len(masks))
    depths = rng.integers(0, max_depth + 1, size=len(masks))
    for m, side, depth in zip(masks, sides, depths):
        if depth == 0:
            continue
        if side == 0:
            m[:depth, :] = 0
        elif side == 1:
            m[-depth:, :] = 0
        elif side == 2:
            m[:, :depth] = 0
        else:
            m[:, -depth:] = 0
    return masks


def pose_minutiae(minutiae: np.ndarray, rotation: float, tx: float, ty: float) -> np.ndarray:
    """Rotate about the canvas centre, then translate."""
    out = np.array(minutiae, dtype=np.float64).reshape(-1, 3)
    c, s = math.cos(rotation), math.sin(rotation)
    cx = cy = CANVAS / 2
    x = out[:, 0] - cx
    y = out[:, 1] - cy
    out[:, 0], out[:, 1] = c * x - s * y + cx + tx, s * x + c * y + cy + ty
    out[:, 2] = normalize_angle(out[:, 2] + rotation)
    return out


def sample_impression(model: FingerModel, params: ImpressionParams = ImpressionParams()):
    """Returns ``(template, correspondence)``.

    ``correspondence`` maps template record index -> model minutia index for
    every surviving genuine minutia; spurious records are absent from it.
    """
    rng = _rng(params.seed, _STREAM_IMPRESSION, model.finger_id)
    n = len(model)
    channels = model.descriptors.shape[1]
    keep = np.flatnonzero(rng.random(n) >= params.dropout)
    if len(keep) == 0:
        raise SynthError("every minutia was dropped")
    noise = rng.standard_normal((len(keep),) + model.descriptors.shape[1:])
    desc = model.descriptors[keep].astype(np.float64) + params.sigma * noise
    masks = model.masks[keep]
    mnt = model.minutiae[keep]

    n_spur = int(rng.binomial(len(keep), params.spurious)) if params.spurious > 0 else 0
    if n_spur:
        spur_mnt = np.column_stack([rng.uniform(0.0, CANVAS, size=(n_spur, 2)),
                                    rng.uniform(0.0, 2 * math.pi, size=n_spur)])
        spur_desc = rng.standard_normal((n_spur, channels, GRID, GRID))
        mnt = np.vstack([mnt, spur_mnt])
        desc = np.concatenate([desc, spur_desc])
        masks = np.concatenate([masks, np.ones((n_spur, GRID, GRID), dtype=np.float32)])

    masks = _erode(masks, params.erosion, rng)
    desc = desc * masks[:, None]
    order = rng.permutation(len(mnt))
    origin = np.concatenate([keep, np.full(n_spur, -1)])[order]
    template = Template(
        pose_minutiae(mnt[order], params.rotation, params.tx, params.ty),
        desc[order].astype(np.float32),
        masks[order],
        Flavor.FLOAT32,
        channels,
        source_tag=f"synth:finger={model.finger_id}:seed={params.seed}",
    )
    correspondence = {int(k): int(m) for k, m in enumerate(origin) if m >= 0}
    return template, correspondence


def random_pose(rng: np.random.Generator, max_rotation: float = math.pi / 6,
                max_shift: float = 40.0) -> tuple[float, float, float]:
    return (float(rng.uniform(-max_rotation, max_rotation)),
            float(rng.uniform(-max_shift, max_shift)),
            float(rng.uniform(-max_shift, max_shift)))


def make_pool(n_fingers: int, n_impressions: int, seed: int = 0, n_minutiae: int = 40,
              sigma: float = 0.5, dropout: float = 0.2, spurious: float = 0.1,
              erosion: float = 0.2, channels: int = DEFAULT_CHANNELS):
    """Impressions of ``n_fingers`` synthetic fingers with random poses.

    Returns a list of ``(finger_id, impression, template, correspondence)``
    in finger-major order.
    """
    pool = []
    for f in range(n_fingers):
        model = generate_finger(f, n_minutiae, seed, channels)
        for k in range(n_impressions):
            rot, tx, ty = random_pose(_rng(seed, _STREAM_POSE, f, k))
            params = ImpressionParams(rot, tx, ty, sigma, erosion, dropout, spurious,
                                      seed=seed * 1000003 + k)
            tpl, corr = sample_impression(model, params)
            pool.append((f, k, tpl, corr))
    return pool
