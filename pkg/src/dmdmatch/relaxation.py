"""Assignment, geometric relaxation and the final fingerprint score.

S1 is reduced to a one-to-one assignment (Hungarian, maximising), the
assigned pairs' scores are relaxed against each other according to how well
their minutiae geometry agrees, and the mean of the best ``n_m`` relaxed
scores is the fingerprint score.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Minutia, Template, angle_diff
from .similarity import similarity_matrix


@dataclass(frozen=True)
class MatchParams:
    n_min: int = 4
    n_max: int = 12
    tau: float = 0.4
    mu: float = 20.0
    relax_iterations: int = 5
    relax_weight: float = 0.5
    # (mu_d, tau_d, mu_a1, tau_a1, mu_a2, tau_a2)
    compat_sigmoid_params: tuple = (15.0, 0.4, math.pi / 6, 9.0, math.pi / 6, 9.0)

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise ValueError("n_min must not exceed n_max")
        if self.relax_iterations < 0:
            raise ValueError("relax_iterations must be >= 0")
        if not 0.0 <= self.relax_weight <= 1.0:
            raise ValueError("relax_weight must lie in [0, 1]")
        if len(self.compat_sigmoid_params) != 6:
            raise ValueError("compat_sigmoid_params needs 6 values")
        object.__setattr__(self, "compat_sigmoid_params",
                           tuple(float(v) for v in self.compat_sigmoid_params))

    @classmethod
    def from_file(cls, path, base: "MatchParams | None" = None) -> "MatchParams":
        """Load overrides from a JSON object keyed by field name."""
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - set(asdict(cls()))
        if unknown:
            raise ValueError(f"unknown match parameters: {sorted(unknown)}")
        return replace(base or cls(), **data)


PRESETS = {
    "verifinger": MatchParams(n_min=4, n_max=12, tau=0.4, mu=20.0),
    "fdd": MatchParams(n_min=6, n_max=14, tau=0.3, mu=20.0),
}


def preset(name: str) -> MatchParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass
class MatchResult:
    score: float
    pairs: list  # (i, j, s1, s2), best first
    n_m: int
    assignment: list = field(default_factory=list)  # (i, j) before truncation


def adaptive_top_n(r: int, p: int, params: MatchParams) -> int:
    """Number of best pairs averaged into the score, from the minutiae counts."""
    arg = -params.tau * (min(r, p) - params.mu)
    try:
        frac = (params.n_max - params.n_min) / (1.0 + math.exp(arg))
    except OverflowError:
        frac = 0.0
    # half away from zero; frac is never negative
    return params.n_min + int(math.floor(frac + 0.5))


def _sigmoid_down(v, mu, tau):
    """Decreasing logistic 1 / (1 + exp(tau * (v - mu)))."""
    z = np.clip(tau * (np.asarray(v, dtype=np.float64) - mu), -700.0, 700.0)
    return 1.0 / (1.0 + np.exp(z))


def max_compatibility(params: MatchParams) -> float:
    mu_d, tau_d, mu_a1, tau_a1, mu_a2, tau_a2 = params.compat_sigmoid_params
    return float(_sigmoid_down(0.0, mu_d, tau_d) * _sigmoid_down(0.0, mu_a1, tau_a1)
                 * _sigmoid_down(0.0, mu_a2, tau_a2))


def _compatibility(q_a, q_b, g_a, g_b, params: MatchParams):
    """Vectorised compatibility; each argument is an ``(..., 3)`` array."""
    mu_d, tau_d, mu_a1, tau_a1, mu_a2, tau_a2 = params.compat_sigmoid_params

    def geometry(a, b):
        dx = b[..., 0] - a[..., 0]
        dy = b[..., 1] - a[..., 1]
        dist = np.hypot(dx, dy)
        dtheta = angle_diff(a[..., 2], b[..., 2])
        radial = angle_diff(np.arctan2(dy, dx), a[..., 2])
        return dist, dtheta, radial

    d_q, t_q, r_q = geometry(q_a, q_b)
    d_g, t_g, r_g = geometry(g_a, g_b)
    return (_sigmoid_down(np.abs(d_q - d_g), mu_d, tau_d)
            * _sigmoid_down(np.abs(angle_diff(t_q, t_g)), mu_a1, tau_a1)
            * _sigmoid_down(np.abs(angle_diff(r_q, r_g)), mu_a2, tau_a2))


def pair_compatibility(m_a: Minutia, m_b: Minutia, m_c: Minutia, m_d: Minutia,
                       params: MatchParams) -> float:
    """Geometric agreement of query pair (a, b) with gallery pair (c, d).

    Product of three decreasing sigmoids over the residuals of segment
    length, relative direction, and the segment's angle relative to the
    first minutia's direction.
    """
    arr = [np.array([m.x, m.y, m.theta]) for m in (m_a, m_b, m_c, m_d)]
    return float(_compatibility(*arr, params))


def compatibility_matrix(mnt_q: np.ndarray, mnt_g: np.ndarray, assignment,
                         params: MatchParams) -> np.ndarray:
    """rho[k, l] for assigned pairs k = (i, j), l = (i', j'); diagonal zeroed."""
    idx = np.asarray(assignment, dtype=np.intp).reshape(-1, 2)
    q = np.asarray(mnt_q, dtype=np.float64)[idx[:, 0]]
    g = np.asarray(mnt_g, dtype=np.float64)[idx[:, 1]]
    rho = _compatibility(q[:, None, :], q[None, :, :], g[:, None, :], g[None, :, :], params)
    np.fill_diagonal(rho, 0.0)
    return rho


def assign(s1: np.ndarray) -> list[tuple[int, int]]:
    """Maximum-total one-to-one assignment of min(r, p) pairs."""
    s1 = np.asarray(s1, dtype=np.float64)
    rows, cols = linear_sum_assignment(s1, maximize=True)
    return [(int(i), int(j)) for i, j in zip(rows, cols)]


def relax(s1: np.ndarray, assignment, mnt_q, mnt_g, params: MatchParams) -> np.ndarray:
    """Relaxed (S2) score for each assigned pair, in assignment order.

    Compatibilities are divided by their attainable maximum so that a pair
    whose neighbours agree perfectly keeps its full score.
    """
    s1 = np.asarray(s1, dtype=np.float64)
    idx = np.asarray(assignment, dtype=np.intp).reshape(-1, 2)
    lam = s1[idx[:, 0], idx[:, 1]].copy()
    n = len(lam)
    if n < 2 or params.relax_iterations == 0:
        return lam
    rho = compatibility_matrix(mnt_q, mnt_g, idx, params) / max_compatibility(params)
    w = params.relax_weight
    for _ in range(params.relax_iterations):
        lam = w * lam + (1.0 - w) * (rho @ lam) / (n - 1)
    return lam


def match_templates(t_q: Template, t_g: Template,
                    params: MatchParams = PRESETS["verifinger"]) -> MatchResult:
    s1 = similarity_matrix(t_q, t_g)
    pairs = assign(s1)
    s2 = relax(s1, pairs, t_q.minutiae, t_g.minutiae, params)
    n_m = adaptive_top_n(len(t_q), len(t_g), params)
    order = sorted(range(len(pairs)), key=lambda k: (-s2[k], pairs[k]))
    top = order[:n_m]
    selected = [(pairs[k][0], pairs[k][1], float(s1[pairs[k]]), float(s2[k])) for k in top]
    score = math.fsum(s2[k] for k in top) / len(top)
    return MatchResult(score=score, pairs=selected, n_m=n_m, assignment=pairs)
