"""Masked descriptor similarity and the query x gallery similarity matrix."""

from __future__ import annotations

import numpy as np

from .core import GRID, Flavor, Template, TemplateError, check_compatible

ZERO_NORM = 1e-12


def masked_cosine_similarity(f_q, h_q, f_g, h_g) -> float:
    """Cosine of ``f_q * h_g`` and ``f_g * h_q`` over the flattened grids.

    Masks are ``(8, 8)`` and broadcast over channels. Returns 0 when either
    masked operand has (near) zero norm.
    """
    if any(np.asarray(x).dtype == np.uint8 for x in (f_q, h_q, f_g, h_g)):
        raise TemplateError("cosine similarity needs float descriptors")
    f_q = np.asarray(f_q, dtype=np.float64)
    f_g = np.asarray(f_g, dtype=np.float64)
    if f_q.shape != f_g.shape:
        raise TemplateError(f"channel mismatch: {f_q.shape} vs {f_g.shape}")
    a = (f_q * np.asarray(h_g, dtype=np.float64)).ravel()
    b = (f_g * np.asarray(h_q, dtype=np.float64)).ravel()
    na = np.sqrt(a @ a)
    nb = np.sqrt(b @ b)
    if na < ZERO_NORM or nb < ZERO_NORM:
        return 0.0
    return float(np.clip((a @ b) / (na * nb), -1.0, 1.0))


def _as_words(packed: np.ndarray) -> np.ndarray:
    """View packed rows (..., 8) uint8 as one uint64 word per 8x8 grid."""
    packed = np.ascontiguousarray(packed, dtype=np.uint8)
    return packed.view(np.uint64)[..., 0]


def masked_hamming_similarity(b_q, m_q, b_g, m_g) -> float:
    """1 - (differing bits inside the mask overlap) / (bits in the overlap).

    ``b_*`` are packed ``(C, 8)`` uint8 grids, ``m_*`` packed ``(8,)`` masks.
    The cell overlap is broadcast over all C channels; an empty overlap
    scores 0.
    """
    b_q = np.asarray(b_q)
    b_g = np.asarray(b_g)
    if b_q.dtype != np.uint8 or b_g.dtype != np.uint8:
        raise TemplateError("Hamming similarity needs packed binary descriptors")
    if b_q.shape != b_g.shape:
        raise TemplateError(f"channel mismatch: {b_q.shape} vs {b_g.shape}")
    overlap = _as_words(m_q) & _as_words(m_g)
    n_cells = int(np.bitwise_count(overlap))
    if n_cells == 0:
        return 0.0
    diff = int(np.bitwise_count((_as_words(b_q) ^ _as_words(b_g)) & overlap).sum())
    return 1.0 - diff / (b_q.shape[0] * n_cells)


def _cosine_matrix(t_q: Template, t_g: Template) -> np.ndarray:
    n_q, n_g, c = len(t_q), len(t_g), t_q.channels
    f_q = t_q.descriptors.astype(np.float64).reshape(n_q, c, GRID * GRID)
    f_g = t_g.descriptors.astype(np.float64).reshape(n_g, c, GRID * GRID)
    h_q = t_q.masks.astype(np.float64).reshape(n_q, 1, GRID * GRID)
    h_g = t_g.masks.astype(np.float64).reshape(n_g, 1, GRID * GRID)
    # <f_q h_g, f_g h_q> = <f_q h_q, f_g h_g> since masks act cellwise
    a = (f_q * h_q).reshape(n_q, -1)
    b = (f_g * h_g).reshape(n_g, -1)
    dot = a @ b.T
    # ||f_q h_g||^2 = sum_k h_g[k]^2 sum_c f_q[c, k]^2
    sq_q = (f_q * f_q).sum(axis=1)
    sq_g = (f_g * f_g).sum(axis=1)
    norm_q = np.sqrt(sq_q @ (h_g[:, 0] ** 2).T)
    norm_g = np.sqrt((h_q[:, 0] ** 2) @ sq_g.T)
    denom = norm_q * norm_g
    valid = (norm_q >= ZERO_NORM) & (norm_g >= ZERO_NORM)
    out = np.zeros((n_q, n_g))
    np.divide(dot, denom, out=out, where=valid)
    return np.clip(out, -1.0, 1.0)


def _hamming_matrix(t_q: Template, t_g: Template) -> np.ndarray:
    b_q = _as_words(t_q.descriptors)[:, None, :]
    b_g = _as_words(t_g.descriptors)[None, :, :]
    overlap = _as_words(t_q.masks)[:, None] & _as_words(t_g.masks)[None, :]
    n_bits = np.bitwise_count(overlap).astype(np.int64) * t_q.channels
    diff = np.bitwise_count((b_q ^ b_g) & overlap[:, :, None]).sum(axis=2, dtype=np.int64)
    out = np.zeros(n_bits.shape)
    np.divide(diff, n_bits, out=out, where=n_bits > 0)
    return np.where(n_bits > 0, 1.0 - out, 0.0)


def similarity_matrix(t_q: Template, t_g: Template) -> np.ndarray:
    """``(r, p)`` matrix of pairwise descriptor similarities (S1)."""
    check_compatible(t_q, t_g)
    if t_q.flavor is Flavor.FLOAT32:
        return _cosine_matrix(t_q, t_g)
    return _hamming_matrix(t_q, t_g)
