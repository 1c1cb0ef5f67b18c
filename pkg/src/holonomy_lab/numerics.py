"""Shared numerical plumbing: central differences, boxes, seeded sampling.

All point arrays follow the same layout: the last axis holds coordinates and
any leading axes are batch axes that broadcast.
"""

from __future__ import annotations

import numpy as np

from holonomy_lab.errors import BoundaryProximityError

FD_STEP = 1e-5
CHART_MARGIN = 1e-9


def as_box(box) -> np.ndarray:
    arr = np.asarray(box, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"box must have shape (k, 2), got {arr.shape}")
    if np.any(arr[:, 0] >= arr[:, 1]):
        raise ValueError(f"box has an empty interval: {arr.tolist()}")
    return arr


def in_box(box: np.ndarray, p, margin: float = 0.0) -> np.ndarray:
    """Boolean mask over batch axes: point strictly inside ``box`` shrunk by ``margin``."""
    p = np.asarray(p, dtype=float)
    ok = (p > box[:, 0] + margin) & (p < box[:, 1] - margin)
    return np.all(ok, axis=-1) & np.all(np.isfinite(p), axis=-1)


def sample_box(box: np.ndarray, count: int, rng: np.random.Generator, shrink: float = 0.9) -> np.ndarray:
    """Uniform samples from ``box`` shrunk toward its centre (finite boxes only)."""
    lo, hi = box[:, 0], box[:, 1]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * shrink
    return mid + half * rng.uniform(-1.0, 1.0, size=(count, box.shape[0]))


def _step(p, h):
    scale = max(1.0, float(np.max(np.abs(p)))) if np.size(p) else 1.0
    return h * scale


def directional_derivative(f, p, d, h: float = FD_STEP, chart=None):
    """Central difference of ``f`` at ``p`` along ``d`` (not normalised).

    The step is ``h * max(1, |p|_inf)`` divided by ``|d|_inf`` so the stencil
    length stays predictable. If ``chart`` (a box) is given, stencils leaving its
    interior raise :class:`BoundaryProximityError`.
    """
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    dn = float(np.max(np.abs(d))) if d.size else 0.0
    if dn == 0.0:
        return 0.0 * np.asarray(f(p))
    s = _step(p, h) / dn
    plus, minus = p + s * d, p - s * d
    if chart is not None and not (np.all(in_box(chart, plus)) and np.all(in_box(chart, minus))):
        raise BoundaryProximityError(f"finite-difference stencil of length {s * dn:.3g} leaves the chart near {p.tolist()}")
    return (np.asarray(f(plus)) - np.asarray(f(minus))) / (2.0 * s)


def jacobian(f, p, h: float = FD_STEP, chart=None) -> np.ndarray:
    """Central-difference Jacobian; output shape ``f(p).shape + (len(p),)``."""
    p = np.asarray(p, dtype=float)
    cols = []
    for k in range(p.shape[-1]):
        e = np.zeros(p.shape[-1])
        e[k] = 1.0
        cols.append(directional_derivative(f, p, np.broadcast_to(e, p.shape), h, chart))
    return np.stack(cols, axis=-1)


def sup_norm(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


def matvec(mat, v):
    """Apply a batch of ``(n, m)`` matrices to ``(m,)`` vectors with broadcasting."""
    return np.matmul(mat, np.asarray(v, dtype=float)[..., None])[..., 0]


def stack_matrix(rows, batch_shape=()) -> np.ndarray:
    """Assemble a matrix from nested lists of broadcastable arrays/scalars."""
    flat = [np.asarray(e, dtype=float) for row in rows for e in row]
    shape = np.broadcast_shapes(batch_shape, *(e.shape for e in flat))
    n, m = len(rows), len(rows[0])
    out = np.empty(shape + (n, m))
    for a, row in enumerate(rows):
        for b, e in enumerate(row):
            out[..., a, b] = e
    return out


def stack_vector(entries, batch_shape=()) -> np.ndarray:
    return stack_matrix([[e] for e in entries], batch_shape)[..., 0]
