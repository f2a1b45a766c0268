"""Numba kernels for a unit-cell bucket grid over a box window of dimension <= 3.

Coordinates are stored as rows of length 3 with unused dimensions zero, so
every distance test is the same unrolled expression. Each cell holds a doubly
linked list threaded through point ids; everything lives in plain arrays so
the same routines serve the Python ``PointConfiguration`` and the compiled
estimator loops.

``geom`` is ``(lower, ncell, strides, nbr)``: per-axis origin, cell counts and
linear strides (all length 3), and ``nbr[c]`` the cells adjacent to cell ``c``
(itself included) followed by -1 padding. ``links`` is ``(head, nxt, prv, cell)``.
"""

import itertools

import numpy as np
from numba import njit

MAX_DIM = 3


def make_geometry(lower, upper):
    lower = np.asarray(lower, dtype=np.float64).reshape(-1)
    upper = np.asarray(upper, dtype=np.float64).reshape(-1)
    d = lower.shape[0]
    if d > MAX_DIM:
        raise ValueError(f"grid supports dimensions up to {MAX_DIM}, got {d}")
    lo = np.zeros(MAX_DIM)
    lo[:d] = lower
    ncell = np.ones(MAX_DIM, dtype=np.int64)
    ncell[:d] = np.maximum(1, np.ceil(upper - lower - 1e-12)).astype(np.int64)
    strides = np.array([1, ncell[0], ncell[0] * ncell[1]], dtype=np.int64)
    coords = np.array(list(itertools.product(*[range(n) for n in ncell[::-1]])),
                      dtype=np.int64)[:, ::-1]
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=MAX_DIM)), dtype=np.int64)
    nbr = np.full((coords.shape[0], 3**d), -1, dtype=np.int64)
    fill = np.zeros(coords.shape[0], dtype=np.int64)
    for off in offsets:
        moved = coords + off
        ok = np.flatnonzero(np.all((moved >= 0) & (moved < ncell), axis=1))
        # rows of coords enumerate cells in linear-index order
        nbr[ok, fill[ok]] = moved[ok] @ strides
        fill[ok] += 1
    return lo, ncell, strides, nbr


def make_links(ncells, capacity):
    head = np.full(ncells, -1, dtype=np.int64)
    nxt = np.full(capacity, -1, dtype=np.int64)
    prv = np.full(capacity, -1, dtype=np.int64)
    cell = np.full(capacity, -1, dtype=np.int64)
    return head, nxt, prv, cell


def pad_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    out = np.zeros((pts.shape[0], MAX_DIM))
    out[:, : pts.shape[1]] = pts
    return out


@njit(cache=True, inline="always")
def cell_index(x0, x1, x2, geom):
    lower, ncell, strides, _ = geom
    k0 = min(max(int(np.floor(x0 - lower[0])), 0), ncell[0] - 1)
    k1 = min(max(int(np.floor(x1 - lower[1])), 0), ncell[1] - 1)
    k2 = min(max(int(np.floor(x2 - lower[2])), 0), ncell[2] - 1)
    return k0 + k1 * strides[1] + k2 * strides[2]


@njit(cache=True, inline="always")
def count_near(x0, x1, x2, pts, geom, links):
    """Number of linked points within distance 1 of ``(x0, x1, x2)``."""
    nbr = geom[3]
    head, nxt, _, _ = links
    c = cell_index(x0, x1, x2, geom)
    m = 0
    for r in range(nbr.shape[1]):
        cc = nbr[c, r]
        if cc < 0:
            break
        q = head[cc]
        while q >= 0:
            t0 = pts[q, 0] - x0
            t1 = pts[q, 1] - x1
            t2 = pts[q, 2] - x2
            if t0 * t0 + t1 * t1 + t2 * t2 <= 1.0:
                m += 1
            q = nxt[q]
    return m


@njit(cache=True, inline="always")
def gather_near(x0, x1, x2, pts, geom, links, buf):
    """Like :func:`count_near` but also writes the neighbour ids into ``buf``."""
    nbr = geom[3]
    head, nxt, _, _ = links
    c = cell_index(x0, x1, x2, geom)
    m = 0
    for r in range(nbr.shape[1]):
        cc = nbr[c, r]
        if cc < 0:
            break
        q = head[cc]
        while q >= 0:
            t0 = pts[q, 0] - x0
            t1 = pts[q, 1] - x1
            t2 = pts[q, 2] - x2
            if t0 * t0 + t1 * t1 + t2 * t2 <= 1.0:
                buf[m] = q
                m += 1
            q = nxt[q]
    return m


@njit(cache=True, inline="always")
def link(i, pts, geom, links):
    head, nxt, prv, cell = links
    c = cell_index(pts[i, 0], pts[i, 1], pts[i, 2], geom)
    cell[i] = c
    prv[i] = -1
    nxt[i] = head[c]
    if head[c] >= 0:
        prv[head[c]] = i
    head[c] = i


@njit(cache=True, inline="always")
def unlink(i, links):
    head, nxt, prv, cell = links
    if prv[i] >= 0:
        nxt[prv[i]] = nxt[i]
    else:
        head[cell[i]] = nxt[i]
    if nxt[i] >= 0:
        prv[nxt[i]] = prv[i]
    nxt[i] = -1
    prv[i] = -1
    cell[i] = -1


@njit(cache=True, inline="always")
def add_point(i, pts, geom, links):
    """Link point ``i``; returns the number of edges it creates."""
    m = count_near(pts[i, 0], pts[i, 1], pts[i, 2], pts, geom, links)
    link(i, pts, geom, links)
    return m


@njit(cache=True, inline="always")
def insert(i, pts, deg, geom, links, buf):
    """Link point ``i`` and update degrees; returns its new degree."""
    m = gather_near(pts[i, 0], pts[i, 1], pts[i, 2], pts, geom, links, buf)
    for t in range(m):
        deg[buf[t]] += 1
    deg[i] = m
    link(i, pts, geom, links)
    return m


@njit(cache=True, inline="always")
def remove(i, pts, deg, geom, links, buf):
    """Unlink point ``i``; neighbours are left in ``buf[:m]``, returns ``m``."""
    unlink(i, links)
    m = gather_near(pts[i, 0], pts[i, 1], pts[i, 2], pts, geom, links, buf)
    for t in range(m):
        deg[buf[t]] -= 1
    deg[i] = 0
    return m


@njit(cache=True)
def gather(x, pts, geom, links, buf):
    return gather_near(x[0], x[1], x[2], pts, geom, links, buf)


@njit(cache=True)
def insert_one(i, pts, deg, geom, links, buf):
    return insert(i, pts, deg, geom, links, buf)


@njit(cache=True)
def remove_one(i, pts, deg, geom, links, buf):
    return remove(i, pts, deg, geom, links, buf)


@njit(cache=True)
def count_edges_array(pts, geom):
    n = pts.shape[0]
    links = (np.full(geom[3].shape[0], -1, dtype=np.int64), np.full(n, -1, dtype=np.int64),
             np.full(n, -1, dtype=np.int64), np.full(n, -1, dtype=np.int64))
    edges = 0
    for i in range(n):
        edges += add_point(i, pts, geom, links)
    return edges


@njit(cache=True, inline="always")
def draw_uniform(gen, pts, i, lower, lengths):
    for j in range(lower.shape[0]):
        pts[i, j] = lower[j] + lengths[j] * gen.random()


@njit(cache=True)
def grow_rows(a, n):
    out = np.zeros((n,) + a.shape[1:], dtype=a.dtype)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def grow_links(links, n):
    head, nxt, prv, cell = links
    m = nxt.shape[0]
    nxt2 = np.full(n, -1, dtype=np.int64)
    prv2 = np.full(n, -1, dtype=np.int64)
    cell2 = np.full(n, -1, dtype=np.int64)
    nxt2[:m] = nxt
    prv2[:m] = prv
    cell2[:m] = cell
    return (head, nxt2, prv2, cell2)
