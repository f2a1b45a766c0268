"""Windows, point configurations and edge counts of the unit-threshold Gilbert graph."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _grid


@dataclass(frozen=True)
class Window:
    """Axis-aligned box ``[lower[0], upper[0]] x ... x [lower[d-1], upper[d-1]]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) == 0 or len(lower) != len(upper):
            raise ValueError("lower and upper must be non-empty and of equal length")
        if any(not (math.isfinite(a) and math.isfinite(b)) for a, b in zip(lower, upper)):
            raise ValueError("window bounds must be finite")
        if any(b <= a for a, b in zip(lower, upper)):
            raise ValueError(f"degenerate window: lower={lower}, upper={upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def interval(cls, w: float) -> "Window":
        return cls((0.0,), (float(w),))

    @classmethod
    def box(cls, *sides: float) -> "Window":
        """Box ``[0, s_1] x ... x [0, s_d]``."""
        return cls(tuple(0.0 for _ in sides), tuple(float(s) for s in sides))

    @classmethod
    def parse(cls, text: str) -> "Window":
        """Parse ``"w"`` (interval ``[0, w]``) or ``"a,b[,c,d...]"`` (bound pairs)."""
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
        if len(vals) == 1:
            return cls.interval(vals[0])
        if len(vals) % 2:
            raise ValueError(f"window needs lower,upper pairs, got {text!r}")
        return cls(tuple(vals[0::2]), tuple(vals[1::2]))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lengths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def diameter(self) -> float:
        return float(np.sqrt(np.sum(self.lengths**2)))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def eroded(self, r: float) -> "Window | None":
        """Inner window at distance ``r`` from the boundary, or None if empty."""
        lower = tuple(a + r for a in self.lower)
        upper = tuple(b - r for b in self.upper)
        if any(b <= a for a, b in zip(lower, upper)):
            return None
        return Window(lower, upper)

    def spec(self) -> str:
        return ",".join(f"{a:g},{b:g}" for a, b in zip(self.lower, self.upper))


def count_edges(points) -> int:
    """Number of pairs at Euclidean distance at most 1 (closed threshold)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return 0
    if pts.ndim == 1:
        pts = pts[:, None]
    if not np.all(np.isfinite(pts)):
        raise ValueError("coordinates must be finite")
    lo = pts.min(axis=0)
    hi = np.maximum(pts.max(axis=0), lo + 1.0)
    geom = _grid.make_geometry(lo, hi)
    return int(_grid.count_edges_array(_grid.pad_points(pts), geom))


class PointConfiguration:
    """Mutable point set in a window with an incrementally maintained Gilbert graph.

    Points get stable integer ids in insertion order; removing a point does
    not renumber the others.
    """

    def __init__(self, window: Window, capacity: int = 64):
        self.window = window
        self._geom = _grid.make_geometry(window.lower, window.upper)
        self._ncells = self._geom[3].shape[0]
        capacity = max(int(capacity), 1)
        self._pts = np.zeros((capacity, _grid.MAX_DIM))
        self._deg = np.zeros(capacity, dtype=np.int64)
        self._alive = np.zeros(capacity, dtype=bool)
        self._links = _grid.make_links(self._ncells, capacity)
        self._buf = np.empty(capacity, dtype=np.int64)
        self._n = 0
        self.edge_count = 0

    def _grow(self):
        cap = 2 * self._pts.shape[0]
        n = self._pts.shape[0]
        pts = np.zeros((cap, _grid.MAX_DIM))
        pts[:n] = self._pts
        self._pts = pts
        self._deg = np.concatenate([self._deg, np.zeros(cap - n, dtype=np.int64)])
        self._alive = np.concatenate([self._alive, np.zeros(cap - n, dtype=bool)])
        head, nxt, prv, cell = self._links
        pad = np.full(cap - n, -1, dtype=np.int64)
        self._links = (head, np.concatenate([nxt, pad]), np.concatenate([prv, pad]),
                       np.concatenate([cell, pad]))
        self._buf = np.empty(cap, dtype=np.int64)

    def insert(self, x) -> tuple[int, int]:
        """Add ``x``; returns ``(edge_count, delta)`` where delta is the number of new edges.

        The new point's id is ``len(self.ids())`` before the call, i.e. the
        running insertion counter ``self.next_id``.
        """
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.window.dim:
            raise ValueError(f"expected a {self.window.dim}-d point, got {x.shape[0]}-d")
        if not self.window.contains(x):
            raise ValueError(f"point {x.tolist()} lies outside the window")
        if self._n == self._pts.shape[0]:
            self._grow()
        i = self._n
        self._pts[i, : x.shape[0]] = x
        delta = int(_grid.insert_one(i, self._pts, self._deg, self._geom, self._links,
                                     self._buf))
        self._alive[i] = True
        self._n += 1
        self.edge_count += delta
        return self.edge_count, delta

    def remove(self, pid: int) -> int:
        if not (0 <= pid < self._n) or not self._alive[pid]:
            raise KeyError(f"unknown point id {pid}")
        m = int(_grid.remove_one(pid, self._pts, self._deg, self._geom, self._links, self._buf))
        self._alive[pid] = False
        self.edge_count -= m
        return self.edge_count

    @property
    def next_id(self) -> int:
        return self._n

    def ids(self) -> np.ndarray:
        return np.flatnonzero(self._alive[: self._n])

    def point(self, pid: int) -> np.ndarray:
        if not (0 <= pid < self._n) or not self._alive[pid]:
            raise KeyError(f"unknown point id {pid}")
        return self._pts[pid, : self.window.dim].copy()

    @property
    def points(self) -> np.ndarray:
        return self._pts[self.ids(), : self.window.dim].copy()

    def degree(self, pid: int) -> int:
        if not (0 <= pid < self._n) or not self._alive[pid]:
            raise KeyError(f"unknown point id {pid}")
        return int(self._deg[pid])

    @property
    def degrees(self) -> np.ndarray:
        return self._deg[self.ids()].copy()

    def neighbors(self, x) -> np.ndarray:
        """Ids of current points within distance 1 of ``x``."""
        x = _grid.pad_points(np.reshape(x, (1, -1)))[0]
        m = _grid.gather(x, self._pts, self._geom, self._links, self._buf)
        return np.sort(self._buf[:m])

    def __len__(self) -> int:
        return int(self._alive[: self._n].sum())
