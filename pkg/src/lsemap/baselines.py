"""Non-adaptive comparison strategies: uniform random and recursive
rectangle partitioning.

The recursive scheme measures the 4 domain corners, then the full-domain
center, then refines breadth-first: each dequeued rectangle schedules its
unmeasured corners (row-major) and its center (rounded toward the lower
index on ties) before enqueuing its 4 floor-midpoint sub-rectangles.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import Exhausted
from .grid import GridDomain


def random_next(domain: GridDomain, measured: set[int],
                rng: np.random.Generator) -> int:
    """Uniform draw over unmeasured indices (seeded-deterministic)."""
    n = domain.n_points
    candidates = [i for i in range(n) if i not in measured]
    if not candidates:
        raise Exhausted("all grid points measured")
    return candidates[int(rng.integers(len(candidates)))]


class RectQueue:
    """FIFO refinement state for the non-adaptive baseline.

    Rectangles are inclusive cell-index ranges (r0, c0, r1, c1) over the
    (ny, nx) lattice. ``visited`` holds every emitted flat index.
    """

    def __init__(self, domain: GridDomain):
        self.domain = domain
        self.visited: set[int] = set()
        self._pending: deque[int] = deque()
        self._rects: deque[tuple[int, int, int, int]] = deque()
        self._seen_rects: set[tuple[int, int, int, int]] = set()

        nx, ny = domain.counts
        full = (0, 0, ny - 1, nx - 1)
        for r, c in ((0, 0), (0, nx - 1), (ny - 1, 0), (ny - 1, nx - 1)):
            self._schedule(r, c)
        self._enqueue_rect(full)

    def _schedule(self, row: int, col: int) -> None:
        index = self.domain.index_of(col, row)
        if index not in self.visited:
            self.visited.add(index)
            self._pending.append(index)

    def _enqueue_rect(self, rect: tuple[int, int, int, int]) -> None:
        r0, c0, r1, c1 = rect
        # A rect with span sum < 2 holds only points already scheduled by its
        # parent (corners and parent center).
        if (r1 - r0) + (c1 - c0) < 2:
            return
        if rect in self._seen_rects:
            return
        self._seen_rects.add(rect)
        self._rects.append(rect)

    def _process_one_rect(self) -> None:
        r0, c0, r1, c1 = self._rects.popleft()
        for r, c in ((r0, c0), (r0, c1), (r1, c0), (r1, c1)):
            self._schedule(r, c)
        rc, cc = (r0 + r1) // 2, (c0 + c1) // 2
        self._schedule(rc, cc)
        if (r1 - r0) >= 2 or (c1 - c0) >= 2:
            for child in ((r0, c0, rc, cc), (r0, cc, rc, c1),
                          (rc, c0, r1, cc), (rc, cc, r1, c1)):
                if child != (r0, c0, r1, c1):
                    self._enqueue_rect(child)

    def next_index(self) -> int:
        while not self._pending:
            if not self._rects:
                raise Exhausted("non-adaptive refinement exhausted the grid")
            self._process_one_rect()
        return self._pending.popleft()


def nonadaptive_next(queue: RectQueue, domain: GridDomain) -> int:
    """Next index in the deterministic refinement order."""
    if queue.domain is not domain and queue.domain != domain:
        raise ValueError("queue was initialized for a different domain")
    return queue.next_index()
