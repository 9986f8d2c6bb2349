"""Incremental posterior sweep over a fixed candidate grid.

The engine needs mean/sd at every grid point after every measurement. The
training set only ever grows (and for transfer strategies the source block is
a fixed prefix), so the Cholesky factor gains exactly one row per step:

    L_new = [[L, 0], [l21', l22]],  l21 = L^{-1} k(X_old, x_new),
    l22 = sqrt(k(x_new, x_new) + d_new - |l21|^2)

and the cached panel V = L^{-1} K(X, grid) gains the matching row. Column
sums of V^2 give the variance term for the whole grid in O(N) per step.
This reproduces the dense solve (gp.fit + predict_batch) to rounding; the
parity test pins the agreement.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import backend
from .errors import FactorizationFailure
from .gp import JITTER_LADDER, GpPosterior, KernelParams, LabeledDataset


class PosteriorSweep:
    """Grid-posterior cache for one session.

    ``update`` accepts the full training state (points as grid indices plus
    an optional fixed prefix of off-grid source points) and returns grid mean
    and sd. Values may change freely between calls; a structural change
    (different params, shrunk or reordered points, jitter escalation) triggers
    a full rebuild.
    """

    def __init__(self, grid_points: np.ndarray):
        self.grid = np.ascontiguousarray(grid_points, dtype=float)
        self.n_grid = self.grid.shape[0]
        self._reset()

    def _reset(self) -> None:
        self.params: KernelParams | None = None
        self.jitter: float = 0.0
        self.n = 0
        self.points = np.empty((0, 2))
        self.diag_extra = np.empty(0)
        self._cap = 0
        self._L: np.ndarray | None = None     # (cap, cap), lower panel
        self._Kxn: np.ndarray | None = None   # (cap, N)
        self._V: np.ndarray | None = None     # (cap, N)
        self._ss: np.ndarray | None = None    # (N,)

    # -- capacity ------------------------------------------------------------

    def _grow(self, need: int) -> None:
        if need <= self._cap:
            return
        cap = max(64, self._cap)
        while cap < need:
            cap *= 2
        L = np.zeros((cap, cap))
        Kxn = np.empty((cap, self.n_grid))
        V = np.empty((cap, self.n_grid))
        if self.n:
            L[:self.n, :self.n] = self._L[:self.n, :self.n]
            Kxn[:self.n] = self._Kxn[:self.n]
            V[:self.n] = self._V[:self.n]
        self._L, self._Kxn, self._V = L, Kxn, V
        self._cap = cap

    # -- structural checks -----------------------------------------------------

    def _is_prefix(self, points: np.ndarray, diag_extra: np.ndarray) -> bool:
        if self.params is None or self.n > points.shape[0]:
            return False
        return (np.array_equal(points[:self.n], self.points[:self.n])
                and np.array_equal(diag_extra[:self.n], self.diag_extra[:self.n]))

    # -- factorization ----------------------------------------------------------

    def _append_one(self, x: np.ndarray, extra: float) -> bool:
        """Add one training point; False if the pivot is not positive."""
        p = self.params
        n = self.n
        self._grow(n + 1)
        k_grid = backend.rbf_cross(x[None, :], self.grid, p.amplitude,
                                   p.length_scale)[0]
        if n == 0:
            pivot = p.amplitude + p.noise_variance + extra + self.jitter
            if pivot <= 0:
                return False
            l22 = np.sqrt(pivot)
            self._L[0, 0] = l22
            self._Kxn[0] = k_grid
            self._V[0] = k_grid / l22
            self._ss = self._V[0] ** 2
        else:
            k_old = backend.rbf_cross(x[None, :], self.points[:n], p.amplitude,
                                      p.length_scale)[0]
            l21 = solve_triangular(self._L[:n, :n], k_old, lower=True)
            pivot = (p.amplitude + p.noise_variance + extra + self.jitter
                     - float(l21 @ l21))
            if pivot <= 0:
                return False
            l22 = np.sqrt(pivot)
            self._L[n, :n] = l21
            self._L[n, n] = l22
            self._Kxn[n] = k_grid
            self._V[n] = (k_grid - l21 @ self._V[:n]) / l22
            self._ss = self._ss + self._V[n] ** 2
        self.points = np.vstack([self.points, x[None, :]]) if n else x[None, :].copy()
        self.diag_extra = np.append(self.diag_extra, extra)
        self.n = n + 1
        return True

    def _rebuild(self, params: KernelParams, points: np.ndarray,
                 diag_extra: np.ndarray) -> None:
        for rel in JITTER_LADDER:
            self._reset()
            self.params = params
            self.jitter = rel * params.amplitude
            ok = True
            for i in range(points.shape[0]):
                if not self._append_one(points[i], float(diag_extra[i])):
                    ok = False
                    break
            if ok:
                return
        self._reset()
        raise FactorizationFailure(
            "grid sweep factorization failed at the top of the jitter ladder")

    def update(self, params: KernelParams, points: np.ndarray,
               diag_extra: np.ndarray, values: np.ndarray,
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Sync the factorization with (points, diag_extra) and solve for
        ``values``. Returns (grid_mean, grid_sd, L_view, dual_weights)."""
        points = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
        diag_extra = np.asarray(diag_extra, dtype=float).ravel()
        if params is not self.params or not self._is_prefix(points, diag_extra):
            self._rebuild(params, points, diag_extra)
        else:
            start = self.n
            for i in range(start, points.shape[0]):
                if not self._append_one(points[i], float(diag_extra[i])):
                    # Pivot loss on append: rebuild with an escalated ladder.
                    self._rebuild(params, points, diag_extra)
                    break

        n = self.n
        L = self._L[:n, :n]
        dual = cho_solve((L, True), np.asarray(values, dtype=float))
        mean = self._Kxn[:n].T @ dual
        var = np.clip(params.amplitude - self._ss, 0.0, params.amplitude)
        return mean, np.sqrt(var), L, dual

    def as_posterior(self, values: np.ndarray) -> GpPosterior:
        """Materialize the cached factorization as a queryable posterior."""
        if self.params is None or self.n == 0:
            raise FactorizationFailure("sweep cache is empty")
        n = self.n
        values = np.asarray(values, dtype=float)
        training = LabeledDataset(self.points[:n].copy(), values,
                                  extra_noise=self.diag_extra[:n].copy())
        L = self._L[:n, :n].copy()
        dual = cho_solve((L, True), values)
        return GpPosterior(params=self.params, training=training, chol=L,
                           dual_weights=dual, prior_mean_at_points=np.zeros(n),
                           jitter=self.jitter, _prior_lookup=None)
