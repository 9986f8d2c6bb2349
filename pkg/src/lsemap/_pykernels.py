"""Pure-numpy kernel routines (fallback for the compiled core)."""

import numpy as np

BACKEND_NAME = "python"


def rbf_cross(x1, x2, amplitude, length_scale):
    """Cross-kernel matrix k(x1_i, x2_j) = v * exp(-||x1_i - x2_j||^2 / (2 l^2))."""
    x1 = np.ascontiguousarray(x1, dtype=np.float64)
    x2 = np.ascontiguousarray(x2, dtype=np.float64)
    diff = x1[:, None, :] - x2[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return amplitude * np.exp(sq / (-2.0 * length_scale * length_scale))


def rbf_gram(x, amplitude, length_scale, diag_add):
    """Symmetric Gram matrix with `diag_add` (per-point noise + jitter) on the diagonal."""
    k = rbf_cross(x, x, amplitude, length_scale)
    k[np.diag_indices_from(k)] += np.asarray(diag_add, dtype=np.float64)
    return k
