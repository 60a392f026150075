"""NumPy reference implementations of the beamforming inner loops.

Used when the compiled extension is unavailable (or disabled through
SPINSAR_FORCE_FALLBACK=1). The matrix products run on BLAS, so the
``threads`` argument is accepted but ignored here.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def _window_weights(phase: np.ndarray, win_start: np.ndarray, win_len: np.ndarray):
    """Dense (directions, chirps) weight matrix, zero outside each window."""
    n_dir, n_chirp = phase.shape
    weights = np.zeros((n_dir, n_chirp), dtype=np.complex128)
    if n_dir == 0:
        return weights
    max_len = int(win_len.max(initial=0))
    if max_len == 0:
        return weights
    offsets = np.arange(max_len)
    cols = (win_start[:, None] + offsets[None, :]) % n_chirp
    valid = offsets[None, :] < win_len[:, None]
    rows = np.broadcast_to(np.arange(n_dir)[:, None], cols.shape)
    r, ccol = rows[valid], cols[valid]
    weights[r, ccol] = np.exp(1j * phase[r, ccol])
    return weights


def azimuth_sum(sprime, phase, win_start, win_len, threads=1):
    """Windowed weighted chirp sum after elevation combining.

    out[i, :] = sum over window chirps t of exp(j phase[i, t]) * sprime[t, :].
    """
    weights = _window_weights(phase, win_start, win_len)
    return weights @ sprime


def direct_sum(cube, phase, elev_phase, win_start, win_len, threads=1):
    """Windowed weighted sum over antennas and chirps (no factorization).

    out[i, :] = sum over antennas a and window chirps t of
    exp(j (phase[i, t] + elev_phase[a])) * cube[a, t, :].
    """
    weights = _window_weights(phase, win_start, win_len)
    n_dir = phase.shape[0]
    n_fast = cube.shape[2]
    out = np.zeros((n_dir, n_fast), dtype=np.complex128)
    for a in range(cube.shape[0]):
        out += np.exp(1j * elev_phase[a]) * (weights @ cube[a])
    return out
