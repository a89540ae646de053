"""Scene-transition gating, displacement recovery, and alignment masking."""

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.fft

from .errors import ConstantFrameError, DegenerateSpectrumError
from .frame import validate_frame

# Added to the cross-power magnitude so dead bins do not divide by zero.
CROSS_POWER_EPS = 1e-12


@dataclass(frozen=True)
class Displacement:
    """Inter-frame cyclic shift in pixels plus its patch-unit quantization.

    Pixel components are wraparound-canonical (|di| <= H/2, |dj| <= W/2).
    Patch components round to the nearest whole patch; exact half-patch
    offsets round toward zero.
    """

    di: int
    dj: int
    di_patches: int
    dj_patches: int

    @classmethod
    def from_pixels(cls, di, dj, patch_size=1):
        return cls(
            int(di),
            int(dj),
            _to_patch_units(di, patch_size),
            _to_patch_units(dj, patch_size),
        )


def _to_patch_units(d, patch_size):
    d = int(d)
    p = int(patch_size)
    sign = 1 if d >= 0 else -1
    return sign * ((2 * abs(d) + p - 1) // (2 * p))


class GateAction(Enum):
    FLUSH = "flush"
    PROCEED = "proceed"


def sim_spatial(prev, curr, grid, token_fn):
    """Mean position-wise cosine similarity between patch embeddings.

    This is the naive visual-domain score: each patch is compared only with
    the patch at the same grid position in the other frame, so any content
    shift drags it down. Zero-norm embeddings contribute 0 to the mean and
    trigger a RuntimeWarning.
    """
    prev = validate_frame(prev)
    curr = validate_frame(curr)
    if prev.shape != curr.shape:
        raise ValueError(f"frame shapes differ: {prev.shape} vs {curr.shape}")
    total = 0.0
    degenerate = 0
    for i in range(grid.rows):
        for j in range(grid.cols):
            a = np.asarray(token_fn(grid.patch(i, j, prev)), dtype=np.float64).ravel()
            b = np.asarray(token_fn(grid.patch(i, j, curr)), dtype=np.float64).ravel()
            norm_a = float(np.linalg.norm(a))
            norm_b = float(np.linalg.norm(b))
            if norm_a == 0.0 or norm_b == 0.0:
                degenerate += 1
                continue
            total += float(np.dot(a, b)) / (norm_a * norm_b)
    if degenerate:
        warnings.warn(
            f"{degenerate} patch position(s) had zero-norm embeddings and "
            "contributed 0 similarity",
            RuntimeWarning,
            stacklevel=2,
        )
    return total / grid.n_patches


def sim_freq(amp_prev, amp_curr):
    """Cosine similarity of two amplitude spectra, flattened to vectors.

    Nonnegative inputs put the score in [0, 1]; cyclic translation of the
    underlying frame leaves it unchanged.
    """
    a = np.asarray(amp_prev, dtype=np.float64).ravel()
    b = np.asarray(amp_curr, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("amplitude grids must have equal dimensions")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("amplitude grids contain non-finite values")
    if np.any(a < 0.0) or np.any(b < 0.0):
        raise ValueError("amplitude grids must be nonnegative")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateSpectrumError("degenerate spectrum")
    return min(1.0, float(np.dot(a, b)) / (norm_a * norm_b))


def phase_correlation(prev, curr, patch_size=1):
    """Recover the cyclic displacement between two frames.

    Normalizes the cross-power spectrum of the frame pair to unit magnitude
    and locates the impulse in its inverse transform. The returned
    displacement (di, dj) satisfies ``curr == roll(prev, (di, dj))`` exactly
    when the frames are cyclic shifts of each other; for real (non-cyclic)
    motion the estimate is approximate.
    """
    prev = validate_frame(prev)
    curr = validate_frame(curr)
    if prev.shape != curr.shape:
        raise ValueError(f"frame shapes differ: {prev.shape} vs {curr.shape}")
    if np.ptp(prev) == 0.0 or np.ptp(curr) == 0.0:
        raise ConstantFrameError("no texture; displacement undefined")
    return phase_correlation_spectra(
        scipy.fft.fft2(prev), scipy.fft.fft2(curr), patch_size
    )


def phase_correlation_spectra(spec_prev, spec_curr, patch_size=1):
    """Phase correlation on precomputed forward spectra of the two frames."""
    cross = spec_prev * np.conj(spec_curr)
    cross /= np.abs(cross) + CROSS_POWER_EPS
    response = scipy.fft.ifft2(cross).real
    di, dj = _impulse_displacement(response)
    return Displacement.from_pixels(di, dj, patch_size)


def _canonical(d, n):
    return d - n if 2 * d >= n else d


def _impulse_displacement(response):
    """Displacement encoded by the impulse peak of a correlation response.

    An impulse at bin p corresponds to displacement (-p) mod dim; the result
    is wraparound-canonicalized. Exact ties at the peak value prefer the
    smallest |di| + |dj|, then the peak's row-major position.
    """
    h, w = response.shape
    peak_value = response.max()
    best_key = None
    best = (0, 0)
    for pi, pj in np.argwhere(response == peak_value):
        di = _canonical(int(-pi) % h, h)
        dj = _canonical(int(-pj) % w, w)
        key = (abs(di) + abs(dj), int(pi), int(pj))
        if best_key is None or key < best_key:
            best_key = key
            best = (di, dj)
    return best


def alignment_mask(disp, grid):
    """Boolean patch mask marking positions whose displacement-mapped source
    exists in the previous frame's grid.

    mask[i, j] is True iff (i - di_patches, j - dj_patches) lies inside the
    grid; everything else has newly entered the view and must be recomputed.
    """
    mask = np.zeros((grid.rows, grid.cols), dtype=bool)
    r0 = max(0, disp.di_patches)
    r1 = min(grid.rows, grid.rows + disp.di_patches)
    c0 = max(0, disp.dj_patches)
    c1 = min(grid.cols, grid.cols + disp.dj_patches)
    if r0 < r1 and c0 < c1:
        mask[r0:r1, c0:c1] = True
    return mask


def migration_gate(sim, tau_mig):
    """Flush when spectral similarity falls below the threshold (strict)."""
    if not 0.0 <= sim <= 1.0:
        raise ValueError(f"similarity must lie in [0, 1], got {sim}")
    if not 0.0 <= tau_mig <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {tau_mig}")
    return GateAction.FLUSH if sim < tau_mig else GateAction.PROCEED
