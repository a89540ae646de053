"""Frame validation and patch-grid geometry."""

import numpy as np


def validate_frame(data):
    """Coerce input to a 2D float64 grid, rejecting empty or non-finite data."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"frame must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"frame dimensions must be >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("frame contains non-finite values")
    return arr


class PatchGrid:
    """Partition of a frame into non-overlapping square patches.

    The patch size must divide both frame dimensions exactly; frames that do
    not tile evenly are rejected so per-patch statistics stay unbiased.
    Patch (i, j) covers pixel rows [i*P, (i+1)*P) and columns [j*P, (j+1)*P);
    its row-major index is i * cols + j.
    """

    def __init__(self, frame, patch_size):
        frame = validate_frame(frame)
        patch_size = int(patch_size)
        if patch_size < 2:
            raise ValueError(f"patch size must be >= 2, got {patch_size}")
        height, width = frame.shape
        if height % patch_size or width % patch_size:
            raise ValueError(
                f"patch size {patch_size} does not divide frame dimensions "
                f"{height}x{width}"
            )
        self.frame = frame
        self.patch_size = patch_size
        self.rows = height // patch_size
        self.cols = width // patch_size

    @property
    def n_patches(self):
        return self.rows * self.cols

    def index(self, i, j):
        return i * self.cols + j

    def position(self, index):
        return divmod(int(index), self.cols)

    def _resolve(self, frame):
        if frame is None:
            return self.frame
        frame = validate_frame(frame)
        if frame.shape != self.frame.shape:
            raise ValueError(
                f"frame shape {frame.shape} does not match grid shape "
                f"{self.frame.shape}"
            )
        return frame

    def patch(self, i, j, frame=None):
        f = self._resolve(frame)
        p = self.patch_size
        return f[i * p:(i + 1) * p, j * p:(j + 1) * p]

    def blocks(self, frame=None):
        """All patches as a (rows, cols, P, P) view."""
        f = self._resolve(frame)
        p = self.patch_size
        return f.reshape(self.rows, p, self.cols, p).swapaxes(1, 2)
