"""Deterministic synthetic scenes for exercising the decision pipeline.

Every scene is fully determined by its spec (including the seed): translate
scenes cyclically shift a broadband base frame, edge-inject scenes drop
step-edge patches onto a smooth gradient at scripted steps, complexity-ramp
scenes interpolate from a gradient to white noise, and noise/static scenes
provide the two extremes of temporal change.
"""

from dataclasses import dataclass

import numpy as np

SCENE_KINDS = ("translate", "edge-inject", "complexity-ramp", "noise", "static")


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    height: int = 64
    width: int = 64
    length: int = 16
    seed: int = 0
    shift: tuple = (2, 3)               # translate: per-step cyclic shift
    edge_count: int = 4                 # edge-inject: number of edge patches
    patch_size: int = 8                 # edge-inject: placement granularity
    gradient_range: tuple = (0.15, 0.85)
    noise_amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise ValueError(f"unknown scene kind {self.kind!r}")
        if self.height < 2 or self.width < 2:
            raise ValueError("scene dimensions must be >= 2")
        if self.length < 2:
            raise ValueError("scene length must be >= 2")
        if not 0.0 < self.noise_amplitude <= 1.0:
            raise ValueError("noise amplitude must lie in (0, 1]")


@dataclass(frozen=True)
class Scene:
    """Generated frames plus per-frame ground-truth edge patch indices."""

    spec: SceneSpec
    frames: list
    edge_labels: list  # frozenset of row-major patch indices, one per frame


def _gradient(height, width, lo, hi):
    gx = np.linspace(0.0, 1.0, height)[:, None]
    gy = np.linspace(0.0, 1.0, width)[None, :]
    return lo + (hi - lo) * (gx + gy) / 2.0


def _stamp_edge(frame, i, j, p, lo, hi, vertical):
    patch = np.full((p, p), lo)
    if vertical:
        patch[:, p // 2:] = hi
    else:
        patch[p // 2:, :] = hi
    frame[i * p:(i + 1) * p, j * p:(j + 1) * p] = patch


def generate_scene(spec):
    """Build the frame sequence for a spec; (spec, seed) determines it fully."""
    rng = np.random.default_rng(spec.seed)
    h, w, t_len = spec.height, spec.width, spec.length
    empty = [frozenset()] * t_len

    if spec.kind == "translate":
        base = rng.random((h, w))
        si, sj = spec.shift
        frames = [np.roll(base, (t * si, t * sj), axis=(0, 1)) for t in range(t_len)]
        return Scene(spec, frames, empty)

    if spec.kind == "static":
        base = rng.random((h, w))
        return Scene(spec, [base.copy() for _ in range(t_len)], empty)

    if spec.kind == "noise":
        frames = [rng.random((h, w)) * spec.noise_amplitude for _ in range(t_len)]
        return Scene(spec, frames, empty)

    lo, hi = spec.gradient_range
    if spec.kind == "complexity-ramp":
        gradient = _gradient(h, w, lo, hi)
        noise = rng.random((h, w))
        frames = []
        for t in range(t_len):
            weight = t / (t_len - 1)
            frames.append((1.0 - weight) * gradient + weight * noise)
        return Scene(spec, frames, empty)

    # edge-inject
    p = spec.patch_size
    if h % p or w % p:
        raise ValueError(
            f"patch size {p} does not divide scene dimensions {h}x{w}"
        )
    rows, cols = h // p, w // p
    n = rows * cols
    k = spec.edge_count
    if not 0 < k <= n:
        raise ValueError(f"edge count must lie in [1, {n}], got {k}")
    positions = rng.choice(n, size=k, replace=False)
    vertical = rng.integers(0, 2, size=k).astype(bool)
    appear = [(e * t_len) // (k + 1) for e in range(k)]
    background = _gradient(h, w, lo, hi)
    frames = []
    labels = []
    for t in range(t_len):
        frame = background.copy()
        present = []
        for e in range(k):
            if appear[e] <= t:
                i, j = divmod(int(positions[e]), cols)
                _stamp_edge(frame, i, j, p, lo, hi, bool(vertical[e]))
                present.append(int(positions[e]))
        frames.append(frame)
        labels.append(frozenset(present))
    return Scene(spec, frames, labels)
