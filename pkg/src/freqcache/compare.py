"""Three-policy comparison over a frame sequence.

Policies:

* ``freqcache``: the full decision pipeline (gate, alignment, refresh,
  budgeted ascending-energy selection).
* ``visual``: position-wise patch-embedding cosine against a fixed
  threshold, the naive visual-domain strategy.
* ``naive_freq``: position-wise cosine of per-patch amplitude spectra
  against a fixed threshold.

Each policy reports its mean reuse ratio, how often it reused a
ground-truth edge patch (when labels are available), and modeled latency.
"""

import numpy as np
import scipy.fft

from .frame import PatchGrid, validate_frame
from .fusion import DEFAULT_COST_MODEL, decide


def _raw_pixels(patch):
    return patch.ravel()


def _position_cosines(prev_vecs, curr_vecs):
    """Row-wise cosine of two (n, d) stacks; zero-norm rows score 0."""
    num = np.einsum("nd,nd->n", prev_vecs, curr_vecs)
    norm_p = np.linalg.norm(prev_vecs, axis=1)
    norm_c = np.linalg.norm(curr_vecs, axis=1)
    denom = norm_p * norm_c
    out = np.zeros(prev_vecs.shape[0])
    ok = denom > 0.0
    out[ok] = num[ok] / denom[ok]
    return out


def _token_stack(grid, frame, token_fn):
    vecs = [
        np.asarray(token_fn(grid.patch(*grid.position(idx), frame)),
                   dtype=np.float64).ravel()
        for idx in range(grid.n_patches)
    ]
    return np.stack(vecs)


def _patch_amplitudes(grid, frame):
    spectra = scipy.fft.fft2(grid.blocks(frame), axes=(-2, -1))
    return np.abs(spectra).reshape(grid.n_patches, -1)


def compare_domains(frames, cfg, *, token_fn=None, edge_labels=None,
                    tau_visual=0.85, tau_naive_freq=0.85, cost_model=None):
    """Run all three policies over consecutive frame pairs.

    ``edge_labels`` is an optional per-frame sequence of ground-truth edge
    patch indices; without it the false-reuse counts are reported as None.
    The visual baseline embeds patches as raw intensity vectors by default,
    which is exactly the position-wise matching it stands for.
    """
    if len(frames) < 2:
        raise ValueError("need at least 2 frames")
    frames = [validate_frame(f) for f in frames]
    token_fn = token_fn or _raw_pixels
    cost_model = cost_model or DEFAULT_COST_MODEL
    grid = PatchGrid(frames[0], cfg.patch_size)
    n = grid.n_patches
    have_labels = edge_labels is not None

    names = ("freqcache", "visual", "naive_freq")
    reused_total = dict.fromkeys(names, 0)
    false_reuse = dict.fromkeys(names, 0)
    latency_total = dict.fromkeys(names, 0.0)

    for t in range(1, len(frames)):
        prev, curr = frames[t - 1], frames[t]
        decision = decide(prev, curr, cfg, step=t)
        visual_cos = _position_cosines(
            _token_stack(grid, prev, token_fn), _token_stack(grid, curr, token_fn)
        )
        naive_cos = _position_cosines(
            _patch_amplitudes(grid, prev), _patch_amplitudes(grid, curr)
        )
        sets = {
            "freqcache": set(decision.reuse_set),
            "visual": set(np.flatnonzero(visual_cos > tau_visual)),
            "naive_freq": set(np.flatnonzero(naive_cos > tau_naive_freq)),
        }
        labels = frozenset(edge_labels[t]) if have_labels else frozenset()
        for name, reuse in sets.items():
            reused_total[name] += len(reuse)
            false_reuse[name] += len(reuse & labels)
            latency_total[name] += cost_model.latency_ms(n - len(reuse))

    n_steps = len(frames) - 1
    baseline = cost_model.latency_ms(n)
    policies = {}
    for name in names:
        mean_latency = latency_total[name] / n_steps
        policies[name] = {
            "reuse_ratio": reused_total[name] / (n_steps * n),
            "edge_false_reuse": false_reuse[name] if have_labels else None,
            "mean_latency_ms": mean_latency,
            "speedup": baseline / mean_latency,
        }
    return {
        "n_steps": n_steps,
        "n_tokens": n,
        "baseline_latency_ms": baseline,
        "thresholds": {"tau_visual": tau_visual,
                       "tau_naive_freq": tau_naive_freq},
        "policies": policies,
    }
