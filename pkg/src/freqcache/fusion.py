"""Decision fusion: run the three frequency analyses on a frame pair, gate,
select the reuse set, and maintain the token cache across steps."""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .budget import BudgetConfig, EntropyReading, reuse_budget, spectral_entropy
from .edge_refresh import cutoff_index, patch_energy, refresh_mask
from .errors import ConstantFrameError, DegenerateSpectrumError
from .frame import PatchGrid, validate_frame
from .migration import (
    CROSS_POWER_EPS,
    Displacement,
    GateAction,
    alignment_mask,
    migration_gate,
    phase_correlation_spectra,
    sim_freq,
)


@dataclass(frozen=True)
class CostModel:
    """Affine per-step latency in the number of recomputed tokens."""

    base_ms: float
    per_token_ms: float

    def latency_ms(self, n_recompute):
        return self.base_ms + self.per_token_ms * n_recompute

    @classmethod
    def calibrated(cls, full_ms, cached_ms, reuse_ratio, n_tokens):
        """Fit the two constants so that recomputing all ``n_tokens`` costs
        ``full_ms`` and running at ``reuse_ratio`` costs ``cached_ms``."""
        n_full = float(n_tokens)
        n_cached = n_tokens * (1.0 - reuse_ratio)
        per = (full_ms - cached_ms) / (n_full - n_cached)
        return cls(full_ms - per * n_full, per)


# Calibrated so a 196-token step costs 637 ms with no reuse and 401 ms at
# 53.5% reuse.
DEFAULT_COST_MODEL = CostModel.calibrated(637.0, 401.0, 0.535, 196)


@dataclass(frozen=True)
class CacheConfig:
    """Pipeline hyperparameters."""

    tau_mig: float = 0.12
    edge_lambda: float = 0.25
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    patch_size: int = 16

    def __post_init__(self):
        if not 0.0 <= self.tau_mig <= 1.0:
            raise ValueError(f"tau_mig must lie in [0, 1], got {self.tau_mig}")
        if not math.isfinite(self.edge_lambda):
            raise ValueError("edge_lambda must be finite")
        if self.patch_size < 2:
            raise ValueError(f"patch_size must be >= 2, got {self.patch_size}")


@dataclass
class CacheDecision:
    """Per-step outcome: gate result, masks' consequences, and the reuse set.

    ``reuse_set`` is ordered by ascending patch energy (ties row-major);
    ``recompute_set`` is row-major. ``timings_us`` is diagnostic only and is
    excluded from equality.
    """

    step: int
    flushed: bool
    sim_freq: float
    displacement: Displacement
    entropy: EntropyReading
    alpha_t: float
    k_reuse: int
    k_candidate: int
    k_final: int
    reuse_set: tuple
    recompute_set: tuple
    rows: int
    cols: int
    refresh_set: tuple
    diagnostic: str = None
    timings_us: dict = field(default_factory=dict, compare=False)


def default_token_fn(patch):
    """16-bin intensity histogram over [0, 1] plus patch mean and variance."""
    p = np.asarray(patch, dtype=np.float64)
    hist, _ = np.histogram(np.clip(p, 0.0, 1.0), bins=16, range=(0.0, 1.0))
    return np.concatenate([hist.astype(np.float64), [p.mean(), p.var()]])


def topk_ascending(candidates, energies, k):
    """First k candidate indices by ascending energy; ties break row-major.

    ``energies`` is indexed by flat patch index, so candidates may be any
    subset of positions.
    """
    cand = np.asarray(candidates, dtype=np.int64)
    if cand.size == 0 or k <= 0:
        return ()
    e = np.asarray(energies, dtype=np.float64).ravel()
    order = np.lexsort((cand, e[cand]))
    return tuple(int(cand[o]) for o in order[: min(int(k), cand.size)])


_ANALYSIS_ERRORS = (DegenerateSpectrumError, ConstantFrameError)


def decide(prev, curr, cfg, *, step=0, parallel=False):
    """Decide which patches of ``curr`` may reuse cached tokens.

    The migration, edge, and budget analyses are independent and join at a
    single synchronization point before token selection; ``parallel=True``
    runs them on separate threads. Degenerate inputs (all-zero or constant
    frames) force a flush with a diagnostic instead of raising, so a black
    frame cannot abort a sequence.
    """
    prev = validate_frame(prev)
    curr = validate_frame(curr)
    if prev.shape != curr.shape:
        raise ValueError(f"frame shapes differ: {prev.shape} vs {curr.shape}")
    grid = PatchGrid(curr, cfg.patch_size)
    n = grid.n_patches

    t0 = time.perf_counter_ns()
    spec_prev = scipy.fft.fft2(prev)
    spec_curr = scipy.fft.fft2(curr)
    amp_prev = np.abs(spec_prev)
    amp_curr = np.abs(spec_curr)
    t_transform = time.perf_counter_ns() - t0

    def migration_stage():
        t = time.perf_counter_ns()
        sim = sim_freq(amp_prev, amp_curr)
        if np.ptp(prev) == 0.0 or np.ptp(curr) == 0.0:
            raise ConstantFrameError("no texture; displacement undefined")
        disp = phase_correlation_spectra(spec_prev, spec_curr, cfg.patch_size)
        align = alignment_mask(disp, grid)
        return sim, disp, align, time.perf_counter_ns() - t

    def edge_stage():
        t = time.perf_counter_ns()
        energy = patch_energy(grid)
        fresh = refresh_mask(energy, cfg.edge_lambda)
        return energy, fresh, time.perf_counter_ns() - t

    def budget_stage():
        t = time.perf_counter_ns()
        entropy = spectral_entropy(amp_curr)
        alpha, k_reuse = reuse_budget(entropy.normalized, cfg.budget, n)
        return entropy, alpha, k_reuse, time.perf_counter_ns() - t

    stages = (migration_stage, edge_stage, budget_stage)
    if parallel:
        with ThreadPoolExecutor(max_workers=3) as pool:
            futures = [pool.submit(s) for s in stages]
            results = []
            for f in futures:
                try:
                    results.append(f.result())
                except _ANALYSIS_ERRORS as exc:
                    results.append(exc)
    else:
        results = []
        for s in stages:
            try:
                results.append(s())
            except _ANALYSIS_ERRORS as exc:
                results.append(exc)
    mig, edge, bud = results

    # Synchronization point: all three stages have completed.
    timings = {"transform": t_transform // 1000}
    sim = 0.0
    disp = Displacement(0, 0, 0, 0)
    align = None
    if not isinstance(mig, Exception):
        sim, disp, align, dt = mig
        timings["migration"] = dt // 1000
    entropy = EntropyReading(0.0, 0.0, prev.size)
    alpha, k_reuse = 0.0, 0
    if not isinstance(bud, Exception):
        entropy, alpha, k_reuse, dt = bud
        timings["budget"] = dt // 1000
    energy, fresh, dt = edge
    timings["edge"] = dt // 1000
    refresh_set = tuple(int(p) for p in np.flatnonzero(fresh.mask.ravel()))

    failure = next((r for r in (mig, bud) if isinstance(r, Exception)), None)

    t_sel = time.perf_counter_ns()
    if failure is not None:
        flushed, diagnostic = True, str(failure)
        k_candidate, k_final = 0, 0
        reuse = ()
    elif migration_gate(sim, cfg.tau_mig) is GateAction.FLUSH:
        flushed, diagnostic = True, None
        k_candidate, k_final = 0, 0
        reuse = ()
    else:
        flushed, diagnostic = False, None
        candidate_idx = np.flatnonzero((align & ~fresh.mask).ravel())
        k_candidate = int(candidate_idx.size)
        k_final = min(k_reuse, k_candidate)
        reuse = topk_ascending(candidate_idx, energy.energies, k_final)
    keep = np.ones(n, dtype=bool)
    keep[list(reuse)] = False
    recompute = tuple(int(p) for p in np.flatnonzero(keep))
    timings["select"] = (time.perf_counter_ns() - t_sel) // 1000

    decision = CacheDecision(
        step=int(step),
        flushed=flushed,
        sim_freq=float(sim),
        displacement=disp,
        entropy=entropy,
        alpha_t=float(alpha),
        k_reuse=int(k_reuse),
        k_candidate=int(k_candidate),
        k_final=int(k_final),
        reuse_set=reuse,
        recompute_set=recompute,
        rows=grid.rows,
        cols=grid.cols,
        refresh_set=refresh_set,
        diagnostic=diagnostic,
        timings_us=timings,
    )
    _assert_decision(decision, align, fresh.mask, n)
    return decision


def _assert_decision(decision, align, fresh, n):
    """In-run invariants: partition, budget, flush, and safety."""
    reuse = set(decision.reuse_set)
    recompute = set(decision.recompute_set)
    assert not reuse & recompute, "reuse and recompute sets overlap"
    assert len(reuse) + len(recompute) == n, "sets do not partition the patches"
    assert decision.k_final == len(decision.reuse_set) == min(
        decision.k_reuse, decision.k_candidate
    ), "reuse count does not match the budget rule"
    if decision.flushed:
        assert decision.k_final == 0, "flushed step must reuse nothing"
    if align is not None:
        align_flat = align.ravel()
        fresh_flat = fresh.ravel()
        for p in decision.reuse_set:
            assert align_flat[p] and not fresh_flat[p], (
                f"reused patch {p} violates alignment/refresh safety"
            )


def decide_reference(prev, curr, cfg, *, step=0):
    """Slow twin of :func:`decide` built from direct-definition transforms
    and a full sort in place of the fast selection.

    Exists for equivalence testing only; it must agree with ``decide``
    field-by-field on every input.
    """
    prev = validate_frame(prev)
    curr = validate_frame(curr)
    if prev.shape != curr.shape:
        raise ValueError(f"frame shapes differ: {prev.shape} vs {curr.shape}")
    grid = PatchGrid(curr, cfg.patch_size)
    n = grid.n_patches
    h, w = curr.shape

    spec_prev = _dft2_direct(prev)
    spec_curr = _dft2_direct(curr)
    amp_prev = np.abs(spec_prev)
    amp_curr = np.abs(spec_curr)

    # Edge analysis (never degenerate): per-patch masked DCT energy.
    p = cfg.patch_size
    cut = cutoff_index(p)
    hp = np.ones((p, p))
    hp[:cut, :cut] = 0.0
    energies = np.empty((grid.rows, grid.cols))
    for i in range(grid.rows):
        for j in range(grid.cols):
            coeffs = hp * _dct2_direct(grid.patch(i, j))
            energies[i, j] = float(np.sum(coeffs * coeffs))
    mu = float(energies.sum()) / n
    sigma = math.sqrt(float(((energies - mu) ** 2).sum()) / n)
    fresh = energies > mu + cfg.edge_lambda * sigma
    refresh_set = tuple(int(q) for q in np.flatnonzero(fresh.ravel()))

    # Mirror decide's stage semantics: a stage that raises contributes only
    # its defaults, even for values it had produced before failing.
    failure = None
    sim = 0.0
    disp = Displacement(0, 0, 0, 0)
    align = None
    try:
        norm_p = math.sqrt(float(np.sum(amp_prev * amp_prev)))
        norm_c = math.sqrt(float(np.sum(amp_curr * amp_curr)))
        if norm_p == 0.0 or norm_c == 0.0:
            raise DegenerateSpectrumError("degenerate spectrum")
        stage_sim = min(1.0, float(np.sum(amp_prev * amp_curr)) / (norm_p * norm_c))
        if np.ptp(prev) == 0.0 or np.ptp(curr) == 0.0:
            raise ConstantFrameError("no texture; displacement undefined")
        cross = spec_prev * np.conj(spec_curr)
        cross /= np.abs(cross) + CROSS_POWER_EPS
        response = _idft2_direct(cross).real
        peak = response.max()
        best_key = None
        di = dj = 0
        for pi, pj in np.argwhere(response == peak):
            ci = int(-pi) % h
            cj = int(-pj) % w
            ci = ci - h if 2 * ci >= h else ci
            cj = cj - w if 2 * cj >= w else cj
            key = (abs(ci) + abs(cj), int(pi), int(pj))
            if best_key is None or key < best_key:
                best_key = key
                di, dj = ci, cj
        stage_disp = Displacement.from_pixels(di, dj, p)
        stage_align = np.zeros((grid.rows, grid.cols), dtype=bool)
        for i in range(grid.rows):
            for j in range(grid.cols):
                si = i - stage_disp.di_patches
                sj = j - stage_disp.dj_patches
                stage_align[i, j] = 0 <= si < grid.rows and 0 <= sj < grid.cols
        sim, disp, align = stage_sim, stage_disp, stage_align
    except _ANALYSIS_ERRORS as exc:
        failure = exc

    entropy = EntropyReading(0.0, 0.0, prev.size)
    alpha, k_reuse = 0.0, 0
    try:
        power = (amp_curr * amp_curr).ravel()
        total = float(power.sum())
        if total <= 0.0:
            raise DegenerateSpectrumError("degenerate spectrum")
        prob = power / total
        raw = float(-np.sum(prob[prob > 0.0] * np.log(prob[prob > 0.0]))) + 0.0
        stage_entropy = EntropyReading(raw, raw / math.log(prob.size), prob.size)
        stage_alpha = cfg.budget.alpha_min + (
            cfg.budget.alpha_max - cfg.budget.alpha_min
        ) * math.exp(-stage_entropy.normalized)
        entropy = stage_entropy
        alpha = stage_alpha
        k_reuse = int(math.floor(stage_alpha * n))
    except _ANALYSIS_ERRORS as exc:
        failure = failure or exc

    if failure is not None:
        flushed, diagnostic = True, str(failure)
        k_candidate, k_final = 0, 0
        reuse = ()
    elif sim < cfg.tau_mig:
        flushed, diagnostic = True, None
        k_candidate, k_final = 0, 0
        reuse = ()
    else:
        flushed, diagnostic = False, None
        e_flat = energies.ravel()
        candidates = [
            q for q in range(n) if align.ravel()[q] and not fresh.ravel()[q]
        ]
        k_candidate = len(candidates)
        k_final = min(k_reuse, k_candidate)
        ranked = sorted(candidates, key=lambda q: (e_flat[q], q))
        reuse = tuple(ranked[:k_final])
    reused = set(reuse)
    recompute = tuple(q for q in range(n) if q not in reused)

    decision = CacheDecision(
        step=int(step),
        flushed=flushed,
        sim_freq=float(sim),
        displacement=disp,
        entropy=entropy,
        alpha_t=float(alpha),
        k_reuse=int(k_reuse),
        k_candidate=int(k_candidate),
        k_final=int(k_final),
        reuse_set=reuse,
        recompute_set=recompute,
        rows=grid.rows,
        cols=grid.cols,
        refresh_set=refresh_set,
        diagnostic=diagnostic,
    )
    _assert_decision(decision, align if not flushed else None, fresh, n)
    return decision


def _dft_matrix(n):
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


def _dft2_direct(frame):
    h, w = frame.shape
    return _dft_matrix(h) @ frame.astype(np.complex128) @ _dft_matrix(w)


def _idft2_direct(spec):
    h, w = spec.shape
    return np.conj(_dft_matrix(h)) @ spec @ np.conj(_dft_matrix(w)) / (h * w)


def _dct2_direct(patch):
    p = patch.shape[0]
    x = np.arange(p)
    basis = np.cos(np.pi * np.outer(np.arange(p), 2 * x + 1) / (2 * p))
    scale = np.full(p, math.sqrt(2.0 / p))
    scale[0] = math.sqrt(1.0 / p)
    c = basis * scale[:, None]
    return c @ patch @ c.T


@dataclass
class TokenCache:
    """Per-patch token store: values plus steps-since-recompute ages."""

    tokens: np.ndarray  # (rows, cols, dim)
    ages: np.ndarray    # (rows, cols) int

    @property
    def rows(self):
        return self.tokens.shape[0]

    @property
    def cols(self):
        return self.tokens.shape[1]


@dataclass(frozen=True)
class StepReport:
    step: int
    n_reused: int
    n_recomputed: int
    latency_model_ms: float


def populate_cache(frame, patch_size, token_fn):
    """Cold-start cache: every slot computed from the frame, all ages 0."""
    grid = PatchGrid(frame, patch_size)
    first = np.asarray(token_fn(grid.patch(0, 0)), dtype=np.float64).ravel()
    tokens = np.empty((grid.rows, grid.cols, first.size))
    tokens[0, 0] = first
    for idx in range(1, grid.n_patches):
        i, j = grid.position(idx)
        tokens[i, j] = np.asarray(token_fn(grid.patch(i, j)), dtype=np.float64).ravel()
    return TokenCache(tokens, np.zeros((grid.rows, grid.cols), dtype=np.int64))


def step(cache, decision, curr, token_fn, cost_model=None):
    """Apply a decision to the cache for the current frame.

    Reused slots are copied from their displacement-mapped source in the
    previous cache and their age incremented; everything else is recomputed
    with ``token_fn`` at age 0. Passing ``cache=None`` (cold start) or a
    flushed decision recomputes every slot.
    """
    curr = validate_frame(curr)
    cost_model = cost_model or DEFAULT_COST_MODEL
    rows, cols = decision.rows, decision.cols
    h, w = curr.shape
    if h % rows or w % cols or h // rows != w // cols:
        raise ValueError(
            f"decision grid {rows}x{cols} does not tile frame {h}x{w}"
        )
    grid = PatchGrid(curr, h // rows)
    n = grid.n_patches

    reuse = () if cache is None or decision.flushed else decision.reuse_set
    tokens = None
    ages = np.zeros((rows, cols), dtype=np.int64)
    dip, djp = decision.displacement.di_patches, decision.displacement.dj_patches
    for idx in reuse:
        i, j = grid.position(idx)
        si, sj = i - dip, j - djp
        assert 0 <= si < rows and 0 <= sj < cols, (
            f"reuse source ({si}, {sj}) out of bounds for patch {idx}"
        )
        if tokens is None:
            tokens = np.empty((rows, cols) + cache.tokens.shape[2:])
        tokens[i, j] = cache.tokens[si, sj]
        ages[i, j] = cache.ages[si, sj] + 1
    reused = set(reuse)
    for idx in range(n):
        if idx in reused:
            continue
        i, j = grid.position(idx)
        vec = np.asarray(token_fn(grid.patch(i, j)), dtype=np.float64).ravel()
        if tokens is None:
            tokens = np.empty((rows, cols, vec.size))
        tokens[i, j] = vec
        ages[i, j] = 0
    n_recomputed = n - len(reused)
    report = StepReport(
        step=decision.step,
        n_reused=len(reused),
        n_recomputed=n_recomputed,
        latency_model_ms=cost_model.latency_ms(n_recomputed),
    )
    return TokenCache(tokens, ages), report


@dataclass
class SequenceReport:
    """Aggregate metrics over the decision steps of a sequence.

    The cold start (step 0, all tokens computed) is excluded from the
    aggregates; decisions cover steps 1 .. T-1.
    """

    n_frames: int
    n_tokens: int
    decisions: list
    step_reports: list
    mean_reuse_ratio: float
    mean_latency_ms: float
    baseline_latency_ms: float
    speedup: float
    flush_count: int


def run_sequence(frames, cfg, token_fn=default_token_fn, cost_model=None,
                 parallel=False):
    """Drive decide/step over consecutive frames and aggregate the metrics."""
    if len(frames) < 2:
        raise ValueError("need at least 2 frames")
    frames = [validate_frame(f) for f in frames]
    shape = frames[0].shape
    for t, f in enumerate(frames):
        if f.shape != shape:
            raise ValueError(
                f"frame at step {t}: dimension mismatch {f.shape} vs {shape}"
            )
    cost_model = cost_model or DEFAULT_COST_MODEL
    grid = PatchGrid(frames[0], cfg.patch_size)
    n = grid.n_patches

    cache = populate_cache(frames[0], cfg.patch_size, token_fn)
    decisions = []
    reports = []
    for t in range(1, len(frames)):
        d = decide(frames[t - 1], frames[t], cfg, step=t, parallel=parallel)
        cache, rep = step(cache, d, frames[t], token_fn, cost_model)
        decisions.append(d)
        reports.append(rep)

    total_reused = sum(d.k_final for d in decisions)
    mean_latency = sum(r.latency_model_ms for r in reports) / len(reports)
    baseline = cost_model.latency_ms(n)
    return SequenceReport(
        n_frames=len(frames),
        n_tokens=n,
        decisions=decisions,
        step_reports=reports,
        mean_reuse_ratio=total_reused / (len(decisions) * n),
        mean_latency_ms=mean_latency,
        baseline_latency_ms=baseline,
        speedup=baseline / mean_latency,
        flush_count=sum(1 for d in decisions if d.flushed),
    )
