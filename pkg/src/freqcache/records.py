"""Serialization of decisions and sequence metrics.

Decisions go to JSON Lines (one object per step); aggregate metrics go to a
CSV stream with a fixed header. Stage timings are measured wall-clock and
therefore vary run to run, so they are only written when explicitly
requested; everything else is deterministic for identical inputs.
"""

import csv
import json

METRICS_HEADER = ["step", "reuse_ratio", "sim_freq", "entropy", "alpha",
                  "latency_model_ms"]


def decision_record(decision, include_timings=False):
    """Plain-dict form of a decision, matching the JSONL schema."""
    rec = {
        "step": decision.step,
        "flushed": decision.flushed,
        "sim_freq": decision.sim_freq,
        "displacement": {
            "di": decision.displacement.di,
            "dj": decision.displacement.dj,
            "di_p": decision.displacement.di_patches,
            "dj_p": decision.displacement.dj_patches,
        },
        "entropy": {
            "raw": decision.entropy.raw,
            "normalized": decision.entropy.normalized,
        },
        "alpha": decision.alpha_t,
        "k_reuse": decision.k_reuse,
        "k_candidate": decision.k_candidate,
        "k_final": decision.k_final,
        "reuse_set": list(decision.reuse_set),
        "grid": {"rows": decision.rows, "cols": decision.cols},
        "refresh_set": list(decision.refresh_set),
        "diagnostic": decision.diagnostic,
    }
    if include_timings:
        rec["timings_us"] = {k: int(v) for k, v in decision.timings_us.items()}
    return rec


def write_decisions_jsonl(path, decisions, include_timings=False):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in decisions:
            fh.write(json.dumps(decision_record(d, include_timings)))
            fh.write("\n")


def read_decisions_jsonl(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def metrics_rows(report):
    """CSV rows (one per decision step) for a sequence report."""
    rows = []
    for d, rep in zip(report.decisions, report.step_reports):
        rows.append([
            d.step,
            d.k_final / report.n_tokens,
            d.sim_freq,
            d.entropy.normalized,
            d.alpha_t,
            rep.latency_model_ms,
        ])
    return rows


def write_metrics_csv(path, report):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        writer.writerows(metrics_rows(report))
