"""Monte Carlo experiment runners with reproducible CSV output.

Every run is a pure function of (configuration, master seed): per-trial
random streams are derived from the master seed and the trial index, rows
are emitted sorted by trial index, and floats are written with repr, so
reruns are byte-identical even when trials execute in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cascade import CascadeCode, decode_cascade_parallel, decode_cascade_sequential
from .gf2 import BitVec
from .noise import NoiseModel, rng_for, sample_block_noise, sample_qerc_frame
from .qerc import QercCode, propagate_frame
from .reduce import reduce_x_parallel, reduce_x_sequential, reduce_z_parallel, reduce_z_sequential
from .zgraph import ZGraph

CSV_SCHEMA_QERC = "zqec-qerc-trials v1"
CSV_SCHEMA_CASCADE = "zqec-cascade-trials v1"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: str, schema: str, config_echo: str, fieldnames: list[str],
              rows: list[dict]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# {schema}; {config_echo}\n")
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(k, "")) for k in fieldnames) + "\n")


@dataclass
class QercExperiment:
    graph: ZGraph
    code: QercCode
    noise: NoiseModel
    reducers: tuple[str, ...] = ("sequential", "parallel")


def _qerc_trial(exp: QercExperiment, master_seed: int, trial: int) -> dict:
    g = exp.graph
    p = g.params
    rng = rng_for(master_seed, trial)
    frame = sample_qerc_frame(exp.noise, exp.code, rng)
    out = propagate_frame(exp.code, frame)
    w = frame.weights()
    row: dict = {"trial": trial, **w,
                 "xres_w": out.x_res.weight(), "zres_w": out.z_res.weight()}
    mterm_x = max(w["xq"], w["xx"] + w["xz"])
    mterm_z = max(w["zq"], w["zx"] + w["zz"])
    if "sequential" in exp.reducers:
        rx = reduce_x_sequential(g, out.sigma_z)
        rz = reduce_z_sequential(g, out.sigma_x)
        row.update(
            seq_x_after=(out.x_res ^ rx.estimate_primary).weight(),
            seq_x_flips=rx.flips, seq_x_conv=rx.converged, seq_x_work=rx.work,
            seq_z_after=(out.z_res ^ rz.estimate_primary).weight(),
            seq_z_flips=rz.flips, seq_z_conv=rz.converged, seq_z_work=rz.work,
        )
        env_x = p.delta1_prime * 8 * w["xz"] / p.delta2 + 8 * w["xz"] / p.delta1
        env_z = 8 * w["zx"] / p.delta1
        row["seq_x_env_ok"] = row["seq_x_after"] <= env_x
        row["seq_z_env_ok"] = row["seq_z_after"] <= env_z
    if "parallel" in exp.reducers:
        rx = reduce_x_parallel(g, out.sigma_z)
        rz = reduce_z_parallel(g, out.sigma_x)
        xq_after = (frame.xq ^ rx.aux_message).weight()
        xx_after = (frame.xx ^ rx.aux_check).weight()
        row.update(
            par_x_after=(out.x_res ^ rx.estimate_primary).weight(),
            par_xq_after=xq_after, par_xx_after=xx_after,
            par_x_flips=rx.flips, par_x_work=rx.work,
            par_z_after=(out.z_res ^ rz.estimate_primary).weight(),
            par_z_flips=rz.flips, par_z_work=rz.work,
        )
        row["par_x_env_ok"] = (
            xq_after < 32 / p.delta1 * mterm_x + 1e-9
            and xx_after < 32 / p.delta2 * mterm_x + 1e-9
        ) if mterm_x else (xq_after == 0 and xx_after == 0)
        row["par_z_env_ok"] = (
            row["par_z_after"] < 128 / p.delta1 * mterm_z + 1e-9
        ) if mterm_z else (row["par_z_after"] == 0)
    return row


def _summarize(rows: list[dict], reducers: tuple[str, ...]) -> dict:
    def col(name):
        return np.array([r[name] for r in rows], dtype=float)

    out: dict = {"trials": len(rows)}
    for prefix in ("seq", "par"):
        if ("sequential" if prefix == "seq" else "parallel") not in reducers:
            continue
        for side, d1, d2 in (("x", "xx", "xz"), ("z", "zx", "zz")):
            after = col(f"{prefix}_{side}_after")
            checks = col(d1) + col(d2)
            out[f"{prefix}_{side}_after_max"] = int(after.max()) if rows else 0
            out[f"{prefix}_{side}_mean_after"] = float(after.mean()) if rows else 0.0
            if checks.sum() > 0:
                # summary reduction factor: mean residual over mean check error
                out[f"{prefix}_{side}_factor"] = float(after.sum() / checks.sum())
                nz = checks > 0
                out[f"{prefix}_{side}_factor_max"] = float((after[nz] / checks[nz]).max())
            env = col(f"{prefix}_{side}_env_ok")
            out[f"{prefix}_{side}_env_violations"] = int((env == 0).sum())
    return out


def run_qerc_experiment(graph: ZGraph, code: QercCode, noise: NoiseModel, trials: int,
                        master_seed: int, reducers: tuple[str, ...] = ("sequential", "parallel"),
                        out: str | None = None, threads: int = 1) -> tuple[list[dict], dict]:
    """Run trials of encode/noise/unencode/reduce; returns (rows, summary)."""
    exp = QercExperiment(graph, code, noise, tuple(reducers))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_QercWorker(exp, master_seed), range(trials), chunksize=64))
    else:
        rows = [_qerc_trial(exp, master_seed, t) for t in range(trials)]
    rows.sort(key=lambda r: r["trial"])
    summary = _summarize(rows, exp.reducers)
    if out:
        fields = sorted({k for r in rows for k in r}, key=_field_order)
        srow = {"trial": "summary", **{k: v for k, v in summary.items()}}
        config = (f"graph=({graph.params.n},{graph.params.m},{graph.params.delta1},"
                  f"{graph.params.delta2}) noise={noise} trials={trials} seed={master_seed}")
        write_csv(out, CSV_SCHEMA_QERC, config,
                  fields + [k for k in srow if k not in fields and k != "trial"],
                  rows + [srow])
    return rows, summary


def _field_order(name: str):
    head = ["trial", "xq", "xx", "xz", "zq", "zz", "zx", "xres_w", "zres_w"]
    return (head.index(name), "") if name in head else (len(head), name)


class _QercWorker:
    def __init__(self, exp: QercExperiment, master_seed: int):
        self.exp = exp
        self.master_seed = master_seed

    def __call__(self, trial: int) -> dict:
        return _qerc_trial(self.exp, self.master_seed, trial)


def _cascade_trial(cc: CascadeCode, noise: NoiseModel, master_seed: int, trial: int,
                   pipelines: tuple[str, ...]) -> dict:
    rng = rng_for(master_seed, trial)
    msg_idx = np.arange(cc.message_range.start, cc.message_range.stop)
    x, z = sample_block_noise(noise, cc.block_length, msg_idx, rng)
    row: dict = {"trial": trial, "x_w": x.weight(), "z_w": z.weight(),
                 "msg_x_w": int(x.to_bits()[msg_idx].sum()),
                 "msg_z_w": int(z.to_bits()[msg_idx].sum())}
    if "sequential" in pipelines:
        rs = decode_cascade_sequential(cc, x, z)
        row.update(seq_success=rs.success, seq_flips=rs.flips,
                   seq_ops=rs.classical_ops, seq_nonconv=rs.nonconverged)
    if "parallel" in pipelines:
        rp = decode_cascade_parallel(cc, x, z)
        row.update(par_success=rp.success, par_ops=rp.classical_ops,
                   par_depth=rp.classical_depth, par_flips=rp.flips)
    return row


class _CascadeWorker:
    def __init__(self, cc: CascadeCode, noise: NoiseModel, master_seed: int,
                 pipelines: tuple[str, ...]):
        self.cc = cc
        self.noise = noise
        self.master_seed = master_seed
        self.pipelines = pipelines

    def __call__(self, trial: int) -> dict:
        return _cascade_trial(self.cc, self.noise, self.master_seed, trial, self.pipelines)


def run_cascade_experiment(cc: CascadeCode, noise: NoiseModel, trials: int, master_seed: int,
                           pipelines: tuple[str, ...] = ("sequential", "parallel"),
                           out: str | None = None, threads: int = 1) -> tuple[list[dict], dict]:
    """Run end-to-end decode trials on a cascade; returns (rows, summary)."""
    from .cascade import encode_cascade_stats

    if threads > 1:
        worker = _CascadeWorker(cc, noise, master_seed, tuple(pipelines))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(worker, range(trials), chunksize=16))
    else:
        rows = [_cascade_trial(cc, noise, master_seed, t, tuple(pipelines)) for t in range(trials)]
    rows.sort(key=lambda r: r["trial"])
    gates, depth = encode_cascade_stats(cc)
    summary: dict = {
        "trials": trials,
        "block_length": cc.block_length,
        "message_count": cc.message_count,
        "gate_count": gates,
        "encoder_depth": depth,
        "gates_per_qubit": gates / cc.block_length,
    }
    for prefix, key in (("seq", "sequential"), ("par", "parallel")):
        if key not in pipelines:
            continue
        succ = np.array([r[f"{prefix}_success"] for r in rows], dtype=float)
        summary[f"{prefix}_success_rate"] = float(succ.mean()) if trials else 1.0
    if "parallel" in pipelines and trials:
        ops = np.array([r["par_ops"] for r in rows], dtype=float)
        n = cc.block_length
        summary["par_ops_max"] = int(ops.max())
        summary["par_ops_per_nlogn"] = float(ops.max() / (n * math.log2(max(n, 2))))
        summary["par_depth_max"] = int(max(r["par_depth"] for r in rows))
    if out:
        fields = sorted({k for r in rows for k in r},
                        key=lambda k: (k != "trial", k))
        srow = {"trial": "summary", **summary}
        config = (f"cascade(k={cc.params.k}, r1={cc.params.r1}, r2={cc.params.r2}, "
                  f"n0={cc.params.n0}) noise={noise} trials={trials} seed={master_seed}")
        write_csv(out, CSV_SCHEMA_CASCADE, config,
                  fields + [k for k in srow if k not in fields and k != "trial"],
                  rows + [srow])
    return rows, summary
