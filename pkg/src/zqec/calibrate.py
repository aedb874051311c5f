"""Calibration of decoder operating points.

The guarantees of the reduction lemmas hold for "small enough" weight
fractions that are never pinned numerically; this module finds the largest
fractions at which no violation is observed over a trial budget, by binary
search on a joint scale.  Results are written to a versioned key = value
file that experiments and the acceptance suite consume.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from .cascade import CascadeCode, decode_cascade_parallel, decode_cascade_sequential
from .errors import ParameterError, ParseError
from .gf2 import BitVec
from .noise import NoiseModel, rng_for, sample_block_noise
from .qerc import build_code, propagate_frame
from .reduce import reduce_x_parallel, reduce_x_sequential, reduce_z_parallel, reduce_z_sequential
from .zgraph import ZGraph, ZGraphParams, sample_random_zgraph

__all__ = [
    "OperatingPoint",
    "calibrate",
    "calibrate_cascade_rate",
    "load_calibration",
    "save_calibration",
]

CALIBRATION_SCHEMA = "zqec-calibration v1"


@dataclass
class OperatingPoint:
    """Largest zero-violation weight fractions plus observed reduction factors."""

    target: str
    alpha: float
    beta: float
    gamma: float
    eps_x: float
    eps_z: float
    trials: int
    graph: tuple[int, int, int, int]


def _violations_at(g: ZGraph, code, target: str, scale: float, trials: int,
                   master_seed: int) -> tuple[int, float, float]:
    """Envelope violations plus summary reduction factors at one weight scale.

    Noise is drawn from the same fixed-weight model the experiment runner
    uses (v = scale*n message errors, t = scale*2m check errors, uniform
    X/Z/Y types), so rare type splits that concentrate weight on one side
    count against feasibility.  Factors are mean residual over mean
    check-qubit error per side.
    """
    from .noise import NoiseModel, sample_qerc_frame

    p = g.params
    v = int(scale * p.n)
    t_checks = int(scale * 2 * p.m)
    model = NoiseModel(kind="fixed_weight", v=v, t=t_checks)
    salt = int(scale * 10_000_000)
    bad = 0
    sums = {"x_after": 0, "z_after": 0, "x_checks": 0, "z_checks": 0}
    for t in range(trials):
        rng = rng_for(master_seed, t, salt)
        f = sample_qerc_frame(model, code, rng)
        out = propagate_frame(code, f)
        w = f.weights()
        mterm_x = max(w["xq"], w["xx"] + w["xz"])
        mterm_z = max(w["zq"], w["zx"] + w["zz"])
        if target == "parallel":
            rx = reduce_x_parallel(g, out.sigma_z)
            rz = reduce_z_parallel(g, out.sigma_x)
            xq_after = (f.xq ^ rx.aux_message).weight()
            xx_after = (f.xx ^ rx.aux_check).weight()
            x_after = (out.x_res ^ rx.estimate_primary).weight()
            z_after = (out.z_res ^ rz.estimate_primary).weight()
            ok = True
            if mterm_x:
                ok &= (xq_after < 32 / p.delta1 * mterm_x
                       and xx_after < 32 / p.delta2 * mterm_x)
            else:
                ok &= x_after == 0
            if mterm_z:
                ok &= z_after < 128 / p.delta1 * mterm_z
            else:
                ok &= z_after == 0
            bad += not ok
        else:
            rx = reduce_x_sequential(g, out.sigma_z)
            rz = reduce_z_sequential(g, out.sigma_x)
            x_after = (out.x_res ^ rx.estimate_primary).weight()
            z_after = (out.z_res ^ rz.estimate_primary).weight()
            env_x = p.delta1_prime * 8 * w["xz"] / p.delta2 + 8 * w["xz"] / p.delta1
            env_z = 8 * w["zx"] / p.delta1
            bad += not (x_after <= env_x and z_after <= env_z)
        sums["x_after"] += x_after
        sums["z_after"] += z_after
        sums["x_checks"] += w["xx"] + w["xz"]
        sums["z_checks"] += w["zx"] + w["zz"]
    factor_x = sums["x_after"] / sums["x_checks"] if sums["x_checks"] else float(sums["x_after"] > 0)
    factor_z = sums["z_after"] / sums["z_checks"] if sums["z_checks"] else float(sums["z_after"] > 0)
    return bad, factor_x, factor_z


def calibrate(params: ZGraphParams, target: str, budget: int, master_seed: int = 0,
              seed_graph: int = 1, grid_step: float | None = None,
              grid_max: float | None = None, backoff: int = 1) -> OperatingPoint:
    """Binary-search the largest zero-violation weight scale for one graph.

    The three fractions move together (alpha = beta = gamma = scale) on a
    grid of `grid_step` (default: half a check qubit).  Feasible means zero
    envelope violations and summary reduction factors below one over
    `budget` trials; the recorded point backs off `backoff` grid steps from
    the boundary so downstream runs sit inside the region, and its factors
    are re-measured there.  An empty feasible region yields zero fractions.
    """
    if target not in ("sequential", "parallel"):
        raise ParameterError(f"unknown calibration target {target!r}")
    if budget < 100:
        raise ParameterError("calibration budget must be >= 100 trials per point")
    g = sample_random_zgraph(params, seed_graph)
    code = build_code(g)
    if grid_step is None:
        grid_step = 1.0 / (2 * params.m)
    if grid_max is None:
        grid_max = min(0.25, 16.0 / params.m)
    steps = max(1, int(round(grid_max / grid_step)))

    def feasible(k: int) -> tuple[bool, float, float]:
        scale = k * grid_step
        bad, fx, fz = _violations_at(g, code, target, scale, budget, master_seed)
        return bad == 0 and fx < 1.0 and fz < 1.0, fx, fz

    lo, hi = 0, steps
    while lo < hi:
        mid = (lo + hi + 1) // 2
        ok, _, _ = feasible(mid)
        if ok:
            lo = mid
        else:
            hi = mid - 1
    lo = max(0, lo - backoff)
    scale = lo * grid_step
    _, fx, fz = feasible(lo)
    return OperatingPoint(
        target=target, alpha=scale, beta=scale, gamma=scale,
        eps_x=fx, eps_z=fz, trials=budget,
        graph=(params.n, params.m, params.delta1, params.delta2),
    )


def calibrate_cascade_rate(cc: CascadeCode, budget: int, master_seed: int = 0,
                           p_max: float = 0.02, resolution: int = 64) -> float:
    """Largest iid rate (on a geometric grid) with zero decode failures.

    Both pipelines must succeed on every budget trial for a rate to count as
    feasible; an infeasible grid start returns 0.0.
    """
    if budget < 20:
        raise ParameterError("cascade calibration budget must be >= 20 trials per point")
    msg_idx = np.arange(cc.message_range.start, cc.message_range.stop)

    def feasible(p: float) -> bool:
        noise = NoiseModel(kind="iid", p_x=p, p_z=p)
        for t in range(budget):
            rng = rng_for(master_seed, t, int(p * 1e9))
            x, z = sample_block_noise(noise, cc.block_length, msg_idx, rng)
            if not decode_cascade_sequential(cc, x, z).success:
                return False
            if not decode_cascade_parallel(cc, x, z).success:
                return False
        return True

    # geometric grid from p_max downward
    grid = [p_max * (0.5 ** (j / 4)) for j in range(resolution)]
    lo, hi = 0, len(grid) - 1
    best = None
    # grid[j] decreases with j: find the smallest j that is feasible
    while lo <= hi:
        mid = (lo + hi) // 2
        if feasible(grid[mid]):
            best = grid[mid]
            hi = mid - 1
        else:
            lo = mid + 1
    return best if best is not None else 0.0


def save_calibration(path: str, points: dict[str, dict]) -> None:
    cp = configparser.ConfigParser(interpolation=None)
    cp["meta"] = {"schema": CALIBRATION_SCHEMA}
    for section, values in points.items():
        cp[section] = {k: str(v) for k, v in values.items()}
    with open(path, "w", encoding="ascii") as fh:
        cp.write(fh)


def load_calibration(path: str) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="ascii") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ParseError(str(exc), path) from None
    if cp.get("meta", "schema", fallback="") != CALIBRATION_SCHEMA:
        raise ParseError(f"not a {CALIBRATION_SCHEMA} file", path, 1)
    return {s: dict(cp[s]) for s in cp.sections() if s != "meta"}
