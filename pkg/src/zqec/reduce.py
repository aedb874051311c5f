"""Classical error-reduction algorithms for Z-graph codes.

Four decoders share one mechanic: a bit is flipped when strictly more of its
checks are unsatisfied than satisfied (ties never flip).  The sequential
variants flip one bit at a time, scanning the degree-d2 class before the
degree-d1 class, lowest index first; every flip strictly lowers the residual
syndrome weight.  The parallel variants flip all majority bits against a
snapshot at once.

Wiring (see zgraph module docstring for matrix conventions):

* X reduction consumes sigma_z (checks = L2).  Estimated bits: X-check
  errors on R2 through D columns, message errors on R1 through B columns.
  The residual estimate is A^T.Xx + Xq.
* Z reduction consumes sigma_x (checks = R2) rewritten as
  Z_x + A.Z_res + D^T.Z_z, and estimates Z_res on L1 through A columns and
  Z-check errors on L2 through D rows; Z_res is returned directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import InternalError, ShapeError
from .gf2 import BitVec, pack_bits
from .zgraph import ZGraph


@dataclass
class ReductionResult:
    """Estimates plus run accounting for one reduction call.

    estimate_primary approximates the message residual (X_res or Z_res).
    aux_check holds the check-qubit-error estimate (Xx for the X algorithms,
    Zz for the Z algorithms); aux_message holds Xq for the X algorithms.
    rounds is the flip count for sequential runs, 1 or 2 for parallel runs.
    """

    estimate_primary: BitVec
    aux_check: BitVec
    aux_message: BitVec | None
    flips: int
    rounds: int
    converged: bool
    work: int


def _require_tables(g: ZGraph):
    if g.a_cols is None:
        raise ShapeError("graph was built without neighbor tables; reducers need full validation")


def _toggle_parity(table: np.ndarray, support: np.ndarray, out_len: int,
                   acc: np.ndarray | None = None) -> np.ndarray:
    """XOR-accumulate fixed-width neighbor lists of the support into a bit array."""
    counts = np.zeros(out_len, dtype=np.int64) if acc is None else acc
    if support.size:
        np.add.at(counts, table[support].ravel(), 1)
    return counts


def _x_residual(g: ZGraph, xx_bits: np.ndarray, xq_bits: np.ndarray) -> BitVec:
    counts = _toggle_parity(g.a_rows, np.nonzero(xx_bits)[0], g.params.n)
    bits = ((counts & 1) ^ xq_bits).astype(np.uint8)
    return BitVec(g.params.n, pack_bits(bits))


def _run_sequential(g: ZGraph, syndrome: BitVec, h_adj, l_adj, chk_h, chk_l):
    p = g.params
    if syndrome.n != p.m:
        raise ShapeError(f"syndrome length {syndrome.n}, expected {p.m}")
    residual = syndrome.to_bits()
    h_est = np.zeros(p.m, dtype=np.uint8)
    l_est = np.zeros(p.n, dtype=np.uint8)
    cap = 4 * (p.n + p.m) + 8
    flips, converged, work, overflowed = backend.seq_flip_reduce(
        residual, h_adj, l_adj, chk_h, chk_l, h_est, l_est, cap
    )
    if overflowed:
        raise InternalError("sequential reducer exceeded its flip cap; monotonicity broken")
    return h_est, l_est, int(flips), bool(converged), int(work)


def reduce_x_sequential(g: ZGraph, sigma_z: BitVec) -> ReductionResult:
    """Sequential reduction of X errors from the Z-check syndrome."""
    _require_tables(g)
    h_est, l_est, flips, converged, work = _run_sequential(
        g, sigma_z, g.d_cols, g.b_cols, g.d_rows, g.b_rows
    )
    return ReductionResult(
        estimate_primary=_x_residual(g, h_est, l_est),
        aux_check=BitVec(g.params.m, pack_bits(h_est)),
        aux_message=BitVec(g.params.n, pack_bits(l_est)),
        flips=flips,
        rounds=flips,
        converged=converged,
        work=work,
    )


def reduce_z_sequential(g: ZGraph, sigma_x: BitVec) -> ReductionResult:
    """Sequential reduction of Z errors from the X-check syndrome."""
    _require_tables(g)
    h_est, l_est, flips, converged, work = _run_sequential(
        g, sigma_x, g.d_rows, g.a_cols, g.d_cols, g.a_rows
    )
    return ReductionResult(
        estimate_primary=BitVec(g.params.n, pack_bits(l_est)),
        aux_check=BitVec(g.params.m, pack_bits(h_est)),
        aux_message=None,
        flips=flips,
        rounds=flips,
        converged=converged,
        work=work,
    )


def _majority_mask(adj: np.ndarray, syndrome_bits: np.ndarray, deg: int) -> np.ndarray:
    counts = syndrome_bits[adj].sum(axis=1, dtype=np.int64)
    return (2 * counts > deg).astype(np.uint8)


def reduce_x_parallel(g: ZGraph, sigma_z: BitVec) -> ReductionResult:
    """One simultaneous majority round for X errors against the raw syndrome."""
    _require_tables(g)
    p = g.params
    if sigma_z.n != p.m:
        raise ShapeError(f"syndrome length {sigma_z.n}, expected {p.m}")
    bits = sigma_z.to_bits()
    h_est = _majority_mask(g.d_cols, bits, p.delta2)
    l_est = _majority_mask(g.b_cols, bits, p.delta1)
    work = p.m * p.delta2 + p.n * p.delta1
    return ReductionResult(
        estimate_primary=_x_residual(g, h_est, l_est),
        aux_check=BitVec(p.m, pack_bits(h_est)),
        aux_message=BitVec(p.n, pack_bits(l_est)),
        flips=int(h_est.sum()) + int(l_est.sum()),
        rounds=1,
        converged=True,
        work=work,
    )


def reduce_z_parallel(g: ZGraph, sigma_x: BitVec) -> ReductionResult:
    """Two-round simultaneous reduction of Z errors.

    Round 1 estimates the Z-check error alone; the syndrome is then adjusted
    by C.Zz = (A.B^T + D^T).Zz and round 2 corrects the implied residual
    estimate B^T.Zz bit by bit.
    """
    _require_tables(g)
    p = g.params
    if sigma_x.n != p.m:
        raise ShapeError(f"syndrome length {sigma_x.n}, expected {p.m}")
    bits = sigma_x.to_bits()
    zz_est = _majority_mask(g.d_rows, bits, p.delta2)
    zz_supp = np.nonzero(zz_est)[0]
    # residual seed and syndrome adjustment from the round-1 estimate
    res_counts = _toggle_parity(g.b_rows, zz_supp, p.n)
    res_est = (res_counts & 1).astype(np.uint8)
    adj_counts = _toggle_parity(g.d_rows, zz_supp, p.m)
    adj_counts = _toggle_parity(g.a_cols, np.nonzero(res_est)[0], p.m, acc=adj_counts)
    hatted = (bits ^ (adj_counts & 1)).astype(np.uint8)
    round2 = _majority_mask(g.a_cols, hatted, p.delta1)
    res_est ^= round2
    work = (
        p.m * p.delta2
        + zz_supp.size * (p.delta1_prime + p.delta2)
        + int(res_est.sum()) * p.delta1
        + p.n * p.delta1
    )
    return ReductionResult(
        estimate_primary=BitVec(p.n, pack_bits(res_est)),
        aux_check=BitVec(p.m, pack_bits(zz_est)),
        aux_message=None,
        flips=int(zz_est.sum()) + int(round2.sum()),
        rounds=2,
        converged=True,
        work=work,
    )
