"""Concatenated code cascades built from error-reduction levels.

A depth-k cascade encodes n_k message qubits: level i wraps the previous
block with two error-reduction codes, one protecting the messages (its
checks become the next block down) and one protecting everything below the
messages with fresh checks.  The recursion bottoms out in a small random CSS
code decoded by exhaustive syndrome lookup.

Physical layout is one contiguous range per piece:

    [ M_k | M_(k-1) | ... | M_1 | base block | C_1 | C_2 | ... | C_k ]

which makes the sub-block of every nested code a contiguous slice.  The
decoders operate on global X/Z error bit arrays, exactly as the hardware
would: unencode (frame propagation), measure checks out, reduce, correct.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InternalError, ParameterError, ParseError, ValidationError
from .gf2 import BitMatrix, BitVec, pack_bits
from .qerc import MeasuredOutcome, PauliFrame, QercCode, build_code, build_encoder, propagate_frame
from .reduce import reduce_x_parallel, reduce_x_sequential, reduce_z_parallel, reduce_z_sequential
from .zgraph import ZGraph, ZGraphParams, load_zgraph, sample_random_zgraph, save_zgraph

MAX_BASE_BLOCK = 16


def cascade_rate(r1: Fraction, r2: Fraction) -> Fraction:
    """Overall rate 1 + 1/r2 - 1/(r1*r2) of the two level rates."""
    r1, r2 = Fraction(r1), Fraction(r2)
    if not (0 < r1 < 1 and 0 < r2 < 1):
        raise ParameterError("level rates must lie in (0, 1)")
    return 1 + Fraction(1, 1) / r2 - 1 / (r1 * r2)


@dataclass(frozen=True)
class GraphTemplate:
    """Target degrees for level graphs, clamped to each level's check count.

    d2_density additionally caps the check-side degree at that fraction of
    the check count; a single check-qubit error then lights up at most that
    fraction of the syndrome, which keeps the parallel majority votes of
    small inner levels out of the flooding regime.
    """

    delta1: int = 4
    delta2: int = 12
    d2_density: float = 1.0

    def clamp(self, n: int, m: int) -> tuple[int, int]:
        d1 = min(self.delta1, max(1, m // 2))
        d2 = min(self.delta2, m, max(1, int(m * self.d2_density)))
        return d1, d2


@dataclass(frozen=True)
class CascadeParams:
    """Rates, base size, depth, and per-level sampling seeds."""

    r1: Fraction
    r2: Fraction
    n0: int
    k: int
    seeds: tuple[int, ...] | None = None
    master_seed: int = 0

    def __post_init__(self):
        r1, r2 = Fraction(self.r1), Fraction(self.r2)
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)
        if self.k < 0:
            raise ParameterError("k must be >= 0")
        rate = cascade_rate(r1, r2)
        if rate <= 0:
            raise ParameterError(f"cascade rate {rate} <= 0 (requires r1 > 1/2)")
        if self.n0 < 1:
            raise ParameterError("n0 must be >= 1")
        if self.seeds is None:
            ss = np.random.SeedSequence(self.master_seed)
            object.__setattr__(
                self, "seeds", tuple(int(s) for s in ss.generate_state(self.k + 1))
            )
        elif len(self.seeds) != self.k + 1:
            raise ParameterError(f"need {self.k + 1} seeds, got {len(self.seeds)}")

    @property
    def rate(self) -> Fraction:
        return cascade_rate(self.r1, self.r2)

    @property
    def growth(self) -> Fraction:
        return self.r1 / (1 - self.r1)

    def message_count(self, i: int) -> int:
        ni = self.n0 * self.growth ** i
        if ni.denominator != 1:
            raise ParameterError(f"level {i}: message count {ni} is not an integer")
        return int(ni)


def _int_or_raise(x: Fraction, what: str) -> int:
    if Fraction(x).denominator != 1:
        raise ParameterError(f"{what} = {x} is not an integer")
    return int(x)


# ---------------------------------------------------------------------------
# base code


def _rref_dense(mat: np.ndarray, col_order: list[int]) -> tuple[np.ndarray, list[int]]:
    work = mat.copy()
    pivots: list[int] = []
    r = 0
    for c in col_order:
        if r == work.shape[0]:
            break
        rows = np.nonzero(work[r:, c])[0]
        if rows.size == 0:
            continue
        p = r + int(rows[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        others = np.nonzero(work[:, c])[0]
        others = others[others != r]
        if others.size:
            work[others] ^= work[r]
        pivots.append(c)
        r += 1
    return work, pivots


def _standard_form(hx: np.ndarray, hz: np.ndarray):
    """Permute qubits and row-reduce so HX = (I|A|C) and HZ = (D|B|I).

    Returns (A, B, D, perm) or None when no disjoint pivot sets exist (the
    caller resamples).  perm maps standard-form qubit positions back to the
    original columns.
    """
    n = hx.shape[1]
    hx_r, piv_x = _rref_dense(hx, list(range(n)))
    if len(piv_x) != hx.shape[0]:
        return None
    rest = [c for c in range(n) if c not in piv_x]
    # prefer rightmost pivots so a matrix already in standard form maps to
    # itself (bit-exact descriptor round trips)
    hz_r, piv_z = _rref_dense(hz, sorted(rest, reverse=True))
    if len(piv_z) != hz.shape[0]:
        return None
    middle = [c for c in rest if c not in piv_z]
    perm = sorted(piv_x) + sorted(middle) + sorted(piv_z)
    hx_p = hx_r[:, perm]
    hz_p = hz_r[:, perm]
    mx, mz = hx.shape[0], hz.shape[0]
    # re-reduce so the pivot blocks are exact identities after sorting
    hx_p, p2 = _rref_dense(hx_p, list(range(n)))
    hz_p, p3 = _rref_dense(hz_p, list(range(n - 1, -1, -1)))
    if p2 != list(range(mx)) or sorted(p3) != list(range(n - mz, n)):
        return None
    order = np.argsort(p3)
    hz_p = hz_p[order]
    k = n - mx - mz
    A = hx_p[:, mx:mx + k]
    B = hz_p[:, mx:mx + k]
    D = hz_p[:, :mx]
    return A, B, D, perm


class BaseCode:
    """Small random CSS code with an exhaustive syndrome-lookup decoder.

    The decoder tables map each Z syndrome to the message X-residual of its
    minimum-weight (then lowest-numbered) error pattern, and symmetrically
    for X syndromes; together they cover every (sigma_x, sigma_z) pair.
    delta0 is the largest t for which every error of weight <= t decodes
    exactly, found by full enumeration.
    """

    __slots__ = ("code", "n_phys", "k0", "delta0", "table_x", "table_z",
                 "_sz_cols", "_sx_cols")

    def __init__(self, code: QercCode):
        self.code = code
        self.n_phys = code.n_qubits
        self.k0 = code.n
        if self.n_phys > MAX_BASE_BLOCK:
            raise ParameterError(f"base block {self.n_phys} exceeds {MAX_BASE_BLOCK}")
        self._build_tables()

    def _build_tables(self):
        np_, mx, mz, k0 = self.n_phys, self.code.mx, self.code.mz, self.k0
        hz = self.code.HZ.to_dense()
        hx = self.code.HX.to_dense()
        a_dense = self.code.A.to_dense()
        b_dense = self.code.B.to_dense()

        def col_int(col_bits) -> int:
            return int(sum(1 << i for i in np.nonzero(col_bits)[0]))

        # X errors: syndrome HZ.e, residual A^T.e_x + e_msg
        sz_cols = [col_int(hz[:, j]) for j in range(np_)]
        rx_cols = [col_int(a_dense[j, :]) if j < mx else
                   (1 << (j - mx) if j < mx + k0 else 0) for j in range(np_)]
        # Z errors: syndrome HX.e, residual e_msg + B^T.e_z
        sx_cols = [col_int(hx[:, j]) for j in range(np_)]
        rz_cols = [0 if j < mx else
                   (1 << (j - mx) if j < mx + k0 else col_int(b_dense[j - mx - k0, :]))
                   for j in range(np_)]

        size = 1 << np_
        sz = np.zeros(size, np.int64)
        rx = np.zeros(size, np.int64)
        sx = np.zeros(size, np.int64)
        rz = np.zeros(size, np.int64)
        for j in range(np_):
            half = 1 << j
            sz[half:2 * half] = sz[:half] ^ sz_cols[j]
            rx[half:2 * half] = rx[:half] ^ rx_cols[j]
            sx[half:2 * half] = sx[:half] ^ sx_cols[j]
            rz[half:2 * half] = rz[:half] ^ rz_cols[j]
        weights = np.bitwise_count(np.arange(size, dtype=np.uint64)).astype(np.int64)
        order = np.lexsort((np.arange(size), weights))

        self.table_x = np.zeros(1 << mz, np.int64)
        u, first = np.unique(sz[order], return_index=True)
        self.table_x[u] = rx[order[first]]
        self.table_z = np.zeros(1 << mx, np.int64)
        u, first = np.unique(sx[order], return_index=True)
        self.table_z[u] = rz[order[first]]

        bad_x = self.table_x[sz] != rx
        bad_z = self.table_z[sx] != rz
        bad_any = bad_x | bad_z
        self.delta0 = int(weights[bad_any].min()) - 1 if bad_any.any() else np_
        self._sz_cols = sz_cols
        self._sx_cols = sx_cols

    def decode(self, sigma_x: BitVec, sigma_z: BitVec) -> tuple[BitVec, BitVec]:
        """Message corrections (x_corr, z_corr) for a syndrome pair."""
        sz_int = int.from_bytes(np.packbits(sigma_z.to_bits(), bitorder="little").tobytes(), "little")
        sx_int = int.from_bytes(np.packbits(sigma_x.to_bits(), bitorder="little").tobytes(), "little")
        x_corr = int(self.table_x[sz_int])
        z_corr = int(self.table_z[sx_int])
        bits_x = np.array([(x_corr >> i) & 1 for i in range(self.k0)], np.uint8)
        bits_z = np.array([(z_corr >> i) & 1 for i in range(self.k0)], np.uint8)
        return BitVec(self.k0, pack_bits(bits_x)), BitVec(self.k0, pack_bits(bits_z))

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k0, self.n_phys)


def build_base_from_checks(hx: np.ndarray, hz: np.ndarray) -> BaseCode:
    """Standard-form a CSS pair and attach the lookup decoder."""
    hx = np.asarray(hx, np.uint8) & 1
    hz = np.asarray(hz, np.uint8) & 1
    if ((hx.astype(int) @ hz.T.astype(int)) % 2).any():
        raise ValidationError("base checks do not commute: HX.HZ^T != 0")
    form = _standard_form(hx, hz)
    if form is None:
        raise ValidationError("base checks admit no disjoint pivot sets")
    A, B, D, _ = form
    code = QercCode(BitMatrix.from_dense(A), BitMatrix.from_dense(B), BitMatrix.from_dense(D))
    return BaseCode(code)


def build_q0(R: Fraction, n0: int, seed: int, attempts: int = 1000) -> BaseCode:
    """Sample a rate-R base code on n0 physical qubits.

    HX is drawn uniformly among full-rank matrices; HZ rows are uniform in
    ker HX until full rank.  Rank-deficient draws (including pivot-set
    clashes in the standard form) are rejected and resampled.
    """
    R = Fraction(R)
    if n0 > MAX_BASE_BLOCK:
        raise ParameterError(f"n0 = {n0} exceeds the exhaustive-table bound {MAX_BASE_BLOCK}")
    k0 = R * n0
    if k0.denominator != 1:
        raise ParameterError(f"R*n0 = {k0} is not an integer")
    k0 = int(k0)
    if not 1 <= k0 < n0:
        raise ParameterError(f"message count {k0} infeasible for block {n0}")
    checks = n0 - k0
    mx = (checks + 1) // 2
    mz = checks - mx
    if mz < 1:
        raise ParameterError("base code needs at least one check of each type")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    for _ in range(attempts):
        hx = rng.integers(0, 2, size=(mx, n0), dtype=np.uint8)
        if BitMatrix.from_dense(hx).rank() != mx:
            continue
        kern = BitMatrix.from_dense(hx).kernel_basis()
        kern_arr = np.array([b.to_bits() for b in kern], np.uint8)
        coeffs = rng.integers(0, 2, size=(mz, kern_arr.shape[0]), dtype=np.uint8)
        hz = (coeffs.astype(int) @ kern_arr.astype(int) % 2).astype(np.uint8)
        if BitMatrix.from_dense(hz).rank() != mz:
            continue
        try:
            return build_base_from_checks(hx, hz)
        except ValidationError:
            continue
    raise ParameterError(f"no valid base code found in {attempts} attempts")


# ---------------------------------------------------------------------------
# cascade assembly


@dataclass
class CascadeLevel:
    index: int
    r1_graph: ZGraph
    r2_graph: ZGraph
    r1_code: QercCode
    r2_code: QercCode
    # global index ranges / arrays
    msg: range             # M_i
    r1_xchecks: np.ndarray
    r1_zchecks: np.ndarray
    r2_msgs: range          # whole block of the level below
    r2_xchecks: range
    r2_zchecks: range


class CascadeCode:
    """The assembled cascade: base code, levels, and the global block map."""

    def __init__(self, params: CascadeParams, base: BaseCode, levels: list[CascadeLevel],
                 block_length: int, q0_range: range, c_ranges: list[range],
                 msg_ranges: list[range]):
        self.params = params
        self.base = base
        self.levels = levels
        self.block_length = block_length
        self.q0_range = q0_range
        self.c_ranges = c_ranges        # entry i-1 is C_i
        self.msg_ranges = msg_ranges    # entry i-1 is M_i
        self.message_count = params.message_count(params.k) if params.k else base.k0

    @property
    def message_range(self) -> range:
        if self.params.k == 0:
            start = self.q0_range.start + self.base.code.mx
            return range(start, start + self.base.k0)
        return self.msg_ranges[self.params.k - 1]

    def block_map(self) -> dict[str, range]:
        """Named global ranges; together they partition [0, block_length)."""
        out = {"q0": self.q0_range}
        for i, r in enumerate(self.msg_ranges, start=1):
            out[f"M{i}"] = r
        for i, r in enumerate(self.c_ranges, start=1):
            out[f"C{i}"] = r
        return out


def _level_seed(seed: int, which: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(which,)).generate_state(1)[0])


def build_cascade(params: CascadeParams, template: GraphTemplate | None = None) -> CascadeCode:
    """Sample all level graphs and the base code, and lay out the block."""
    template = template or GraphTemplate()
    R = params.rate
    k = params.k
    sizes = [params.message_count(i) for i in range(k + 1)]
    n0_phys = _int_or_raise(Fraction(sizes[0]) / R, "base block length")

    base = build_q0(R, n0_phys, params.seeds[0])
    if base.k0 != sizes[0]:
        raise InternalError("base message count mismatch")

    level_specs = []
    for i in range(1, k + 1):
        n_i = sizes[i]
        if sizes[i - 1] % 2:
            raise ParameterError(f"level {i}: check count {sizes[i - 1]} is odd")
        m1 = sizes[i - 1] // 2
        n2 = _int_or_raise(Fraction(sizes[i - 1]) / R, f"level {i}: inner block length")
        c2 = _int_or_raise(Fraction(n2) * (1 - params.r2) / params.r2, f"level {i}: check block")
        if c2 % 2:
            raise ParameterError(f"level {i}: check block {c2} is odd")
        m2 = c2 // 2
        d1a, d2a = template.clamp(n_i, m1)
        d1b, d2b = template.clamp(n2, m2)
        try:
            p1 = ZGraphParams(n=n_i, m=m1, delta1=d1a, delta2=d2a)
            p2 = ZGraphParams(n=n2, m=m2, delta1=d1b, delta2=d2b)
        except ParameterError as exc:
            raise ParameterError(f"level {i}: {exc}") from None
        level_specs.append((n_i, m1, n2, m2, p1, p2))

    # global layout: M_k ... M_1, base block, C_1 ... C_k
    pos = 0
    msg_ranges_desc = []
    for i in range(k, 0, -1):
        msg_ranges_desc.append(range(pos, pos + sizes[i]))
        pos += sizes[i]
    msg_ranges = list(reversed(msg_ranges_desc))
    q0_range = range(pos, pos + n0_phys)
    pos += n0_phys
    c_ranges = []
    for i in range(1, k + 1):
        c2 = 2 * level_specs[i - 1][3]
        c_ranges.append(range(pos, pos + c2))
        pos += c2
    block_length = pos
    expected = _int_or_raise(Fraction(sizes[k]) / R, "block length")
    if block_length != expected:
        raise InternalError(f"block length {block_length}, expected {expected}")

    levels = []
    for i in range(1, k + 1):
        n_i, m1, n2, m2, p1, p2 = level_specs[i - 1]
        g1 = sample_random_zgraph(p1, _level_seed(params.seeds[i], 1))
        g2 = sample_random_zgraph(p2, _level_seed(params.seeds[i], 2))
        code1 = build_code(g1)
        code2 = build_code(g2)
        if i == 1:
            a1 = q0_range.start + base.code.mx
            below = np.arange(a1, a1 + base.k0)
        else:
            below = np.arange(msg_ranges[i - 2].start, msg_ranges[i - 2].stop)
        if below.size != 2 * m1:
            raise InternalError(f"level {i}: check source size {below.size} != {2 * m1}")
        r2_msgs = range(msg_ranges[i - 2].start if i >= 2 else q0_range.start,
                        c_ranges[i - 2].stop if i >= 2 else q0_range.stop)
        if len(r2_msgs) != n2:
            raise InternalError(f"level {i}: inner block is {len(r2_msgs)}, expected {n2}")
        levels.append(CascadeLevel(
            index=i,
            r1_graph=g1, r2_graph=g2, r1_code=code1, r2_code=code2,
            msg=msg_ranges[i - 1],
            r1_xchecks=below[:m1],
            r1_zchecks=below[m1:],
            r2_msgs=r2_msgs,
            r2_xchecks=range(c_ranges[i - 1].start, c_ranges[i - 1].start + m2),
            r2_zchecks=range(c_ranges[i - 1].start + m2, c_ranges[i - 1].stop),
        ))
    return CascadeCode(params, base, levels, block_length, q0_range, c_ranges, msg_ranges)


def encode_cascade_stats(cc: CascadeCode) -> tuple[int, int]:
    """(gate_count, depth) of the sequential cascade encoder.

    Levels act on overlapping qubits so their encoders run one after the
    other: counts are sums of per-stage CNOT counts and layer depths.
    """
    gates = build_encoder(cc.base.code).gate_count
    depth = build_encoder(cc.base.code).depth
    for lvl in cc.levels:
        for code in (lvl.r1_code, lvl.r2_code):
            enc = build_encoder(code)
            gates += enc.gate_count
            depth += enc.depth
    return gates, depth


# ---------------------------------------------------------------------------
# decoding


@dataclass
class DecodeResult:
    success: bool
    x_correction: BitVec
    z_correction: BitVec
    classical_ops: int
    classical_depth: int
    flips: int
    nonconverged: int


def _gather(code: QercCode, x: np.ndarray, z: np.ndarray, xc, msg, zc) -> PauliFrame:
    def vec(arr, idx):
        return BitVec.from_bits(arr[idx])

    return PauliFrame(
        xx=vec(x, xc), zx=vec(z, xc),
        xq=vec(x, msg), zq=vec(z, msg),
        xz=vec(x, zc), zz=vec(z, zc),
    )


def _unencode_stage(code: QercCode, x: np.ndarray, z: np.ndarray, xc, msg, zc) -> MeasuredOutcome:
    """Propagate one sub-block's frame; messages become residuals, checks leave."""
    out = propagate_frame(code, _gather(code, x, z, xc, msg, zc))
    x[msg] = out.x_res.to_bits()
    z[msg] = out.z_res.to_bits()
    x[xc] = 0
    z[xc] = 0
    x[zc] = 0
    z[zc] = 0
    return out


def _idx(r) -> np.ndarray:
    return np.arange(r.start, r.stop) if isinstance(r, range) else r


def _apply(arr: np.ndarray, idx, corr: BitVec):
    arr[_idx(idx)] ^= corr.to_bits()


def decode_cascade_sequential(cc: CascadeCode, x_err: BitVec, z_err: BitVec) -> DecodeResult:
    """Proof-order pipeline: outer reduction, recursion, message reduction."""
    if x_err.n != cc.block_length or z_err.n != cc.block_length:
        raise ValidationError("noise length does not match the block")
    x = x_err.to_bits()
    z = z_err.to_bits()
    stats = {"ops": 0, "flips": 0, "nonconv": 0}

    def q0_stage():
        b = cc.base
        r = cc.q0_range
        xc = range(r.start, r.start + b.code.mx)
        msg = range(xc.stop, xc.stop + b.k0)
        zc = range(msg.stop, r.stop)
        out = _unencode_stage(b.code, x, z, _idx(xc), _idx(msg), _idx(zc))
        cx, cz = b.decode(out.sigma_x, out.sigma_z)
        _apply(x, msg, cx)
        _apply(z, msg, cz)
        stats["ops"] += 2

    def level_stage(i: int):
        if i == 0:
            q0_stage()
            return
        lvl = cc.levels[i - 1]
        out = _unencode_stage(lvl.r2_code, x, z,
                              _idx(lvl.r2_xchecks), _idx(lvl.r2_msgs), _idx(lvl.r2_zchecks))
        rx = reduce_x_sequential(lvl.r2_graph, out.sigma_z)
        rz = reduce_z_sequential(lvl.r2_graph, out.sigma_x)
        _apply(x, lvl.r2_msgs, rx.estimate_primary)
        _apply(z, lvl.r2_msgs, rz.estimate_primary)
        stats["ops"] += rx.work + rz.work
        stats["flips"] += rx.flips + rz.flips
        stats["nonconv"] += (not rx.converged) + (not rz.converged)

        level_stage(i - 1)

        out = _unencode_stage(lvl.r1_code, x, z,
                              lvl.r1_xchecks, _idx(lvl.msg), lvl.r1_zchecks)
        rx = reduce_x_sequential(lvl.r1_graph, out.sigma_z)
        rz = reduce_z_sequential(lvl.r1_graph, out.sigma_x)
        _apply(x, lvl.msg, rx.estimate_primary)
        _apply(z, lvl.msg, rz.estimate_primary)
        stats["ops"] += rx.work + rz.work
        stats["flips"] += rx.flips + rz.flips
        stats["nonconv"] += (not rx.converged) + (not rz.converged)

    level_stage(cc.params.k)
    msg = _idx(cc.message_range)
    residual_x = x[msg]
    residual_z = z[msg]
    success = not residual_x.any() and not residual_z.any()
    corr_x = BitVec.from_bits(x_err.to_bits()[msg] ^ residual_x)
    corr_z = BitVec.from_bits(z_err.to_bits()[msg] ^ residual_z)
    return DecodeResult(success, corr_x, corr_z, stats["ops"], 0,
                        stats["flips"], stats["nonconv"])


def _toggle(table: np.ndarray, support: np.ndarray, out: np.ndarray):
    if support.size:
        counts = np.zeros(out.shape[0], np.int64)
        np.add.at(counts, table[support].ravel(), 1)
        out ^= (counts & 1).astype(np.uint8)


def decode_cascade_parallel(cc: CascadeCode, x_err: BitVec, z_err: BitVec) -> DecodeResult:
    """Three-phase parallel pipeline with simultaneous final rounds.

    Phase A peels the outer codes top-down with parallel reducers and decodes
    the base block.  Phase B climbs the message chain, storing syndromes as
    each check layer is measured out and applying one reduction round per
    level.  Phase C reruns parallel rounds on the stored classical syndromes,
    feeding each level's refined estimate into the level above, for at most k
    rounds; only the final M_k correction is quantum.
    """
    if x_err.n != cc.block_length or z_err.n != cc.block_length:
        raise ValidationError("noise length does not match the block")
    k = cc.params.k
    x = x_err.to_bits()
    z = z_err.to_bits()
    ops = 0
    depth = 0
    flips = 0

    # phase A: peel the outer reduction codes, then the base block
    for i in range(k, 0, -1):
        lvl = cc.levels[i - 1]
        out = _unencode_stage(lvl.r2_code, x, z,
                              _idx(lvl.r2_xchecks), _idx(lvl.r2_msgs), _idx(lvl.r2_zchecks))
        rx = reduce_x_parallel(lvl.r2_graph, out.sigma_z)
        rz = reduce_z_parallel(lvl.r2_graph, out.sigma_x)
        _apply(x, lvl.r2_msgs, rx.estimate_primary)
        _apply(z, lvl.r2_msgs, rz.estimate_primary)
        ops += rx.work + rz.work
        depth += 3
        flips += rx.flips + rz.flips
    b = cc.base
    r = cc.q0_range
    xc = range(r.start, r.start + b.code.mx)
    msg0 = range(xc.stop, xc.stop + b.k0)
    zc = range(msg0.stop, r.stop)
    out = _unencode_stage(b.code, x, z, _idx(xc), _idx(msg0), _idx(zc))
    cx, cz = b.decode(out.sigma_x, out.sigma_z)
    _apply(x, msg0, cx)
    _apply(z, msg0, cz)
    ops += 2
    depth += 1

    # phase B: climb the message chain, storing syndromes
    syn_z: list[np.ndarray] = []
    syn_x: list[np.ndarray] = []
    for i in range(1, k + 1):
        lvl = cc.levels[i - 1]
        out = _unencode_stage(lvl.r1_code, x, z,
                              lvl.r1_xchecks, _idx(lvl.msg), lvl.r1_zchecks)
        rx = reduce_x_parallel(lvl.r1_graph, out.sigma_z)
        rz = reduce_z_parallel(lvl.r1_graph, out.sigma_x)
        _apply(x, lvl.msg, rx.estimate_primary)
        _apply(z, lvl.msg, rz.estimate_primary)
        # the stored syndrome predates the correction just applied
        g = lvl.r1_graph
        sz = out.sigma_z.to_bits()
        _toggle(g.b_cols, rx.estimate_primary.support(), sz)
        sx = out.sigma_x.to_bits()
        _toggle(g.a_cols, rz.estimate_primary.support(), sx)
        syn_z.append(sz)
        syn_x.append(sx)
        ops += rx.work + rz.work + 2 * lvl.r1_graph.params.m
        depth += 3
        flips += rx.flips + rz.flips

    # phase C: simultaneous classical rounds over the stored syndromes
    ex = [np.zeros(len(cc.levels[i].msg), np.uint8) for i in range(k)]
    ez = [np.zeros(len(cc.levels[i].msg), np.uint8) for i in range(k)]
    for _round in range(k):
        new_ex = []
        new_ez = []
        round_flips = 0
        for i in range(1, k + 1):
            lvl = cc.levels[i - 1]
            g = lvl.r1_graph
            m1 = g.params.m
            sz_hat = syn_z[i - 1].copy()
            sx_hat = syn_x[i - 1].copy()
            if i >= 2:
                below_x = ex[i - 2]
                below_z = ez[i - 2]
                _toggle(g.d_cols, np.nonzero(below_x[:m1])[0], sz_hat)
                sz_hat ^= below_x[m1:]
                sx_hat ^= below_z[:m1]
                _toggle(g.d_rows, np.nonzero(below_z[m1:])[0], sx_hat)
            _toggle(g.b_cols, np.nonzero(ex[i - 1])[0], sz_hat)
            _toggle(g.a_cols, np.nonzero(ez[i - 1])[0], sx_hat)
            rx = reduce_x_parallel(g, BitVec.from_bits(sz_hat))
            rz = reduce_z_parallel(g, BitVec.from_bits(sx_hat))
            new_ex.append(ex[i - 1] ^ rx.aux_message.to_bits())
            new_ez.append(ez[i - 1] ^ rz.estimate_primary.to_bits())
            ops += rx.work + rz.work + 4 * m1
            round_flips += rx.flips + rz.flips
        ex, ez = new_ex, new_ez
        depth += 3
        flips += round_flips
        if round_flips == 0:
            break
    if k:
        _apply(x, cc.message_range, BitVec.from_bits(ex[k - 1]))
        _apply(z, cc.message_range, BitVec.from_bits(ez[k - 1]))

    msg = _idx(cc.message_range)
    success = not x[msg].any() and not z[msg].any()
    corr_x = BitVec.from_bits(x_err.to_bits()[msg] ^ x[msg])
    corr_z = BitVec.from_bits(z_err.to_bits()[msg] ^ z[msg])
    return DecodeResult(success, corr_x, corr_z, ops, depth, flips, 0)


# ---------------------------------------------------------------------------
# descriptor files


def save_cascade(cc: CascadeCode, path: str) -> None:
    """Write the descriptor plus one zgraph file per level graph."""
    import os

    base_dir = os.path.dirname(os.path.abspath(path))
    os.makedirs(base_dir, exist_ok=True)
    refs = []
    for lvl in cc.levels:
        f1 = f"level{lvl.index}_r1.zg"
        f2 = f"level{lvl.index}_r2.zg"
        save_zgraph(lvl.r1_graph, os.path.join(base_dir, f1))
        save_zgraph(lvl.r2_graph, os.path.join(base_dir, f2))
        refs.append((f1, f2))
    p = cc.params
    with open(path, "w", encoding="ascii") as fh:
        fh.write("cascade v1\n")
        fh.write(f"r1 {p.r1}\n")
        fh.write(f"r2 {p.r2}\n")
        fh.write(f"n0 {p.n0}\n")
        fh.write(f"k {p.k}\n")
        for i, (f1, f2) in enumerate(refs, start=1):
            fh.write(f"level {i} {f1} {f2}\n")
        fh.write(f"q0 {cc.base.n_phys} {cc.base.code.mx} {cc.base.code.mz}\n")
        for name, mat in (("HX", cc.base.code.HX), ("HZ", cc.base.code.HZ)):
            fh.write(f"{name}\n")
            dense = mat.to_dense()
            for r in range(mat.rows):
                cols = " ".join(str(c) for c in np.nonzero(dense[r])[0])
                fh.write(f"{r}: {cols}\n")
            fh.write("end\n")


def load_cascade(path: str) -> CascadeCode:
    """Rebuild a cascade from a descriptor; graphs come from referenced files."""
    import os

    base_dir = os.path.dirname(os.path.abspath(path))
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "cascade v1":
        raise ParseError("expected header 'cascade v1'", path, 1)
    kv: dict[str, str] = {}
    level_refs: dict[int, tuple[str, str]] = {}
    q0_head = None
    mats: dict[str, list[list[int]]] = {}
    current = None
    lineno = 1
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if current is not None:
            if line == "end":
                current = None
                continue
            try:
                row_part, _, cols_part = line.partition(":")
                r = int(row_part)
                cols = [int(c) for c in cols_part.split()]
            except ValueError:
                raise ParseError("expected 'row: col col ...'", path, lineno) from None
            mats[current].append([r, *cols])
            continue
        parts = line.split()
        if parts[0] in ("r1", "r2", "n0", "k") and len(parts) == 2:
            kv[parts[0]] = parts[1]
        elif parts[0] == "level" and len(parts) == 4:
            level_refs[int(parts[1])] = (parts[2], parts[3])
        elif parts[0] == "q0" and len(parts) == 4:
            q0_head = tuple(int(v) for v in parts[1:])
        elif parts[0] in ("HX", "HZ"):
            current = parts[0]
            mats[current] = []
        else:
            raise ParseError(f"unexpected line {line!r}", path, lineno)
    for key in ("r1", "r2", "n0", "k"):
        if key not in kv:
            raise ParseError(f"missing field {key}", path, lineno)
    if q0_head is None or set(mats) != {"HX", "HZ"}:
        raise ParseError("missing base-code section", path, lineno)
    n_phys, mx, mz = q0_head
    width = n_phys

    def densify(rows: list[list[int]], nrows: int) -> np.ndarray:
        out = np.zeros((nrows, width), np.uint8)
        for entry in rows:
            r, cols = entry[0], entry[1:]
            if not 0 <= r < nrows:
                raise ValidationError(f"{path}: base row {r} out of range")
            for c in cols:
                if not 0 <= c < width:
                    raise ValidationError(f"{path}: base column {c} out of range")
                out[r, c] = 1
        return out

    params = CascadeParams(
        r1=Fraction(kv["r1"]), r2=Fraction(kv["r2"]), n0=int(kv["n0"]), k=int(kv["k"])
    )
    base = build_base_from_checks(densify(mats["HX"], mx), densify(mats["HZ"], mz))
    cc = _assemble_from_parts(params, base, level_refs, base_dir, path)
    return cc


def _assemble_from_parts(params: CascadeParams, base: BaseCode,
                         level_refs: dict[int, tuple[str, str]], base_dir: str,
                         path: str) -> CascadeCode:
    import os

    R = params.rate
    k = params.k
    sizes = [params.message_count(i) for i in range(k + 1)]
    n0_phys = _int_or_raise(Fraction(sizes[0]) / R, "base block length")
    if base.n_phys != n0_phys or base.k0 != sizes[0]:
        raise ValidationError(f"{path}: base code is {base.n_phys}/{base.k0}, "
                              f"expected {n0_phys}/{sizes[0]}")

    # mirror the layout arithmetic of build_cascade, but load graphs from disk
    pos = 0
    msg_ranges_desc = []
    for i in range(k, 0, -1):
        msg_ranges_desc.append(range(pos, pos + sizes[i]))
        pos += sizes[i]
    msg_ranges = list(reversed(msg_ranges_desc))
    q0_range = range(pos, pos + n0_phys)
    pos += n0_phys

    graphs = {}
    for i in range(1, k + 1):
        if i not in level_refs:
            raise ParseError(f"missing level {i} reference", path, None)
        f1, f2 = level_refs[i]
        graphs[i] = (
            load_zgraph(os.path.join(base_dir, f1)),
            load_zgraph(os.path.join(base_dir, f2)),
        )

    c_ranges = []
    for i in range(1, k + 1):
        m2 = graphs[i][1].params.m
        c_ranges.append(range(pos, pos + 2 * m2))
        pos += 2 * m2
    block_length = pos
    expected = _int_or_raise(Fraction(sizes[k]) / R, "block length")
    if block_length != expected:
        raise ValidationError(f"{path}: block length {block_length}, expected {expected}")

    levels = []
    for i in range(1, k + 1):
        g1, g2 = graphs[i]
        m1 = sizes[i - 1] // 2
        n2 = _int_or_raise(Fraction(sizes[i - 1]) / R, f"level {i} inner block")
        if g1.params.n != sizes[i] or g1.params.m != m1:
            raise ValidationError(f"{path}: level {i} message graph has wrong shape")
        if g2.params.n != n2:
            raise ValidationError(f"{path}: level {i} inner graph has wrong shape")
        if i == 1:
            a1 = q0_range.start + base.code.mx
            below = np.arange(a1, a1 + base.k0)
        else:
            below = np.arange(msg_ranges[i - 2].start, msg_ranges[i - 2].stop)
        r2_msgs = range(msg_ranges[i - 2].start if i >= 2 else q0_range.start,
                        c_ranges[i - 2].stop if i >= 2 else q0_range.stop)
        m2 = g2.params.m
        levels.append(CascadeLevel(
            index=i, r1_graph=g1, r2_graph=g2,
            r1_code=build_code(g1), r2_code=build_code(g2),
            msg=msg_ranges[i - 1],
            r1_xchecks=below[:m1], r1_zchecks=below[m1:],
            r2_msgs=r2_msgs,
            r2_xchecks=range(c_ranges[i - 1].start, c_ranges[i - 1].start + m2),
            r2_zchecks=range(c_ranges[i - 1].start + m2, c_ranges[i - 1].stop),
        ))
    return CascadeCode(params, base, levels, block_length, q0_range, c_ranges, msg_ranges)
