"""Lossless Z-graphs: sampling, expansion verification, and file I/O.

A Z-graph is a four-part bipartite graph on vertex sets L1, L2, R1, R2 with
three edge blocks and no (L1, R1) edges:

* block A between L1 (n vertices, degree d1) and R2 (m vertices, degree d1'),
* block B between R1 (n, degree d1) and L2 (m, degree d1'),
* block D between L2 and R2, d2-regular on both sides.

Matrix conventions (used consistently by the code builder and decoders):
A[i, j] = 1 iff R2_i ~ L1_j, B[i, j] = 1 iff L2_i ~ R1_j, and
D[i, j] = 1 iff L2_i ~ R2_j.  Rows of A index the X checks, rows of B and D
index the Z checks of the derived CSS code.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations
from math import comb

import numpy as np

from .errors import ParameterError, ParseError, SamplingError, ValidationError
from .gf2 import BitMatrix

_REPAIR_PASSES = 1000


@dataclass(frozen=True)
class ZGraphParams:
    """Sizes, degrees, and verification knobs of a Z-graph ensemble.

    eta1/eta2 bound the admissible subset fractions and eps1/eps2 the
    tolerated expansion loss when certifying.  They are verification
    configuration, not sampled structure; defaults follow the random
    ensemble's loss (1 + 1/2)/degree.
    """

    n: int
    m: int
    delta1: int
    delta2: int
    eta1: float = 0.02
    eta2: float = 0.02
    eps1: float | None = None
    eps2: float | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < self.m:
            raise ParameterError(f"need n >= m >= 1, got n={self.n}, m={self.m}")
        if self.delta1 < 1 or self.delta2 < 1:
            raise ParameterError("degrees must be >= 1")
        if (self.n * self.delta1) % self.m:
            raise ParameterError(
                f"n*delta1 = {self.n * self.delta1} not divisible by m = {self.m}"
            )
        if self.delta1 > self.m:
            raise ParameterError("delta1 exceeds m: simple A/B blocks impossible")
        if self.delta1_prime > self.n:
            raise ParameterError("delta1' exceeds n: simple A/B blocks impossible")
        if self.delta2 > self.m:
            raise ParameterError("delta2 exceeds m: simple D block impossible")
        if not (0.0 <= self.eta1 <= 1.0 and 0.0 <= self.eta2 <= 1.0):
            raise ParameterError("eta fractions must lie in [0, 1]")
        if self.eps1 is None:
            object.__setattr__(self, "eps1", min(1.5 / self.delta1, 0.999))
        if self.eps2 is None:
            object.__setattr__(self, "eps2", min(1.5 / self.delta2, 0.999))
        if not (0.0 < self.eps1 < 1.0 and 0.0 < self.eps2 < 1.0):
            raise ParameterError("eps losses must lie in (0, 1)")

    @property
    def delta1_prime(self) -> int:
        return (self.n * self.delta1) // self.m

    def with_verification(self, eta1=None, eta2=None, eps1=None, eps2=None) -> "ZGraphParams":
        kw = {}
        if eta1 is not None:
            kw["eta1"] = eta1
        if eta2 is not None:
            kw["eta2"] = eta2
        if eps1 is not None:
            kw["eps1"] = eps1
        if eps2 is not None:
            kw["eps2"] = eps2
        return replace(self, **kw)


def _neighbor_table(values: np.ndarray, keys: np.ndarray, n_keys: int, deg: int) -> np.ndarray:
    """Fixed-width sorted neighbor lists: entry [k] = the deg values grouped under key k."""
    order = np.lexsort((values, keys))
    table = values[order].reshape(n_keys, deg).astype(np.int32)
    table.sort(axis=1)
    return table


class ZGraph:
    """An immutable Z-graph: three adjacency blocks plus neighbor tables."""

    __slots__ = (
        "params",
        "A",
        "B",
        "D",
        "a_rows",
        "a_cols",
        "b_rows",
        "b_cols",
        "d_rows",
        "d_cols",
    )

    def __init__(self, params: ZGraphParams, A: BitMatrix, B: BitMatrix, D: BitMatrix,
                 validate: bool = True):
        self.params = params
        self.A = A
        self.B = B
        self.D = D
        if validate:
            self._validate()
        self._build_tables()

    def _validate(self):
        p = self.params
        for name, mat, (r, c) in (
            ("A", self.A, (p.m, p.n)),
            ("B", self.B, (p.m, p.n)),
            ("D", self.D, (p.m, p.m)),
        ):
            if (mat.rows, mat.cols) != (r, c):
                raise ValidationError(f"block {name}: expected shape {(r, c)}")
        for name, mat, colw, roww in (
            ("A", self.A, p.delta1, p.delta1_prime),
            ("B", self.B, p.delta1, p.delta1_prime),
            ("D", self.D, p.delta2, p.delta2),
        ):
            cw = mat.col_weights()
            if not np.all(cw == colw):
                bad = int(np.nonzero(cw != colw)[0][0])
                raise ValidationError(
                    f"block {name}: column weight {int(cw[bad])} at column {bad}, expected {colw}"
                )
            rw = mat.row_weights()
            if not np.all(rw == roww):
                bad = int(np.nonzero(rw != roww)[0][0])
                raise ValidationError(
                    f"block {name}: row weight {int(rw[bad])} at row {bad}, expected {roww}"
                )

    def _build_tables(self):
        p = self.params
        ar, ac = np.nonzero(self.A.to_dense())
        self.a_rows = _neighbor_table(ac.astype(np.int64), ar, p.m, p.delta1_prime)
        self.a_cols = _neighbor_table(ar.astype(np.int64), ac, p.n, p.delta1)
        br, bc = np.nonzero(self.B.to_dense())
        self.b_rows = _neighbor_table(bc.astype(np.int64), br, p.m, p.delta1_prime)
        self.b_cols = _neighbor_table(br.astype(np.int64), bc, p.n, p.delta1)
        dr, dc = np.nonzero(self.D.to_dense())
        self.d_rows = _neighbor_table(dc.astype(np.int64), dr, p.m, p.delta2)
        self.d_cols = _neighbor_table(dr.astype(np.int64), dc, p.m, p.delta2)

    @classmethod
    def from_blocks(cls, A: BitMatrix, B: BitMatrix, D: BitMatrix,
                    params: ZGraphParams | None = None, validate: bool = True) -> "ZGraph":
        """Wrap explicit adjacency blocks; used by loaders and hand-built tests.

        With validate=False, degree invariants are not enforced and the
        neighbor tables require rectangular degree structure to exist, so
        callers must stick to products (A/B/D matrices) only.
        """
        if params is None:
            m, n = A.rows, A.cols
            d1 = int(A.col_weights()[0]) if n else 1
            d2 = int(D.col_weights()[0]) if m else 1
            params = ZGraphParams(n=n, m=m, delta1=max(d1, 1), delta2=max(d2, 1))
        g = cls.__new__(cls)
        g.params = params
        g.A, g.B, g.D = A, B, D
        if validate:
            g._validate()
            g._build_tables()
        else:
            g.a_rows = g.a_cols = g.b_rows = g.b_cols = g.d_rows = g.d_cols = None
        return g


def _sample_bipartite_block(rng: np.random.Generator, n_left: int, n_right: int,
                            deg_left: int, deg_right: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform half-edge matching, then endpoint swaps until the graph is simple.

    Whole-block rejection has vanishing acceptance at the degrees this
    package targets, so parallel edges are repaired by degree-preserving
    swaps that are only accepted when they do not create new parallels.
    Blocks denser than half are sampled as the complement of a sparse block.
    """
    assert n_left * deg_left == n_right * deg_right
    if deg_left > n_right // 2 and n_right > deg_left:
        cl, cr = _sample_bipartite_block(
            rng, n_left, n_right, n_right - deg_left, n_left - deg_right
        )
        dense = np.ones((n_left, n_right), dtype=bool)
        dense[cl, cr] = False
        lr = np.nonzero(dense)
        return lr[0].astype(np.int64), lr[1].astype(np.int64)
    if deg_left == n_right:
        # complete bipartite block: only one simple graph exists
        left = np.repeat(np.arange(n_left, dtype=np.int64), deg_left)
        right = np.tile(np.arange(n_right, dtype=np.int64), n_left)
        return left, right

    left = np.repeat(np.arange(n_left, dtype=np.int64), deg_left)
    right = np.repeat(np.arange(n_right, dtype=np.int64), deg_right)
    rng.shuffle(right)
    n_edges = left.shape[0]

    keys = set()
    dups = []
    for i in range(n_edges):
        key = int(left[i]) * n_right + int(right[i])
        if key in keys:
            dups.append(i)
        else:
            keys.add(key)
    dup_set = set(dups)
    budget = _REPAIR_PASSES * max(1, len(dups))
    tries = 0
    while dups:
        tries += 1
        if tries > budget:
            raise SamplingError(
                f"could not make block simple within {budget} swap attempts "
                f"({n_left}x{n_right}, degrees {deg_left}/{deg_right})"
            )
        i = dups[-1]
        t = int(rng.integers(n_edges))
        li, ri = int(left[i]), int(right[i])
        lt, rt = int(left[t]), int(right[t])
        if t == i or t in dup_set or ri == rt:
            continue
        new_a = li * n_right + rt
        new_b = lt * n_right + ri
        # every pair present anywhere has its first copy in keys, so these
        # membership tests cover duplicates too
        if new_a in keys or new_b in keys:
            continue
        keys.discard(lt * n_right + rt)
        keys.add(new_a)
        keys.add(new_b)
        right[i], right[t] = rt, ri
        dups.pop()
        dup_set.discard(i)
    return left, right


def sample_random_zgraph(params: ZGraphParams, seed: int) -> ZGraph:
    """Draw a Z-graph from the half-edge matching ensemble, deterministically in seed."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    p = params
    al, ar = _sample_bipartite_block(rng, p.n, p.m, p.delta1, p.delta1_prime)
    bl, br = _sample_bipartite_block(rng, p.n, p.m, p.delta1, p.delta1_prime)
    dl, dr = _sample_bipartite_block(rng, p.m, p.m, p.delta2, p.delta2)
    A = BitMatrix.from_indices(p.m, p.n, zip(ar.tolist(), al.tolist()))
    B = BitMatrix.from_indices(p.m, p.n, zip(br.tolist(), bl.tolist()))
    # D rows are L2 vertices, columns are R2 vertices
    D = BitMatrix.from_indices(p.m, p.m, zip(dl.tolist(), dr.tolist()))
    return ZGraph(params, A, B, D)


@dataclass
class ExpansionReport:
    """Outcome of an expansion check in one direction.

    worst_slack is the minimum over tested subset pairs of
    |N(S1 u S2)| - ((1-eps1)*d1*|S1| + (1-eps2)*d2*|S2|); negative means the
    pair witnesses a violation.
    """

    certified: str  # "exact" | "sampled" | "refuted"
    worst_slack: float
    tested_count: int
    counterexample: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def __post_init__(self):
        refuted = self.certified == "refuted"
        if refuted != (self.counterexample is not None) or refuted != (self.worst_slack < 0):
            raise ValidationError("inconsistent expansion report")


def _vertex_masks(table: np.ndarray) -> list[int]:
    return [int(np.bitwise_or.reduce([1 << int(c) for c in row])) if row.size else 0
            for row in table]


def _direction_masks(g: ZGraph, direction: int) -> tuple[list[int], list[int]]:
    """Neighborhood bitmasks for one expansion direction.

    direction 0: S1 in L1 (via A columns), S2 in L2 (via D rows), targets R2.
    direction 1: S1 in R1 (via B columns), S2 in R2 (via D columns), targets L2.
    """
    if direction == 0:
        return _vertex_masks(g.a_cols), _vertex_masks(g.d_rows)
    return _vertex_masks(g.b_cols), _vertex_masks(g.d_cols)


def _exact_budget(n: int, m: int, cap1: int, cap2: int) -> int:
    return sum(comb(n, s1) * comb(m, s2) for s1 in range(cap1 + 1) for s2 in range(cap2 + 1))


def _verify_direction_exact(g: ZGraph, direction: int) -> ExpansionReport:
    p = g.params
    cap1 = int(p.eta1 * p.n)
    cap2 = int(p.eta2 * p.m)
    masks1, masks2 = _direction_masks(g, direction)
    w1 = (1.0 - p.eps1) * p.delta1
    w2 = (1.0 - p.eps2) * p.delta2
    worst = float("inf")
    tested = 0
    for s1 in range(cap1 + 1):
        for s2 in range(cap2 + 1):
            for sub1 in combinations(range(p.n), s1):
                m1 = 0
                for v in sub1:
                    m1 |= masks1[v]
                for sub2 in combinations(range(p.m), s2):
                    mask = m1
                    for v in sub2:
                        mask |= masks2[v]
                    slack = mask.bit_count() - (w1 * s1 + w2 * s2)
                    tested += 1
                    if slack < worst:
                        worst = slack
                    if slack < 0:
                        return ExpansionReport("refuted", worst, tested, (sub1, sub2))
    return ExpansionReport("exact", worst, tested)


def verify_expansion_exact(g: ZGraph, budget: int = 10_000_000
                           ) -> tuple[ExpansionReport, ExpansionReport]:
    """Certify (or refute) both expansion directions by full subset enumeration.

    Refuses with ParameterError when the enumeration would exceed budget;
    use verify_expansion_sampled for such graphs.
    """
    p = g.params
    cap1 = int(p.eta1 * p.n)
    cap2 = int(p.eta2 * p.m)
    cost = _exact_budget(p.n, p.m, cap1, cap2)
    if cost > budget:
        raise ParameterError(
            f"exact verification needs {cost} subset pairs per direction, budget is {budget}"
        )
    return _verify_direction_exact(g, 0), _verify_direction_exact(g, 1)


def _slack_of(mask1_list, mask2_list, sub1, sub2, w1, w2) -> float:
    mask = 0
    for v in sub1:
        mask |= mask1_list[v]
    for v in sub2:
        mask |= mask2_list[v]
    return mask.bit_count() - (w1 * len(sub1) + w2 * len(sub2))


def _verify_direction_sampled(g: ZGraph, direction: int, trials: int,
                              rng: np.random.Generator, pair_budget: int) -> ExpansionReport:
    p = g.params
    cap1 = int(p.eta1 * p.n)
    cap2 = int(p.eta2 * p.m)
    masks1, masks2 = _direction_masks(g, direction)
    w1 = (1.0 - p.eps1) * p.delta1
    w2 = (1.0 - p.eps2) * p.delta2
    worst = float("inf")
    tested = 0
    witness = None

    def check(sub1: tuple[int, ...], sub2: tuple[int, ...]) -> bool:
        nonlocal worst, tested, witness
        slack = _slack_of(masks1, masks2, sub1, sub2, w1, w2)
        tested += 1
        if slack < worst:
            worst = slack
        if slack < 0 and witness is None:
            witness = (tuple(sorted(sub1)), tuple(sorted(sub2)))
            return True
        return False

    # Deterministic schedule: singletons, then pairs (exhaustive when they
    # fit the budget, sampled otherwise), then random subsets, then greedy
    # slack descent.
    check((), ())
    for v in range(p.n if cap1 >= 1 else 0):
        if check((v,), ()):
            return ExpansionReport("refuted", worst, tested, witness)
    for v in range(p.m if cap2 >= 1 else 0):
        if check((), (v,)):
            return ExpansionReport("refuted", worst, tested, witness)

    pair_families: list[tuple[int, str]] = []
    if cap1 >= 2:
        pair_families.append((comb(p.n, 2), "11"))
    if cap2 >= 2:
        pair_families.append((comb(p.m, 2), "22"))
    if cap1 >= 1 and cap2 >= 1:
        pair_families.append((p.n * p.m, "12"))
    for count, fam in pair_families:
        if count <= pair_budget:
            if fam == "11":
                it = (((a, b), ()) for a, b in combinations(range(p.n), 2))
            elif fam == "22":
                it = (((), (a, b)) for a, b in combinations(range(p.m), 2))
            else:
                it = (((a,), (b,)) for a in range(p.n) for b in range(p.m))
            for sub1, sub2 in it:
                if check(sub1, sub2):
                    return ExpansionReport("refuted", worst, tested, witness)
        else:
            for _ in range(pair_budget // 4):
                if fam == "11":
                    sub = tuple(int(x) for x in rng.choice(p.n, size=2, replace=False))
                    hit = check(sub, ())
                elif fam == "22":
                    sub = tuple(int(x) for x in rng.choice(p.m, size=2, replace=False))
                    hit = check((), sub)
                else:
                    hit = check((int(rng.integers(p.n)),), (int(rng.integers(p.m)),))
                if hit:
                    return ExpansionReport("refuted", worst, tested, witness)

    for _ in range(trials):
        s1 = int(rng.integers(0, cap1 + 1))
        s2 = int(rng.integers(0, cap2 + 1))
        if s1 == 0 and s2 == 0:
            continue
        sub1 = tuple(int(x) for x in rng.choice(p.n, size=s1, replace=False)) if s1 else ()
        sub2 = tuple(int(x) for x in rng.choice(p.m, size=s2, replace=False)) if s2 else ()
        if check(sub1, sub2):
            return ExpansionReport("refuted", worst, tested, witness)

    refuted = _greedy_descent(g, direction, masks1, masks2, w1, w2, cap1, cap2, rng, check)
    if refuted:
        return ExpansionReport("refuted", worst, tested, witness)
    return ExpansionReport("sampled", worst, tested)


def _greedy_descent(g, direction, masks1, masks2, w1, w2, cap1, cap2, rng, check,
                    restarts: int = 20) -> bool:
    """Greedy single-vertex swaps that shrink the joint neighborhood.

    A swap keeps subset sizes fixed, so reducing slack means reducing
    |N(S1 u S2)|.  Each step removes the member whose loss is smallest and
    inserts the outside vertex adding the fewest uncovered targets.
    """
    p = g.params
    adj1 = g.a_cols if direction == 0 else g.b_cols
    adj2 = g.d_rows if direction == 0 else g.d_cols
    if cap1 == 0 and cap2 == 0:
        return False
    for _ in range(restarts):
        sel1 = set(int(x) for x in rng.choice(p.n, size=cap1, replace=False)) if cap1 else set()
        sel2 = set(int(x) for x in rng.choice(p.m, size=cap2, replace=False)) if cap2 else set()
        cover = np.zeros(p.m, dtype=np.int32)
        for v in sel1:
            cover[adj1[v]] += 1
        for v in sel2:
            cover[adj2[v]] += 1
        for _step in range(4 * (cap1 + cap2) + 4):
            best = None
            for cls, sel, adj in ((0, sel1, adj1), (1, sel2, adj2)):
                if not sel:
                    continue
                members = np.fromiter(sorted(sel), dtype=np.int64)
                # loss of removing a member: targets it covers alone
                losses = (cover[adj[members]] == 1).sum(axis=1)
                v = int(members[np.argmin(losses)])
                loss = int(losses.min())
                cover[adj[v]] -= 1
                adds = (cover[adj] == 0).sum(axis=1)
                adds[list(sel)] = np.iinfo(adds.dtype).max
                u = int(np.argmin(adds))
                delta = int(adds[u]) - loss
                cover[adj[v]] += 1
                if adds[u] != np.iinfo(adds.dtype).max and (best is None or delta < best[0]):
                    best = (delta, cls, v, u)
            if best is None or best[0] >= 0:
                break
            _, cls, v, u = best
            sel, adj = (sel1, adj1) if cls == 0 else (sel2, adj2)
            sel.remove(v)
            cover[adj[v]] -= 1
            sel.add(u)
            cover[adj[u]] += 1
            if check(tuple(sorted(sel1)), tuple(sorted(sel2))):
                return True
    return False


def verify_expansion_sampled(g: ZGraph, trials: int, seed: int, pair_budget: int = 2_000_000
                             ) -> tuple[ExpansionReport, ExpansionReport]:
    """Randomized counterexample search; deterministic in (g, trials, seed)."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    r0 = _verify_direction_sampled(g, 0, trials, rng, pair_budget)
    r1 = _verify_direction_sampled(g, 1, trials, rng, pair_budget)
    return r0, r1


def save_zgraph(g: ZGraph, path: str) -> None:
    """Write the line-oriented zgraph v1 format (bit-exact round trip)."""
    p = g.params
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"zgraph v1 {p.n} {p.m} {p.delta1} {p.delta2}\n")
        for name, mat in (("A", g.A), ("B", g.B), ("D", g.D)):
            fh.write(f"{name}\n")
            rows, cols = np.nonzero(mat.to_dense())
            for r, c in zip(rows.tolist(), cols.tolist()):
                fh.write(f"{r} {c}\n")
            fh.write("end\n")


def load_zgraph(path: str) -> ZGraph:
    """Read a zgraph v1 file; validates all degree invariants."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    head = lines[0].split()
    if len(head) != 6 or head[0] != "zgraph" or head[1] != "v1":
        raise ParseError("expected header 'zgraph v1 n m delta1 delta2'", path, 1)
    try:
        n, m, d1, d2 = (int(x) for x in head[2:])
    except ValueError:
        raise ParseError("non-integer header field", path, 1) from None
    try:
        params = ZGraphParams(n=n, m=m, delta1=d1, delta2=d2)
    except ParameterError as exc:
        raise ValidationError(f"{path}: {exc}") from None

    sections: dict[str, list[tuple[int, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if line in ("A", "B", "D"):
            if current is not None:
                raise ParseError(f"section {current} not terminated", path, lineno)
            if line in sections:
                raise ParseError(f"duplicate section {line}", path, lineno)
            current = line
            sections[line] = []
            continue
        if line == "end":
            if current is None:
                raise ParseError("'end' outside a section", path, lineno)
            current = None
            continue
        if current is None:
            raise ParseError(f"unexpected content {line!r}", path, lineno)
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'row col'", path, lineno)
        try:
            r, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError("non-integer edge endpoint", path, lineno) from None
        sections[current].append((r, c))
    if current is not None:
        raise ParseError(f"section {current} not terminated", path, len(lines))
    for name in ("A", "B", "D"):
        if name not in sections:
            raise ParseError(f"missing section {name}", path, len(lines))

    shapes = {"A": (m, n), "B": (m, n), "D": (m, m)}
    mats = {}
    for name, entries in sections.items():
        rows, cols = shapes[name]
        for r, c in entries:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ValidationError(f"{path}: section {name}: edge ({r},{c}) out of range")
        mats[name] = BitMatrix.from_indices(rows, cols, entries)
    return ZGraph(params, mats["A"], mats["B"], mats["D"])
