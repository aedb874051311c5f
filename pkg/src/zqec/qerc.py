"""CSS error-reduction codes: construction, CNOT scheduling, frame propagation.

A code is assembled from three sparse blocks as HX = (I | A | C) and
HZ = (D | B | I) with C = A.B^T xor D^T, which makes HX.HZ^T vanish for any
choice of A, B, D.  Qubits are laid out as [X-check | message | Z-check].
The same structural form covers graph-built codes (mx = mz = m) and the
standard form of small random CSS base codes (mx, mz independent).

Frame propagation is exact for this circuit class: CNOTs, Pauli noise,
X/Z-basis measurement.  ``propagate_frame`` evaluates the closed-form
syndrome/residual equations; ``conjugation_oracle`` pushes the frame through
the unencoder gate by gate and serves as the independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InternalError, ParseError, ShapeError, ValidationError
from .gf2 import BitMatrix, BitVec
from .zgraph import ZGraph


@dataclass(frozen=True)
class CnotLayer:
    """One depth step: qubit-disjoint CNOTs, all from the same block."""

    tag: str  # 'A', 'B', or 'D'
    controls: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        seen = np.concatenate([self.controls, self.targets])
        if np.unique(seen).size != seen.size:
            raise ValidationError(f"layer {self.tag}: a qubit appears twice")


class CnotCircuit:
    """An ordered list of CNOT layers acting on n_qubits."""

    __slots__ = ("layers", "n_qubits")

    def __init__(self, layers: list[CnotLayer], n_qubits: int):
        self.layers = layers
        self.n_qubits = n_qubits

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def gate_count(self) -> int:
        return sum(layer.controls.size for layer in self.layers)

    def reversed(self) -> "CnotCircuit":
        return CnotCircuit(list(reversed(self.layers)), self.n_qubits)


def _edge_coloring(pairs: np.ndarray, n_left: int, n_right: int) -> np.ndarray:
    """Proper bipartite edge coloring with exactly max-degree colors.

    Classic alternating-path argument: give each edge the least color free at
    its left endpoint; if that color is busy at the right endpoint, flip the
    two-color chain starting there to free it.
    """
    if pairs.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    deg_l = np.bincount(pairs[:, 0], minlength=n_left)
    deg_r = np.bincount(pairs[:, 1], minlength=n_right)
    ncolors = int(max(deg_l.max(), deg_r.max()))
    # at[vertex][color] = edge index or -1; lookup tables for chain flipping
    at_l = np.full((n_left, ncolors), -1, dtype=np.int64)
    at_r = np.full((n_right, ncolors), -1, dtype=np.int64)
    color = np.full(pairs.shape[0], -1, dtype=np.int64)

    for e in range(pairs.shape[0]):
        u, v = int(pairs[e, 0]), int(pairs[e, 1])
        cu = int(np.nonzero(at_l[u] < 0)[0][0])
        if at_r[v, cu] >= 0:
            # cu busy at v: flip the (cu, cv)-alternating chain from v.
            # It cannot reach u (left vertices are entered on cu edges and
            # u has none), so the flip frees cu at v without disturbing u.
            cv = int(np.nonzero(at_r[v] < 0)[0][0])
            chain = []
            vertex, on_right, cur = v, True, cu
            while True:
                e2 = int(at_r[vertex, cur]) if on_right else int(at_l[vertex, cur])
                if e2 < 0:
                    break
                chain.append(e2)
                vertex = int(pairs[e2, 0]) if on_right else int(pairs[e2, 1])
                on_right = not on_right
                cur = cv if cur == cu else cu
            for e2 in chain:
                u2, v2 = int(pairs[e2, 0]), int(pairs[e2, 1])
                for cc in (cu, cv):
                    if at_l[u2, cc] == e2:
                        at_l[u2, cc] = -1
                    if at_r[v2, cc] == e2:
                        at_r[v2, cc] = -1
            for e2 in chain:
                newc = cv if color[e2] == cu else cu
                color[e2] = newc
                u2, v2 = int(pairs[e2, 0]), int(pairs[e2, 1])
                at_l[u2, newc] = e2
                at_r[v2, newc] = e2
        color[e] = cu
        at_l[u, cu] = e
        at_r[v, cu] = e
    return color


def _block_layers(mat: BitMatrix, tag: str, carrier) -> list[CnotLayer]:
    """Layer the CNOTs of one adjacency block by edge color.

    carrier maps (row, col) index pairs to global (control, target) qubits.
    """
    dense = mat.to_dense()
    rows, cols = np.nonzero(dense)
    pairs = np.stack([rows, cols], axis=1).astype(np.int64)
    colors = _edge_coloring(pairs, mat.rows, mat.cols)
    layers = []
    for c in range(int(colors.max()) + 1 if colors.size else 0):
        sel = colors == c
        ctrl, tgt = carrier(pairs[sel, 0], pairs[sel, 1])
        order = np.argsort(ctrl)
        layers.append(CnotLayer(tag, ctrl[order], tgt[order]))
    return layers


class QercCode:
    """A CSS code in the three-block form, with its encoder cached lazily."""

    __slots__ = ("A", "B", "D", "C", "HX", "HZ", "mx", "n", "mz", "graph",
                 "_At", "_Bt", "_encoder")

    def __init__(self, A: BitMatrix, B: BitMatrix, D: BitMatrix, graph: ZGraph | None = None):
        if A.cols != B.cols:
            raise ShapeError("A and B must address the same message qubits")
        if D.rows != B.rows or D.cols != A.rows:
            raise ShapeError("D must map X-check qubits to Z checks")
        self.A, self.B, self.D = A, B, D
        self.mx, self.n, self.mz = A.rows, A.cols, B.rows
        self.graph = graph
        self.C = A.mat_mat(B.transpose()) ^ D.transpose()
        self.HX = BitMatrix.hstack([BitMatrix.identity(self.mx), A, self.C])
        self.HZ = BitMatrix.hstack([D, B, BitMatrix.identity(self.mz)])
        prod = self.HX.mat_mat(self.HZ.transpose())
        if not prod.is_zero():
            raise InternalError("construction violated HX.HZ^T = 0")
        self._At = A.transpose()
        self._Bt = B.transpose()
        self._encoder = None

    @property
    def n_qubits(self) -> int:
        return self.mx + self.n + self.mz

    @property
    def m(self) -> int:
        if self.mx != self.mz:
            raise ShapeError("code has asymmetric check counts; use mx/mz")
        return self.mx

    def message_slice(self) -> slice:
        return slice(self.mx, self.mx + self.n)


def build_code(g: ZGraph) -> QercCode:
    """Assemble the error-reduction code of a Z-graph."""
    return QercCode(g.A, g.B, g.D, graph=g)


def build_encoder(code: QercCode) -> CnotCircuit:
    """Constant-depth encoder: A-block, then B-block, then D-block CNOTs.

    Within a block all controls and all targets come from disjoint qubit
    groups, so any proper edge coloring gives valid layers; the coloring uses
    exactly max-degree colors per block.
    """
    if code._encoder is not None:
        return code._encoder
    mx, n = code.mx, code.n
    layers: list[CnotLayer] = []
    # A[i, j]: control = X-check qubit i, target = message qubit j
    layers += _block_layers(code.A, "A", lambda r, c: (r.copy(), mx + c))
    # B[i, j]: control = message qubit j, target = Z-check qubit i
    layers += _block_layers(code.B, "B", lambda r, c: (mx + c, mx + n + r))
    # D[i, j]: control = X-check qubit j, target = Z-check qubit i
    layers += _block_layers(code.D, "D", lambda r, c: (c.copy(), mx + n + r))
    circ = CnotCircuit(layers, code.n_qubits)
    code._encoder = circ
    return circ


def build_unencoder(code: QercCode) -> CnotCircuit:
    """The encoder's CNOT layers in reverse order (CNOTs are self-inverse)."""
    return build_encoder(code).reversed()


@dataclass
class PauliFrame:
    """X/Z error supports on the three qubit groups of one code block."""

    xx: BitVec
    zx: BitVec
    xq: BitVec
    zq: BitVec
    xz: BitVec
    zz: BitVec

    @classmethod
    def zero(cls, code: QercCode) -> "PauliFrame":
        return cls(
            BitVec.zeros(code.mx), BitVec.zeros(code.mx),
            BitVec.zeros(code.n), BitVec.zeros(code.n),
            BitVec.zeros(code.mz), BitVec.zeros(code.mz),
        )

    def check_shape(self, code: QercCode) -> None:
        if (self.xx.n, self.xq.n, self.xz.n) != (code.mx, code.n, code.mz):
            raise ShapeError("X supports do not match code layout")
        if (self.zx.n, self.zq.n, self.zz.n) != (code.mx, code.n, code.mz):
            raise ShapeError("Z supports do not match code layout")

    def weights(self) -> dict[str, int]:
        return {
            "xq": self.xq.weight(), "xx": self.xx.weight(), "xz": self.xz.weight(),
            "zq": self.zq.weight(), "zz": self.zz.weight(), "zx": self.zx.weight(),
        }


@dataclass
class MeasuredOutcome:
    """Syndromes and post-unencoding message residuals of one frame."""

    sigma_x: BitVec
    sigma_z: BitVec
    x_res: BitVec
    z_res: BitVec

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, MeasuredOutcome)
            and self.sigma_x == other.sigma_x
            and self.sigma_z == other.sigma_z
            and self.x_res == other.x_res
            and self.z_res == other.z_res
        )


def propagate_frame(code: QercCode, f: PauliFrame) -> MeasuredOutcome:
    """Closed-form syndromes and residuals of a noise frame.

    sigma_x = Z_x + A.Z_q + C.Z_z        (X-basis outcomes, detect Z errors)
    sigma_z = D.X_x + B.X_q + X_z        (Z-basis outcomes, detect X errors)
    X_res   = A^T.X_x + X_q              (X spread onto messages)
    Z_res   = Z_q + B^T.Z_z              (Z spread onto messages)
    """
    f.check_shape(code)
    sigma_x = f.zx ^ code.A.mat_vec(f.zq) ^ code.C.mat_vec(f.zz)
    sigma_z = code.D.mat_vec(f.xx) ^ code.B.mat_vec(f.xq) ^ f.xz
    x_res = code._At.mat_vec(f.xx) ^ f.xq
    z_res = f.zq ^ code._Bt.mat_vec(f.zz)
    return MeasuredOutcome(sigma_x, sigma_z, x_res, z_res)


def conjugation_oracle(code: QercCode, f: PauliFrame) -> MeasuredOutcome:
    """Push the frame through the unencoder gate by gate.

    Uses only the CNOT/Pauli commutation rules: X on the control copies to
    the target, Z on the target copies to the control.  Agreement with
    propagate_frame validates the closed-form equations from first
    principles.
    """
    f.check_shape(code)
    mx, n, mz = code.mx, code.n, code.mz
    x = np.concatenate([f.xx.to_bits(), f.xq.to_bits(), f.xz.to_bits()])
    z = np.concatenate([f.zx.to_bits(), f.zq.to_bits(), f.zz.to_bits()])
    for layer in build_unencoder(code).layers:
        c, t = layer.controls, layer.targets
        x[t] ^= x[c]
        z[c] ^= z[t]
    return MeasuredOutcome(
        sigma_x=BitVec.from_bits(z[:mx]),
        sigma_z=BitVec.from_bits(x[mx + n:]),
        x_res=BitVec.from_bits(x[mx:mx + n]),
        z_res=BitVec.from_bits(z[mx:mx + n]),
    )


def logical_qubit_count(code: QercCode) -> int:
    """Number of logical qubits: block length minus the two check ranks."""
    return code.n_qubits - code.HX.rank() - code.HZ.rank()


def save_qerc_text(code: QercCode, path: str) -> None:
    """Write the sparse-row export format: 'qerc v1 n m' plus HX/HZ rows."""
    if code.mx != code.mz:
        raise ShapeError("text export covers symmetric-check codes only")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"qerc v1 {code.n} {code.mx}\n")
        for name, mat in (("HX", code.HX), ("HZ", code.HZ)):
            fh.write(f"{name}\n")
            dense = mat.to_dense()
            for r in range(mat.rows):
                cols = " ".join(str(c) for c in np.nonzero(dense[r])[0])
                fh.write(f"{r}: {cols}\n")
            fh.write("end\n")


def load_qerc_text(path: str) -> QercCode:
    """Rebuild a code from the text export; validates layout and CSS form."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    head = lines[0].split()
    if len(head) != 4 or head[:2] != ["qerc", "v1"]:
        raise ParseError("expected header 'qerc v1 n m'", path, 1)
    try:
        n, m = int(head[2]), int(head[3])
    except ValueError:
        raise ParseError("non-integer header field", path, 1) from None
    width = n + 2 * m
    mats: dict[str, np.ndarray] = {}
    current = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if line in ("HX", "HZ"):
            current = line
            mats[line] = np.zeros((m, width), dtype=np.uint8)
            continue
        if line == "end":
            current = None
            continue
        if current is None:
            raise ParseError(f"unexpected content {line!r}", path, lineno)
        try:
            row_part, _, cols_part = line.partition(":")
            r = int(row_part)
            cols = [int(c) for c in cols_part.split()]
        except ValueError:
            raise ParseError("expected 'row: col col ...'", path, lineno) from None
        if not 0 <= r < m:
            raise ParseError(f"row {r} out of range", path, lineno)
        for c in cols:
            if not 0 <= c < width:
                raise ParseError(f"column {c} out of range", path, lineno)
            mats[current][r, c] = 1
    if set(mats) != {"HX", "HZ"}:
        raise ParseError("missing HX or HZ section", path, len(lines))
    hx, hz = mats["HX"], mats["HZ"]
    if not np.array_equal(hx[:, :m], np.eye(m, dtype=np.uint8)):
        raise ValidationError(f"{path}: HX lacks the identity block on X-check qubits")
    if not np.array_equal(hz[:, m + n:], np.eye(m, dtype=np.uint8)):
        raise ValidationError(f"{path}: HZ lacks the identity block on Z-check qubits")
    A = BitMatrix.from_dense(hx[:, m:m + n])
    B = BitMatrix.from_dense(hz[:, m:m + n])
    D = BitMatrix.from_dense(hz[:, :m])
    code = QercCode(A, B, D)
    if not np.array_equal(code.HX.to_dense(), hx):
        raise ValidationError(f"{path}: HX is not consistent with C = A.B^T + D^T")
    return code
