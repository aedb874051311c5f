"""Pauli noise models and deterministic per-trial random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .gf2 import BitVec
from .qerc import PauliFrame, QercCode


def rng_for(master_seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for a named stream of a master seed.

    Streams are independent and reproducible regardless of evaluation order,
    so trials can run in any order or in parallel.
    """
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class NoiseModel:
    """iid per-qubit X/Z flips, or exact-weight random supports.

    iid draws X and Z errors independently per qubit (both at once is a Y).
    fixed_weight places exactly v errors on message qubits and t errors on
    check qubits, each uniformly X, Z, or Y.
    """

    kind: str
    p_x: float = 0.0
    p_z: float = 0.0
    v: int = 0
    t: int = 0

    def __post_init__(self):
        if self.kind not in ("iid", "fixed_weight"):
            raise ParameterError(f"unknown noise kind {self.kind!r}")
        if self.kind == "iid":
            if not (0.0 <= self.p_x <= 1.0 and 0.0 <= self.p_z <= 1.0):
                raise ParameterError("iid flip probabilities must lie in [0, 1]")
        else:
            if self.v < 0 or self.t < 0:
                raise ParameterError("fixed weights must be >= 0")


def _place_typed_errors(rng: np.random.Generator, idx: np.ndarray,
                        count: int, x_bits: np.ndarray, z_bits: np.ndarray) -> None:
    if count > idx.size:
        raise ParameterError(f"cannot place {count} errors on {idx.size} qubits")
    if count == 0:
        return
    hits = rng.choice(idx, size=count, replace=False)
    kinds = rng.integers(0, 3, size=count)  # 0: X, 1: Z, 2: Y
    x_bits[hits[kinds != 1]] ^= 1
    z_bits[hits[kinds != 0]] ^= 1


def sample_block_noise(model: NoiseModel, n_qubits: int, message_idx: np.ndarray,
                       rng: np.random.Generator) -> tuple[BitVec, BitVec]:
    """Draw (x_error, z_error) supports over a whole block."""
    x = np.zeros(n_qubits, np.uint8)
    z = np.zeros(n_qubits, np.uint8)
    if model.kind == "iid":
        x[:] = rng.random(n_qubits) < model.p_x
        z[:] = rng.random(n_qubits) < model.p_z
    else:
        mask = np.zeros(n_qubits, bool)
        mask[message_idx] = True
        check_idx = np.nonzero(~mask)[0]
        _place_typed_errors(rng, message_idx, model.v, x, z)
        _place_typed_errors(rng, check_idx, model.t, x, z)
    return BitVec.from_bits(x), BitVec.from_bits(z)


def sample_qerc_frame(model: NoiseModel, code: QercCode, rng: np.random.Generator) -> PauliFrame:
    """Draw a noise frame for one error-reduction code block."""
    mx, n, mz = code.mx, code.n, code.mz
    total = mx + n + mz
    msg_idx = np.arange(mx, mx + n)
    x, z = sample_block_noise(model, total, msg_idx, rng)
    xb, zb = x.to_bits(), z.to_bits()
    return PauliFrame(
        xx=BitVec.from_bits(xb[:mx]), zx=BitVec.from_bits(zb[:mx]),
        xq=BitVec.from_bits(xb[mx:mx + n]), zq=BitVec.from_bits(zb[mx:mx + n]),
        xz=BitVec.from_bits(xb[mx + n:]), zz=BitVec.from_bits(zb[mx + n:]),
    )
