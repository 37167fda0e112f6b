"""Truncated-Levy variates by rejection and i.i.d. random-walk ensembles.

RNG splitting rule: walk ``m`` of an ensemble generated with seed ``s`` draws
from ``numpy.random.PCG64(numpy.random.SeedSequence(s, spawn_key=(m,)))``,
i.e. the m-th child of ``SeedSequence(s).spawn(...)``. Any single walk can
therefore be regenerated from (seed, walk index) alone, and the ensemble is
identical whatever the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .cumulants import StableParams
from .deformation import DeformationSpec, eval_g

MAX_CONSECUTIVE_REJECTIONS = 1_000_000
DEFAULT_MEMORY_BUDGET = 4 * 2**30

MAGIC = b"TLFWALK1"
_KIND_CODE = {"mantegna_stanley": 0.0, "exponential": 1.0, "tabulated": 2.0}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


class SamplingError(RuntimeError):
    pass


def walk_rng(seed: int, m: int) -> np.random.Generator:
    """Generator for walk ``m`` under the documented splitting rule."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(m,))))


def sample_stable(stable: StableParams, rng: np.random.Generator, size=None):
    """Symmetric alpha-stable draws with characteristic function exp(-(gamma|q|)**alpha).

    Chambers-Mallows-Stuck transform of a uniform angle and a unit
    exponential; alpha = 1 reduces to the Cauchy inverse CDF gamma tan(pi(U - 1/2)).
    """
    a, g = stable.alpha, stable.gamma
    v = math.pi * (rng.random(size) - 0.5)
    if a == 1.0:
        return g * np.tan(v)
    w = rng.standard_exponential(size)
    return g * (np.sin(a * v) / np.cos(v) ** (1.0 / a)
                * (np.cos((1.0 - a) * v) / w) ** ((1.0 - a) / a))


def rejection_sample(propose: Callable[[np.random.Generator, int], np.ndarray],
                     accept_prob: Callable[[np.ndarray], np.ndarray],
                     rng: np.random.Generator, size: int) -> tuple[np.ndarray, int]:
    """Draw ``size`` values from propose() thinned by accept_prob(), in order.

    Returns the accepted values and the number of proposals consumed. Values
    are exactly distributed as proposal density times accept_prob, normalized.
    """
    out = np.empty(size)
    filled = attempts = dry = 0
    batch = size + 8
    while filled < size:
        x = propose(rng, batch)
        keep = rng.random(batch) < accept_prob(x)
        idx = np.flatnonzero(keep)
        need = size - filled
        if idx.size >= need:
            used = idx[need - 1] + 1
            out[filled:] = x[idx[:need]]
            attempts += int(used)
            filled = size
            break
        out[filled:filled + idx.size] = x[idx]
        filled += idx.size
        attempts += batch
        dry = dry + batch if idx.size == 0 else batch - 1 - int(idx[-1])
        if dry > MAX_CONSECUTIVE_REJECTIONS:
            raise SamplingError(f"more than {MAX_CONSECUTIVE_REJECTIONS} consecutive "
                                "rejections; the deformation is misconfigured")
        rate = max(filled, 1) / attempts
        batch = int(min(max((size - filled) / rate * 1.1 + 8, 8), 1 << 22))
    return out, attempts


def sample_truncated(spec: DeformationSpec, stable: StableParams, rng: np.random.Generator,
                     size: int = 1) -> tuple[np.ndarray, int]:
    """Draws from C P_L(x) g(x/l): stable proposals accepted with probability g(x/l)."""
    return rejection_sample(lambda r, k: sample_stable(stable, r, k),
                            lambda x: eval_g(spec, x / spec.l), rng, size)


@dataclass
class WalkEnsemble:
    """M independent N-step walks; ``increments[m, i]`` is x_{i+1} of walk m.

    Walk values X(n) = x_1 + ... + x_n are materialized lazily; X(0) = 0.
    """

    increments: np.ndarray
    spec: DeformationSpec
    stable: StableParams
    seed: int
    acceptance_rate: float
    _values: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def M(self) -> int:
        return self.increments.shape[0]

    @property
    def N(self) -> int:
        return self.increments.shape[1]

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = np.cumsum(self.increments, axis=1)
        return self._values

    def at(self, n: int) -> np.ndarray:
        """Column of X(n) over realizations."""
        if not 0 <= n <= self.N:
            raise IndexError(f"time {n} outside 0..{self.N}")
        if n == 0:
            return np.zeros(self.M)
        return self.values[:, n - 1]

    def params_vector(self) -> list[float]:
        s = self.spec
        return [self.stable.alpha, self.stable.gamma, _KIND_CODE[s.kind], s.beta, s.l,
                self.acceptance_rate]

    # -- export ------------------------------------------------------------

    def to_binary(self, path: str | Path, config_hash: str = "", version: str = "") -> None:
        """Write the documented little-endian binary layout (see README)."""
        params = self.params_vector()
        table = [] if self.spec.table is None else [v for row in self.spec.table for v in row]
        digest = bytes.fromhex(config_hash) if config_hash else b""
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<QQQ", self.M, self.N, self.seed))
            fh.write(struct.pack("<32s16s", digest.ljust(32, b"\0"),
                                 version.encode().ljust(16, b"\0")[:16]))
            fh.write(struct.pack("<Q", len(params)))
            fh.write(struct.pack(f"<{len(params)}d", *params))
            fh.write(struct.pack("<Q", len(table) // 2))
            fh.write(struct.pack(f"<{len(table)}d", *table))
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path: str | Path) -> "WalkEnsemble":
        with open(path, "rb") as fh:
            buf = fh.read()
        if buf[:8] != MAGIC:
            raise ValueError(f"{path}: not a walk ensemble file")
        off = 8
        M, N, seed = struct.unpack_from("<QQQ", buf, off)
        off += 24 + 48
        (npar,) = struct.unpack_from("<Q", buf, off)
        off += 8
        params = struct.unpack_from(f"<{npar}d", buf, off)
        off += 8 * npar
        (ntab,) = struct.unpack_from("<Q", buf, off)
        off += 8
        flat = struct.unpack_from(f"<{2 * ntab}d", buf, off)
        off += 16 * ntab
        values = np.frombuffer(buf, dtype="<f8", count=M * N, offset=off).reshape(M, N)
        alpha, gamma, code, beta, l, acc = params[:6]
        table = tuple(zip(flat[::2], flat[1::2])) if ntab else None
        spec = DeformationSpec(_CODE_KIND[code], beta, l, table)
        inc = np.diff(values, axis=1, prepend=0.0)
        ens = cls(inc, spec, StableParams(alpha, gamma), int(seed), acc)
        ens._values = values.copy()
        return ens

    def to_csv(self, path: str | Path, header_lines: tuple[str, ...] = ()) -> None:
        """Long-format CSV (walk, n, X) including X(0) = 0; meant for small ensembles."""
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["walk", "n", "X"])
            for m in range(self.M):
                w.writerow([m, 0, 0.0])
                for n in range(1, self.N + 1):
                    w.writerow([m, n, repr(float(self.values[m, n - 1]))])

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.increments).tobytes()).hexdigest()


def _walk_block(args) -> tuple[np.ndarray, int]:
    spec, stable, seed, start, stop, N = args
    out = np.empty((stop - start, N))
    attempts = 0
    for i, m in enumerate(range(start, stop)):
        out[i], used = sample_truncated(spec, stable, walk_rng(seed, m), N)
        attempts += used
    return out, attempts


def estimate_bytes(M: int, N: int) -> int:
    # increments plus materialized walk values
    return 2 * 8 * M * N


def generate_walks(spec: DeformationSpec, stable: StableParams, M: int, N: int, seed: int,
                   threads: int = 1, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> WalkEnsemble:
    """Simulate M walks of N i.i.d. truncated-Levy steps, reproducibly from ``seed``."""
    if M < 1 or N < 1:
        raise ValueError("M and N must be >= 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    need = estimate_bytes(M, N)
    if need > memory_budget:
        raise MemoryError(f"ensemble needs ~{need / 2**20:.0f} MiB, budget is "
                          f"{memory_budget / 2**20:.0f} MiB")
    threads = max(1, min(threads, M))
    bounds = np.linspace(0, M, threads * 4 + 1 if threads > 1 else 2).astype(int)
    jobs = [(spec, stable, seed, int(a), int(b), N) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if threads == 1:
        parts = [_walk_block(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_walk_block, jobs))
    inc = np.concatenate([p[0] for p in parts], axis=0)
    attempts = sum(p[1] for p in parts)
    return WalkEnsemble(inc, spec, stable, int(seed), M * N / attempts)
