"""Reproducible open/closed configurations from counter-based randomness.

Every site (or bond) state is a pure function of (seed, replicate, index)
through a splitmix64-style hash, so sampling parallelizes over replicates
with bit-identical results at any worker count.  The same construction
yields per-index uniforms for monotone coupling across thresholds.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import BOND, SITE, SQUARE, TRIANGULAR, LatticeGraph, MeshSpec

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

DEFAULT_ENUM_CAP = 24
ENUM_CAP_ENV = "PERCO_ENUM_CAP"


def _mix64(z):
    """splitmix64 finalizer, elementwise on uint64 scalars or arrays."""
    with np.errstate(over="ignore"):  # wraparound is the point
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _stream_base(seed: int, replicate: int) -> np.uint64:
    s = np.uint64(seed & _MASK)
    r = np.uint64(replicate & _MASK)
    with np.errstate(over="ignore"):
        return _mix64(_mix64(s + _GOLDEN) + r * _MIX1)


def uniforms(seed: int, replicate: int, n: int) -> np.ndarray:
    """n deterministic uniform(0,1) doubles for (seed, replicate)."""
    base = _stream_base(seed, replicate)
    idx = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64(base + idx * _GOLDEN)
    return (z >> np.uint64(11)) * 2.0 ** -53


@dataclass(frozen=True)
class Configuration:
    """One open/closed assignment to every site (or bond) of a window."""

    graph: LatticeGraph
    states: np.ndarray  # bool, True = open, indexed by vertex (site) / edge (bond) id
    p: float | Fraction
    seed: int
    replicate: int

    def __post_init__(self):
        if len(self.states) != self.graph.n_states():
            raise ValueError(
                f"states length {len(self.states)} does not match the graph's "
                f"{self.graph.n_states()} {self.graph.mesh.mode} variables"
            )

    @property
    def mesh(self) -> MeshSpec:
        return self.graph.mesh

    def dump(self, path: str | os.PathLike) -> None:
        """Binary snapshot for failure reproduction."""
        g = self.graph
        m = g.mesh
        header = struct.pack(
            "<4sBBBIiiiiQQdQ",
            b"PCFG", 1,
            0 if m.mode == SITE else 1,
            0 if m.variant == SQUARE else 1,
            m.l, g.i_min, g.i_max, g.j_min, g.j_max,
            self.seed & _MASK, self.replicate & _MASK,
            float(self.p), len(self.states),
        )
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.packbits(self.states, bitorder="little").tobytes())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Configuration":
        with open(path, "rb") as fh:
            size = struct.calcsize("<4sBBBIiiiiQQdQ")
            head = fh.read(size)
            if len(head) < size or head[:4] != b"PCFG":
                raise ValueError("not a configuration snapshot")
            magic, ver, mode_b, var_b, l, i0, i1, j0, j1, seed, rep, p, n = (
                struct.unpack("<4sBBBIiiiiQQdQ", head)
            )
            if ver != 1:
                raise ValueError("not a configuration snapshot")
            packed = np.frombuffer(fh.read(), dtype=np.uint8)
        mesh = MeshSpec(l, SITE if mode_b == 0 else BOND,
                        SQUARE if var_b == 0 else TRIANGULAR)
        graph = LatticeGraph(mesh, i0, i1, j0, j1)
        states = np.unpackbits(packed, count=n, bitorder="little").astype(bool)
        return cls(graph, states, p, seed, rep)


@dataclass(frozen=True)
class UniformField:
    """Per-variable uniforms shared across thresholds (monotone coupling)."""

    graph: LatticeGraph
    seed: int
    replicate: int
    values: np.ndarray

    @classmethod
    def draw(cls, graph: LatticeGraph, seed: int, replicate: int) -> "UniformField":
        return cls(graph, seed, replicate,
                   uniforms(seed, replicate, graph.n_states()))


def threshold(field: UniformField, p) -> Configuration:
    """Open exactly the variables whose uniform falls below p."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0,1], got {p}")
    return Configuration(field.graph, field.values < float(p), p,
                         field.seed, field.replicate)


def sample(graph: LatticeGraph, p, seed: int, replicate: int) -> Configuration:
    """Each site/bond open independently with probability p."""
    return threshold(UniformField.draw(graph, seed, replicate), p)


def enum_cap() -> int:
    return int(os.environ.get(ENUM_CAP_ENV, DEFAULT_ENUM_CAP))


def enumerate_all(graph: LatticeGraph, region=None, p=Fraction(1, 2)):
    """All 2^n configurations of the free region, with exact weights.

    Variables outside the region are fixed closed.  Weights are
    p^{#open} (1-p)^{#closed} over the region; exact Fractions when p is a
    Fraction, so they sum to 1 exactly.
    """
    n_states = graph.n_states()
    if region is None:
        region = np.arange(n_states, dtype=np.int64)
    else:
        region = np.unique(np.asarray(region, dtype=np.int64))
        if region.size and (region[0] < 0 or region[-1] >= n_states):
            raise ValueError("region indices out of range")
    n = len(region)
    cap = enum_cap()
    if n > cap:
        raise ValueError(
            f"enumeration over {n} free variables exceeds the cap of {cap} "
            f"(override with {ENUM_CAP_ENV})"
        )
    if isinstance(p, Fraction):
        one = Fraction(1)
    else:
        one = 1.0
        p = float(p)
    base = np.zeros(n_states, dtype=bool)
    for code in range(1 << n):
        states = base.copy()
        n_open = 0
        for b in range(n):
            if code >> b & 1:
                states[region[b]] = True
                n_open += 1
        weight = p ** n_open * (one - p) ** (n - n_open)
        yield Configuration(graph, states, p, seed=0, replicate=code), weight
