"""Exact continuous-time simulation of the weakly asymmetric exclusion process.

A particle at ``x`` jumps to an empty neighbour ``x + e_b`` at rate
``n^2 max(1/2, 1 + F_b^n(x)/n)`` and a particle at ``x + e_b`` jumps to an
empty ``x`` at rate ``n^2 max(1/2, 1 - F_b^n(x)/n)``.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .hydro import VectorFieldSpec, sample_dual_field
from .lattice import Torus

__all__ = [
    "RateTable",
    "Configuration",
    "Trajectory",
    "build_rates",
    "rates_from_dual",
    "sample_profile_measure",
    "simulate",
    "replica_seed",
]


def replica_seed(seed: int, replica: int = 0, stream: int = 0) -> int:
    """32-bit seed derived from ``(seed, replica, stream)``.

    Distinct keys give statistically independent streams, so replicas can be
    generated in any order or in parallel with identical results.
    """
    ss = np.random.SeedSequence([int(seed), int(replica), int(stream)])
    return int(ss.generate_state(1, np.uint32)[0])


@dataclass(frozen=True)
class RateTable:
    """Jump rates per oriented edge.

    Attributes
    ----------
    torus : Torus
    forward : ndarray, shape (N, d)
        ``forward[x, b]`` is the rate of a jump ``x -> x + e_b``.
    backward : ndarray, shape (N, d)
        ``backward[x, b]`` is the rate of a jump ``x + e_b -> x``.
    Fdual : ndarray, shape (N, d)
    """

    torus: Torus
    forward: np.ndarray
    backward: np.ndarray
    Fdual: np.ndarray

    @property
    def cap_active(self) -> bool:
        """True if the lower cap ``n^2/2`` binds on some edge."""
        n = self.torus.n
        return bool(np.any(np.abs(self.Fdual) > n / 2))

    @property
    def r_max(self) -> float:
        return float(max(self.forward.max(), self.backward.max()))


def rates_from_dual(torus: Torus, Fdual: np.ndarray) -> RateTable:
    """Rate table from dual-lattice field values."""
    n = torus.n
    Fdual = np.asarray(Fdual, dtype=float).reshape(torus.size, torus.d)
    fwd = n * n * np.maximum(0.5, 1.0 + Fdual / n)
    bwd = n * n * np.maximum(0.5, 1.0 - Fdual / n)
    return RateTable(torus, fwd, bwd, Fdual)


def build_rates(spec: VectorFieldSpec, torus: Torus) -> RateTable:
    """Evaluate the capped rate formula on every oriented edge."""
    rates = rates_from_dual(torus, sample_dual_field(spec, torus))
    if torus.n >= 2 * spec.sup_norm(torus.n):
        assert not rates.cap_active, "rate cap active although n >= 2 |F|"
    return rates


@dataclass
class Configuration:
    """Occupancy vector (one byte per site, values 0/1)."""

    torus: Torus
    occupancy: np.ndarray

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=np.uint8).reshape(self.torus.size)
        if occ.max(initial=0) > 1:
            raise ValueError("occupancies must be 0 or 1")
        self.occupancy = occ

    @property
    def count(self) -> int:
        return int(self.occupancy.sum())


def sample_profile_measure(u, torus: Torus, seed: int, replica: int = 0) -> Configuration:
    """Draw independent ``Bernoulli(u_x)`` occupancies."""
    u = np.asarray(u, dtype=float).reshape(torus.size)
    if u.min() < 0 or u.max() > 1:
        raise ValueError("profile must take values in [0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(replica), 1]))
    return Configuration(torus, (rng.random(torus.size) < u).astype(np.uint8))


@dataclass
class Trajectory:
    """A sampled path: initial state, jump events and snapshots.

    Attributes
    ----------
    initial : Configuration
    T : float
    seed : int
    snapshot_times : ndarray, shape (S,)
    snapshots : ndarray of uint8, shape (S, N)
    event_times, event_from, event_to : ndarray or None
        Jump events in time order; ``None`` when discarded.
    n_events : int
    """

    initial: Configuration
    T: float
    seed: int
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    event_times: np.ndarray | None = None
    event_from: np.ndarray | None = None
    event_to: np.ndarray | None = None
    n_events: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def torus(self) -> Torus:
        return self.initial.torus

    @property
    def has_events(self) -> bool:
        return self.event_times is not None

    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    def config_at(self, times) -> np.ndarray:
        """Occupancies at arbitrary times (requires events)."""
        if not self.has_events:
            raise ValueError("trajectory was recorded without events")
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return _kernels.replay_snapshots(
            self.initial.occupancy, self.event_times, self.event_from, self.event_to, times
        )

    # -- serialisation --------------------------------------------------
    def to_csv(self, path) -> None:
        """Rows ``t, site, occupancy`` for every snapshot."""
        S, N = self.snapshots.shape
        t = np.repeat(self.snapshot_times, N)
        site = np.tile(np.arange(N), S)
        np.savetxt(
            path,
            np.column_stack([t, site, self.snapshots.ravel()]),
            delimiter=",",
            header="t,site,occupancy",
            comments="",
            fmt=["%.12g", "%d", "%d"],
        )

    def to_binary(self) -> bytes:
        """Compact form: header ``(d, n, T, seed, S)``, then snapshot times and
        bit-packed snapshots (little-endian inside 64-bit words, site order)."""
        tor = self.torus
        buf = io.BytesIO()
        buf.write(b"WSEP")
        buf.write(struct.pack("<iidQi", tor.d, tor.n, float(self.T), int(self.seed) & (2**64 - 1),
                              len(self.snapshot_times)))
        buf.write(np.asarray(self.snapshot_times, dtype="<f8").tobytes())
        for row in self.snapshots:
            buf.write(pack_bits(row).tobytes())
        return buf.getvalue()

    @classmethod
    def from_binary(cls, data: bytes) -> "Trajectory":
        if data[:4] != b"WSEP":
            raise ValueError("not a trajectory snapshot file")
        off = 4
        d, n, T, seed, S = struct.unpack_from("<iidQi", data, off)
        off += struct.calcsize("<iidQi")
        times = np.frombuffer(data, dtype="<f8", count=S, offset=off).copy()
        off += 8 * S
        tor = Torus(d, n)
        words = -(-tor.size // 64)
        snaps = np.empty((S, tor.size), dtype=np.uint8)
        for s in range(S):
            w = np.frombuffer(data, dtype="<u8", count=words, offset=off)
            snaps[s] = unpack_bits(w, tor.size)
            off += 8 * words
        init = Configuration(tor, snaps[0] if S else np.zeros(tor.size, np.uint8))
        return cls(init, T, seed, times, snaps)


def pack_bits(occ: np.ndarray) -> np.ndarray:
    """Pack 0/1 occupancies into little-endian 64-bit words; site ``x`` is bit ``x % 64`` of word ``x // 64``."""
    occ = np.asarray(occ, dtype=np.uint8)
    words = -(-occ.size // 64)
    padded = np.zeros(words * 64, dtype=np.uint8)
    padded[: occ.size] = occ
    b = np.packbits(padded, bitorder="little")
    return b.view("<u8")


def unpack_bits(words: np.ndarray, size: int) -> np.ndarray:
    raw = np.asarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(np.uint8)


def simulate(
    eta0: Configuration,
    rates: RateTable,
    T: float,
    seed: int,
    snapshot_times=None,
    keep_events: bool = True,
    replica: int = 0,
) -> Trajectory:
    """Sample the process on ``[0, T]``.

    Parameters
    ----------
    eta0 : Configuration
    rates : RateTable
    T : float
    seed : int
        Global seed; combined with ``replica`` into an independent stream.
    snapshot_times : array_like, optional
        Sorted times in ``[0, T]``; defaults to ``[0, T]``.
    keep_events : bool
        Record every jump (needed for path integrals).
    replica : int

    Returns
    -------
    Trajectory
    """
    if snapshot_times is None:
        snapshot_times = [0.0, T]
    snap = np.asarray(snapshot_times, dtype=float)
    if snap.size and (np.any(np.diff(snap) < 0) or snap[0] < 0 or snap[-1] > T):
        raise ValueError("snapshot times must be sorted inside [0, T]")
    if eta0.torus != rates.torus:
        raise ValueError("configuration and rate table live on different tori")
    tor = rates.torus
    expected = eta0.count * 2 * tor.d * rates.r_max * T
    capacity = int(expected + 10 * np.sqrt(expected + 1) + 64) if keep_events else 1
    occ, snaps, ev_t, ev_f, ev_to, n_ev, n_prop = _kernels.simulate_kernel(
        eta0.occupancy, rates.forward, rates.backward, tor.plus, tor.minus,
        float(T), replica_seed(seed, replica, 0), snap, keep_events, capacity,
    )
    assert int(occ.sum()) == eta0.count, "particle number changed"
    return Trajectory(
        initial=Configuration(tor, eta0.occupancy.copy()),
        T=float(T),
        seed=int(seed),
        snapshot_times=snap,
        snapshots=snaps,
        event_times=ev_t if keep_events else None,
        event_from=ev_f if keep_events else None,
        event_to=ev_to if keep_events else None,
        n_events=int(n_ev),
        meta={"proposals": int(n_prop), "replica": int(replica)},
    )
