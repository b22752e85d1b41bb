"""The public coin: seed management and counter-based pseudorandom streams.

Every random bit in the simulator is a pure function of a 64-bit seed and a
counter, so the table side and the query side agree bit-for-bit without any
shared mutable state, and any single bit of any sketch matrix is recomputable
in O(1) without generating its predecessors.

Generator identity (frozen; golden tests pin it):

    raw64(key, n)  =  splitmix64_finalize(key + (n + 1) * GOLDEN)  mod 2^64

with the standard SplitMix64 finalizer (constants 0xBF58476D1CE4E5B9,
0x94D049BB133111EB, shifts 30/27/31) and GOLDEN = 0x9E3779B97F4A7C15.
Keys are derived by absorbing integer fields one at a time:

    absorb(k, v) = splitmix64_finalize(k XOR v)

Bernoulli(p) thinning compares the top 53 bits of a raw word against
floor(p * 2^53); the resulting bias of at most 2^-53 is negligible against
every test tolerance in the suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Domain separation tags (arbitrary fixed constants, frozen).
TAG_MAIN = 0x6D61696E_00000001  # main sketch matrices
TAG_AUX = 0x6175785F_00000002  # auxiliary sketch matrices
TAG_COIN = 0x636F696E_00000003  # per-trial coin derivation
TAG_DATA = 0x64617461_00000004  # dataset generation streams

_ROLE_TAGS = {"main": TAG_MAIN, "aux": TAG_AUX}


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def absorb(key: int, value: int) -> int:
    """Fold one integer field into a stream key."""
    return splitmix64((key ^ (value & _MASK64)) & _MASK64)


def raw64(key: int, n: int) -> int:
    """n-th 64-bit word of the counter stream under `key`."""
    return splitmix64((key + (n + 1) * _GOLDEN) & _MASK64)


def raw64_block(key: int, start: int, count: int) -> np.ndarray:
    """Words start..start+count-1 of the stream, vectorized.

    Bit-identical to calling :func:`raw64` count times.
    """
    base = np.uint64((key + (start + 1) * _GOLDEN) & _MASK64)
    with np.errstate(over="ignore"):
        x = base + np.arange(count, dtype=np.uint64) * np.uint64(_GOLDEN)
        x ^= x >> np.uint64(30)
        x *= np.uint64(_MIX1)
        x ^= x >> np.uint64(27)
        x *= np.uint64(_MIX2)
        x ^= x >> np.uint64(31)
    return x


def bernoulli_block(key: int, start: int, count: int, p: float) -> np.ndarray:
    """Bernoulli(p) bits via 53-bit uniform threshold comparison, as uint8."""
    thr = np.uint64(min(max(int(p * (1 << 53)), 0), 1 << 53))
    return ((raw64_block(key, start, count) >> np.uint64(11)) < thr).astype(np.uint8)


def absorb_block(key: int, values: np.ndarray) -> np.ndarray:
    """Vectorized absorb of many values into one key; matches absorb()."""
    with np.errstate(over="ignore"):
        x = np.uint64(key) ^ values.astype(np.uint64)
        x ^= x >> np.uint64(30)
        x *= np.uint64(_MIX1)
        x ^= x >> np.uint64(27)
        x *= np.uint64(_MIX2)
        x ^= x >> np.uint64(31)
    return x


def bernoulli_matrix(keys: np.ndarray, count: int, p: float) -> np.ndarray:
    """One Bernoulli(p) row of `count` bits per stream key, as (len(keys), count) uint8.

    Row i is bit-identical to bernoulli_block(keys[i], 0, count, p).
    """
    thr = np.uint64(min(max(int(p * (1 << 53)), 0), 1 << 53))
    with np.errstate(over="ignore"):
        ctr = (np.arange(count, dtype=np.uint64) + np.uint64(1)) * np.uint64(_GOLDEN)
        x = keys.astype(np.uint64)[:, None] + ctr[None, :]
        x ^= x >> np.uint64(30)
        x *= np.uint64(_MIX1)
        x ^= x >> np.uint64(27)
        x *= np.uint64(_MIX2)
        x ^= x >> np.uint64(31)
    return ((x >> np.uint64(11)) < thr).astype(np.uint8)


@dataclass(frozen=True)
class PublicCoin:
    """Shared randomness: a single seed both the table and the querier hold."""

    seed: int

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in 64 bits")

    def row_key(self, role: str, scale: int, row: int) -> int:
        """Stream key for one sketch-matrix row."""
        k = absorb(self.seed, _ROLE_TAGS[role])
        k = absorb(k, scale)
        return absorb(k, row)

    def row_keys(self, role: str, scale: int, rows: int) -> np.ndarray:
        """Stream keys for rows 0..rows-1, vectorized; matches row_key()."""
        k = absorb(self.seed, _ROLE_TAGS[role])
        k = absorb(k, scale)
        return absorb_block(k, np.arange(rows, dtype=np.uint64))

    def stream_key(self, tag: int, *fields: int) -> int:
        """Stream key for an arbitrary tagged purpose (datasets, etc.)."""
        k = absorb(self.seed, tag)
        for f in fields:
            k = absorb(k, f)
        return k


def coin_for_trial(master_seed: int, trial: int, rep: int = 0) -> PublicCoin:
    """Independent coin for one (trial, repetition) pair."""
    k = absorb(master_seed & _MASK64, TAG_COIN)
    k = absorb(k, trial)
    return PublicCoin(absorb(k, rep))


class Stream:
    """Sequential consumer view over one counter stream.

    Used where drawing order does not need random access (dataset
    generation); the underlying words are still the pure raw64 function.
    """

    def __init__(self, key: int):
        self.key = key
        self._n = 0

    def word(self) -> int:
        w = raw64(self.key, self._n)
        self._n += 1
        return w

    def words(self, count: int) -> np.ndarray:
        block = raw64_block(self.key, self._n, count)
        self._n += count
        return block

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (_MASK64 + 1) - (_MASK64 + 1) % bound
        while True:
            w = self.word()
            if w < limit:
                return w % bound

    def distinct_indices(self, count: int, bound: int) -> list[int]:
        """count distinct uniform indices in [0, bound)."""
        if count > bound:
            raise ValueError("cannot draw more distinct indices than the range holds")
        chosen: set[int] = set()
        while len(chosen) < count:
            chosen.add(self.below(bound))
        return sorted(chosen)

    def shuffled(self, items: list) -> list:
        """Fisher-Yates shuffle of a copy of `items`."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out
