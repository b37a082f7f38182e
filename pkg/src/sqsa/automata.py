"""Semiautomata over transposition alphabets and the randomized shuffle family.

A shuffle semiautomaton on ``n`` states has an alphabet of ``k * C(n, 2)``
symbols: ``k`` labelled copies of the full transposition list, in
copy-major order (symbol ``j`` names ``all_transpositions(n)[j % C(n, 2)]``).
A per-symbol mask bit decides whether the symbol acts on states as that
transposition or as the identity.  A family draws each mask bit as an
independent Bernoulli(p) coin from a counter-based stream derived from
``(seed, member index)``, so regenerating with the same config is
bit-identical and members are independent regardless of build order.

Family file format (little-endian), version 1:

    magic    4 bytes   b"SQSA"
    version  u16
    n        u16       number of states
    k        u32       copies of the transposition alphabet
    m        u32       number of members
    p        f64       Bernoulli mask parameter
    seed     u64       family seed

followed by ``m`` masks, each ``k * C(n, 2)`` bits packed LSB-first and
padded with zero bits to whole bytes.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .perm import all_transpositions

__all__ = [
    "FamilyConfig",
    "FamilyFormatError",
    "Semiautomaton",
    "ShuffleFamily",
    "build_family",
    "deserialize_family",
    "iter_word_blocks",
    "mask_stream",
    "min_alphabet_copies",
    "min_word_length",
    "run_word",
    "run_words",
    "serialize_family",
]

FAMILY_MAGIC = b"SQSA"
FAMILY_VERSION = 1
_HEADER = struct.Struct("<4sHHIIdQ")


class FamilyFormatError(ValueError):
    """Malformed family bytes; nothing is constructed from a bad payload."""


@dataclass(frozen=True)
class FamilyConfig:
    """Parameters of a randomized shuffle family."""

    n_states: int
    n_copies: int
    n_members: int
    p: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_states < 2:
            raise ValueError(f"need at least 2 states, got {self.n_states}")
        if self.n_copies < 1:
            raise ValueError(f"need at least 1 alphabet copy, got {self.n_copies}")
        if self.n_members < 1:
            raise ValueError(f"need at least 1 member, got {self.n_members}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"mask parameter must be in (0, 1), got {self.p}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def n_transpositions(self) -> int:
        return self.n_states * (self.n_states - 1) // 2

    @property
    def alphabet_size(self) -> int:
        return self.n_copies * self.n_transpositions


@dataclass(frozen=True, eq=False)
class Semiautomaton:
    """Transposition-alphabet semiautomaton defined by a per-symbol mask bit."""

    n_states: int
    n_copies: int
    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        expected = self.n_copies * self.n_states * (self.n_states - 1) // 2
        if self.n_states < 2 or self.n_copies < 1:
            raise ValueError("need n_states >= 2 and n_copies >= 1")
        if mask.shape != (expected,):
            raise ValueError(f"mask must have {expected} bits, got shape {mask.shape}")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def alphabet_size(self) -> int:
        return self.mask.shape[0]

    @property
    def n_transpositions(self) -> int:
        return self.n_states * (self.n_states - 1) // 2

    @cached_property
    def images(self) -> np.ndarray:
        """One-line images of every symbol's state map, shape (alphabet, n_states)."""
        images = np.tile(np.arange(self.n_states, dtype=np.int64), (self.alphabet_size, 1))
        pairs = np.array([(t.a, t.b) for t in all_transpositions(self.n_states)])
        active = np.flatnonzero(self.mask)
        which = pairs[active % self.n_transpositions]
        images[active, which[:, 0]] = which[:, 1]
        images[active, which[:, 1]] = which[:, 0]
        images.setflags(write=False)
        return images

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Semiautomaton):
            return NotImplemented
        return (
            self.n_states == other.n_states
            and self.n_copies == other.n_copies
            and bool(np.array_equal(self.mask, other.mask))
        )

    def __hash__(self) -> int:
        return hash((self.n_states, self.n_copies, self.mask.tobytes()))


@dataclass(frozen=True)
class ShuffleFamily:
    """A generated family; all members share the config's state/alphabet shape."""

    config: FamilyConfig
    members: tuple[Semiautomaton, ...]

    def __post_init__(self) -> None:
        if len(self.members) != self.config.n_members:
            raise ValueError("member count does not match config")
        for member in self.members:
            if (member.n_states, member.n_copies) != (self.config.n_states, self.config.n_copies):
                raise ValueError("member shape does not match config")


def run_word(automaton: Semiautomaton, word: Sequence[int], start: int) -> int:
    """Final state after processing ``word`` from ``start`` (first symbol first)."""
    if not 0 <= start < automaton.n_states:
        raise ValueError(f"start state {start} out of range for {automaton.n_states} states")
    images = automaton.images
    state = start
    for symbol in word:
        if not 0 <= symbol < automaton.alphabet_size:
            raise ValueError(f"symbol {symbol} out of range for alphabet {automaton.alphabet_size}")
        state = int(images[symbol, state])
    return state


def run_words(automaton: Semiautomaton, words: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Vectorized :func:`run_word` over a batch: ``words`` is (B, T), ``starts`` is (B,)."""
    images = automaton.images
    states = np.asarray(starts, dtype=np.int64)
    for t in range(words.shape[1]):
        states = images[words[:, t], states]
    return states


def iter_word_blocks(
    n_symbols: int, word_length: int, block_size: int = 1 << 15
) -> Iterator[np.ndarray]:
    """All words of a given length, as (B, T) symbol-index blocks in counting order."""
    if word_length == 0:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    total = n_symbols**word_length
    for low in range(0, total, block_size):
        index = np.arange(low, min(low + block_size, total), dtype=np.int64)
        words = np.empty((index.shape[0], word_length), dtype=np.int64)
        for t in range(word_length - 1, -1, -1):
            words[:, t] = index % n_symbols
            index //= n_symbols
        yield words


def mask_stream(seed: int, member_index: int) -> np.random.Generator:
    """Counter-based per-member bit stream; independent across member indices."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(member_index,))
    return np.random.Generator(np.random.Philox(sequence))


def build_family(config: FamilyConfig) -> ShuffleFamily:
    """Draw all mask bits i.i.d. Bernoulli(p); same config, same bits."""
    n_bits = config.alphabet_size
    members = []
    for index in range(config.n_members):
        rng = mask_stream(config.seed, index)
        mask = rng.random(n_bits) < config.p
        members.append(Semiautomaton(config.n_states, config.n_copies, mask))
    return ShuffleFamily(config, tuple(members))


def _copies_prefactor(n: int) -> float:
    return 16 * (3 * n + 1) / (3 * (n - 1))


def _copies_log_terms(n: int) -> float:
    group_order = math.factorial(n)
    pair_count = group_order * (group_order - 1) // 2
    return n * math.log(n) + math.log(pair_count) + 2 * math.log(n - 1)


def min_alphabet_copies(n: int) -> int:
    """Smallest alphabet-copy count meeting the spectral-gap guarantee.

    Ceiling of ``16(3n+1)/(3(n-1)) * [n ln n + ln C(n!, 2) + 2 ln(n-1)]``;
    the guarantee behind it is stated for n >= 4.
    """
    if n < 4:
        raise ValueError(f"the copy threshold is defined for n >= 4, got {n}")
    return math.ceil(_copies_prefactor(n) * _copies_log_terms(n))


def min_word_length(n: int) -> int:
    """Smallest word length driving the agreement residual below 1/n!.

    Ceiling of ``2 n ln(n!)``.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return math.ceil(2 * n * math.log(math.factorial(n)))


def serialize_family(family: ShuffleFamily) -> bytes:
    """Canonical bytes for a family (format documented in the module docstring)."""
    config = family.config
    chunks = [
        _HEADER.pack(
            FAMILY_MAGIC,
            FAMILY_VERSION,
            config.n_states,
            config.n_copies,
            config.n_members,
            config.p,
            config.seed,
        )
    ]
    for member in family.members:
        chunks.append(np.packbits(member.mask, bitorder="little").tobytes())
    return b"".join(chunks)


def deserialize_family(data: bytes) -> ShuffleFamily:
    """Parse family bytes; any inconsistency fails without a partial result."""
    if len(data) < _HEADER.size:
        raise FamilyFormatError(f"payload too short for header: {len(data)} bytes")
    magic, version, n_states, n_copies, n_members, p, seed = _HEADER.unpack_from(data)
    if magic != FAMILY_MAGIC:
        raise FamilyFormatError(f"bad magic {magic!r}")
    if version != FAMILY_VERSION:
        raise FamilyFormatError(f"unsupported version {version}")
    try:
        config = FamilyConfig(n_states, n_copies, n_members, p, seed)
    except ValueError as exc:
        raise FamilyFormatError(f"invalid header: {exc}") from exc
    n_bits = config.alphabet_size
    mask_bytes = (n_bits + 7) // 8
    expected = _HEADER.size + n_members * mask_bytes
    if len(data) != expected:
        raise FamilyFormatError(f"expected {expected} bytes, got {len(data)}")
    members = []
    for index in range(n_members):
        low = _HEADER.size + index * mask_bytes
        raw = np.frombuffer(data[low : low + mask_bytes], dtype=np.uint8)
        bits = np.unpackbits(raw, bitorder="little")
        if bits[n_bits:].any():
            raise FamilyFormatError(f"member {index} has nonzero padding bits")
        members.append(Semiautomaton(n_states, n_copies, bits[:n_bits].astype(bool)))
    return ShuffleFamily(config, tuple(members))
