"""Classic Bloom filter backend.

A filter is a flat bit array probed at ``n_hashes`` positions derived by
double hashing: one keyed 128-bit BLAKE2b digest per element is split into
two 64-bit halves ``h1`` and ``h2`` (``h2`` forced odd so the stride never
degenerates), and probe ``i`` lands at ``(h1 + i * h2) mod n_bits``.  The
key for the digest is the filter's seed as 8 little-endian bytes, so two
filters with different seeds hash the same element independently.

Byte layout of a serialized filter (all integers little-endian)::

    magic   4 bytes  b"PBLM"
    version u16      currently 1
    m       u64      number of bits
    k       u32      number of hash probes
    seed    u64      hash seed
    count   u64      elements inserted so far
    bits    ceil(m / 8) bytes, bit i stored at byte i >> 3, mask 1 << (i & 7)
"""

from __future__ import annotations

import hashlib
import math
import struct

from .errors import ValidationError

LOG2_E = math.log2(math.e)
_LN2 = math.log(2.0)
_HEADER = struct.Struct("<4sHQIQQ")
_MAGIC = b"PBLM"
_VERSION = 1
_MASK64 = (1 << 64) - 1


def bits_for(n_keys: int, fpr: float) -> int:
    """Bits needed to hold ``n_keys`` at the given false-positive rate.

    ``ceil(n_keys * log2(1/fpr) * log2 e)``; a rate of 1 or an empty key set
    needs no bits at all (such a region stores nothing and answers true).
    """
    if n_keys < 0:
        raise ValidationError("n_keys must be nonnegative")
    if not (0.0 < fpr <= 1.0):
        raise ValidationError(f"fpr must be in (0, 1], got {fpr!r}")
    if fpr == 1.0 or n_keys == 0:
        return 0
    return math.ceil(n_keys * math.log2(1.0 / fpr) * LOG2_E)


def hashes_for(n_keys: int, n_bits: int) -> int:
    """Probe count minimizing the false-positive rate: round(ln2 * m / n), at least 1."""
    if n_keys < 1 or n_bits < 1:
        raise ValidationError("hashes_for needs positive key and bit counts")
    return max(1, round(_LN2 * n_bits / n_keys))


class BloomFilter:
    """Fixed-size Bloom filter; never forgets an inserted element."""

    __slots__ = ("n_bits", "n_hashes", "seed", "n_inserted", "_bits")

    def __init__(self, n_bits: int, n_hashes: int, seed: int = 0) -> None:
        if n_bits < 1:
            raise ValidationError("n_bits must be positive")
        if n_hashes < 1:
            raise ValidationError("n_hashes must be positive")
        if not (0 <= seed <= _MASK64):
            raise ValidationError("seed must fit in 64 bits")
        self.n_bits = int(n_bits)
        self.n_hashes = int(n_hashes)
        self.seed = int(seed)
        self.n_inserted = 0
        self._bits = bytearray((n_bits + 7) >> 3)

    @classmethod
    def for_capacity(cls, n_keys: int, fpr: float, seed: int = 0) -> "BloomFilter":
        """Size a filter for ``n_keys`` elements at target rate ``fpr``."""
        m = bits_for(n_keys, fpr)
        if m == 0:
            raise ValidationError(
                "for_capacity needs a sized filter; rate 1 or zero keys store nothing"
            )
        return cls(m, hashes_for(n_keys, m), seed)

    def _probes(self, element_id: bytes | str):
        if isinstance(element_id, str):
            element_id = element_id.encode("utf-8")
        digest = hashlib.blake2b(
            element_id, digest_size=16, key=self.seed.to_bytes(8, "little")
        ).digest()
        h1 = int.from_bytes(digest[:8], "little")
        h2 = int.from_bytes(digest[8:], "little") | 1
        m = self.n_bits
        for i in range(self.n_hashes):
            yield (h1 + i * h2) % m

    def insert(self, element_id: bytes | str) -> None:
        bits = self._bits
        for pos in self._probes(element_id):
            bits[pos >> 3] |= 1 << (pos & 7)
        self.n_inserted += 1

    def contains(self, element_id: bytes | str) -> bool:
        bits = self._bits
        for pos in self._probes(element_id):
            if not bits[pos >> 3] & (1 << (pos & 7)):
                return False
        return True

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            _MAGIC, _VERSION, self.n_bits, self.n_hashes, self.seed, self.n_inserted
        )
        return header + bytes(self._bits)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "BloomFilter":
        if len(blob) < _HEADER.size:
            raise ValidationError("truncated filter blob")
        magic, version, n_bits, n_hashes, seed, count = _HEADER.unpack_from(blob)
        if magic != _MAGIC:
            raise ValidationError(f"bad filter magic {magic!r}")
        if version != _VERSION:
            raise ValidationError(f"unsupported filter version {version}")
        expected = _HEADER.size + ((n_bits + 7) >> 3)
        if len(blob) != expected:
            raise ValidationError(
                f"filter blob length {len(blob)} does not match header ({expected})"
            )
        filt = cls(n_bits, n_hashes, seed)
        filt.n_inserted = count
        filt._bits[:] = blob[_HEADER.size:]
        return filt

    def __eq__(self, other) -> bool:
        if not isinstance(other, BloomFilter):
            return NotImplemented
        return (
            self.n_bits == other.n_bits
            and self.n_hashes == other.n_hashes
            and self.seed == other.seed
            and self.n_inserted == other.n_inserted
            and self._bits == other._bits
        )

    def __repr__(self) -> str:
        return (
            f"BloomFilter(n_bits={self.n_bits}, n_hashes={self.n_hashes}, "
            f"seed={self.seed}, n_inserted={self.n_inserted})"
        )
