"""Fingerprint key generation from received-signal-strength vectors.

Both ends of the link derive the same 128-bit secret from the same wire
bytes: quantize the mean of the per-AP signal strengths (half-to-even, so
the result is independent of summation quirks), then expand the scalar
through a keyed PRF under an all-zero key and a fixed context label.
Arrival times are excluded from the mean; they serve freshness checking,
not key material.
"""

import struct
from dataclasses import dataclass
from fractions import Fraction

from . import crypto_aka
from .wire_codec import RSS_MAX_CDBM, RSS_MIN_CDBM, RssVector, decode_rss_vector

FINGERPRINT_CONTEXT = b"xlayer-k"


@dataclass(frozen=True)
class FingerprintKey:
    """Quantized mean plus the expanded 128-bit secret derived from it."""

    mean_cdbm: int
    key: bytes

    def __post_init__(self):
        if len(self.key) != 16:
            raise ValueError("key must be 16 bytes")
        if not RSS_MIN_CDBM <= self.mean_cdbm <= RSS_MAX_CDBM:
            raise ValueError(f"mean_cdbm out of range: {self.mean_cdbm}")


def mean_rss(v: RssVector) -> int:
    """Arithmetic mean of the rss_cdbm values, rounded half-to-even."""
    total = sum(r.rss_cdbm for r in v.readings)
    return round(Fraction(total, len(v.readings)))


def derive_key(mean_cdbm: int, context: bytes = FINGERPRINT_CONTEXT, counters=None) -> bytes:
    """Expand the quantized mean into a 128-bit key, identically at MT and AS."""
    if not RSS_MIN_CDBM <= mean_cdbm <= RSS_MAX_CDBM:
        raise ValueError(f"mean_cdbm out of range: {mean_cdbm}")
    message = struct.pack(">i", mean_cdbm) + context
    return crypto_aka.prf(crypto_aka.PRF_ZERO_KEY, message, counters)


def fingerprint_from_vector(v: RssVector, counters=None) -> FingerprintKey:
    mean = mean_rss(v)
    return FingerprintKey(mean, derive_key(mean, counters=counters))


def fingerprint_from_wire(rss_bytes: bytes, counters=None) -> FingerprintKey:
    """Decode canonical RSS bytes and derive the fingerprint key from them."""
    return fingerprint_from_vector(decode_rss_vector(rss_bytes), counters=counters)
