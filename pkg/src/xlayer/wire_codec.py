"""Canonical big-endian binary encodings for everything that crosses an
entity boundary.

The mobile terminal and the authentication server must derive the same
fingerprint from the same bytes, so signal strength travels as integer
centi-dBm in a fixed-width layout and every encoder is deterministic:
equal values always produce byte-identical output.

Wire layouts (all integers big-endian):

* RSS vector: ``u32 count`` then per reading ``u32 ap_id | i32 rss_cdbm |
  u64 toa_ns``. Readings sorted strictly ascending by ap_id.
* Message frame: one tag byte, then a per-tag fixed layout:

  ==============  ====  =======================================================
  message         tag   payload
  ==============  ====  =======================================================
  AuthRequest     0x01  u16 ct_len | ct | 12-byte nonce | RSS vector
  AvToNs          0x02  16-byte rand | 16-byte autn | 8-byte xres
  Challenge       0x03  16-byte rand | 16-byte autn
  ResResponse     0x04  8-byte res
  Verdict         0x05  accept byte (0/1) | reason byte
  ==============  ====  =======================================================
"""

import struct
from dataclasses import dataclass, field
from typing import Union

from .errors import CodecError, ReasonCode

RSS_MIN_CDBM = -15000
RSS_MAX_CDBM = 0

_U32_MAX = 2**32 - 1
_U64_MAX = 2**64 - 1

_READING = struct.Struct(">IiQ")
_COUNT = struct.Struct(">I")

RAND_LEN = 16
AUTN_LEN = 16
XRES_LEN = 8
NONCE_LEN = 12

TAG_AUTH_REQUEST = 0x01
TAG_AV_TO_NS = 0x02
TAG_CHALLENGE = 0x03
TAG_RES_RESPONSE = 0x04
TAG_VERDICT = 0x05


@dataclass(frozen=True)
class RssReading:
    """One access point's contribution: id, strength in centi-dBm, arrival time."""

    ap_id: int
    rss_cdbm: int
    toa_ns: int

    def __post_init__(self):
        if not 0 <= self.ap_id <= _U32_MAX:
            raise CodecError(f"ap_id out of u32 range: {self.ap_id}")
        if not RSS_MIN_CDBM <= self.rss_cdbm <= RSS_MAX_CDBM:
            raise CodecError(f"rss_cdbm outside [{RSS_MIN_CDBM}, {RSS_MAX_CDBM}]: {self.rss_cdbm}")
        if not 0 < self.toa_ns <= _U64_MAX:
            raise CodecError(f"toa_ns must be positive u64, got {self.toa_ns}")


@dataclass(frozen=True)
class RssVector:
    """Non-empty list of readings, unique and strictly ascending by ap_id."""

    readings: tuple

    def __init__(self, readings):
        object.__setattr__(self, "readings", tuple(readings))
        self.__post_init__()

    def __post_init__(self):
        if not self.readings:
            raise CodecError("RSS vector must contain at least one reading")
        ids = [r.ap_id for r in self.readings]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise CodecError(f"ap_ids must be strictly ascending, got {ids}")

    def __len__(self):
        return len(self.readings)

    def rss_by_ap(self) -> dict:
        return {r.ap_id: r.rss_cdbm for r in self.readings}

    @property
    def max_toa_ns(self) -> int:
        return max(r.toa_ns for r in self.readings)

    def shifted(self, base_time_ns: int) -> "RssVector":
        """Same readings with arrival times offset by a clock base."""
        return RssVector(
            RssReading(r.ap_id, r.rss_cdbm, r.toa_ns + base_time_ns) for r in self.readings
        )


@dataclass(frozen=True)
class AuthRequest:
    tim_ciphertext: bytes
    nonce: bytes
    rss: RssVector

    def __post_init__(self):
        if len(self.nonce) != NONCE_LEN:
            raise CodecError(f"nonce must be {NONCE_LEN} bytes")
        if len(self.tim_ciphertext) > 0xFFFF:
            raise CodecError("tim ciphertext too long")


@dataclass(frozen=True)
class AvToNs:
    rand: bytes
    autn: bytes
    xres: bytes

    def __post_init__(self):
        _check_len("rand", self.rand, RAND_LEN)
        _check_len("autn", self.autn, AUTN_LEN)
        _check_len("xres", self.xres, XRES_LEN)


@dataclass(frozen=True)
class Challenge:
    rand: bytes
    autn: bytes

    def __post_init__(self):
        _check_len("rand", self.rand, RAND_LEN)
        _check_len("autn", self.autn, AUTN_LEN)


@dataclass(frozen=True)
class ResResponse:
    res: bytes

    def __post_init__(self):
        _check_len("res", self.res, XRES_LEN)


@dataclass(frozen=True)
class Verdict:
    accept: bool
    reason: int = field(default=int(ReasonCode.OK))

    def __post_init__(self):
        if not 0 <= int(self.reason) <= 0xFF:
            raise CodecError(f"reason must fit one byte, got {self.reason}")


ProtocolMessage = Union[AuthRequest, AvToNs, Challenge, ResResponse, Verdict]


def _check_len(name, value, expected):
    if len(value) != expected:
        raise CodecError(f"{name} must be {expected} bytes, got {len(value)}")


def encode_rss_vector(v: RssVector) -> bytes:
    """Encode a vector as a count header plus fixed 16-byte reading rows."""
    parts = [_COUNT.pack(len(v.readings))]
    parts.extend(_READING.pack(r.ap_id, r.rss_cdbm, r.toa_ns) for r in v.readings)
    return b"".join(parts)


def decode_rss_vector(b: bytes) -> RssVector:
    v, consumed = _decode_rss_vector_prefix(b)
    if consumed != len(b):
        raise CodecError(f"{len(b) - consumed} trailing bytes after RSS vector")
    return v


def _decode_rss_vector_prefix(b: bytes, offset: int = 0):
    if len(b) - offset < _COUNT.size:
        raise CodecError("buffer shorter than RSS vector header")
    (count,) = _COUNT.unpack_from(b, offset)
    offset += _COUNT.size
    need = count * _READING.size
    if len(b) - offset < need:
        raise CodecError(f"RSS vector truncated: header says {count} readings")
    readings = []
    for _ in range(count):
        ap_id, rss, toa = _READING.unpack_from(b, offset)
        offset += _READING.size
        readings.append(RssReading(ap_id, rss, toa))
    return RssVector(readings), offset


def encode_message(m: ProtocolMessage) -> bytes:
    if isinstance(m, AuthRequest):
        return (
            bytes([TAG_AUTH_REQUEST])
            + struct.pack(">H", len(m.tim_ciphertext))
            + m.tim_ciphertext
            + m.nonce
            + encode_rss_vector(m.rss)
        )
    if isinstance(m, AvToNs):
        return bytes([TAG_AV_TO_NS]) + m.rand + m.autn + m.xres
    if isinstance(m, Challenge):
        return bytes([TAG_CHALLENGE]) + m.rand + m.autn
    if isinstance(m, ResResponse):
        return bytes([TAG_RES_RESPONSE]) + m.res
    if isinstance(m, Verdict):
        return bytes([TAG_VERDICT, 1 if m.accept else 0, int(m.reason)])
    raise CodecError(f"not a protocol message: {type(m).__name__}")


def decode_message(b: bytes) -> ProtocolMessage:
    if not b:
        raise CodecError("empty message buffer")
    tag, body = b[0], b[1:]
    if tag == TAG_AUTH_REQUEST:
        if len(body) < 2:
            raise CodecError("AuthRequest truncated before ct length")
        (ct_len,) = struct.unpack_from(">H", body)
        if len(body) < 2 + ct_len + NONCE_LEN:
            raise CodecError("AuthRequest truncated")
        ct = body[2 : 2 + ct_len]
        nonce = body[2 + ct_len : 2 + ct_len + NONCE_LEN]
        rss, consumed = _decode_rss_vector_prefix(body, 2 + ct_len + NONCE_LEN)
        if consumed != len(body):
            raise CodecError("trailing bytes after AuthRequest")
        return AuthRequest(ct, nonce, rss)
    if tag == TAG_AV_TO_NS:
        _expect_body("AvToNs", body, RAND_LEN + AUTN_LEN + XRES_LEN)
        return AvToNs(body[:16], body[16:32], body[32:40])
    if tag == TAG_CHALLENGE:
        _expect_body("Challenge", body, RAND_LEN + AUTN_LEN)
        return Challenge(body[:16], body[16:32])
    if tag == TAG_RES_RESPONSE:
        _expect_body("ResResponse", body, XRES_LEN)
        return ResResponse(body)
    if tag == TAG_VERDICT:
        _expect_body("Verdict", body, 2)
        if body[0] not in (0, 1):
            raise CodecError(f"Verdict accept byte must be 0 or 1, got {body[0]}")
        return Verdict(bool(body[0]), body[1])
    raise CodecError(f"unknown message tag 0x{tag:02X}")


def _expect_body(name, body, expected):
    if len(body) != expected:
        raise CodecError(f"{name} body must be {expected} bytes, got {len(body)}")
