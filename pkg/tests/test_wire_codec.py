"""Byte-level verification of the wire layouts and round-trip identities."""

import random

import pytest

from conftest import make_random_vector
from xlayer.errors import CodecError
from xlayer.wire_codec import (
    AuthRequest,
    AvToNs,
    Challenge,
    ResResponse,
    RssReading,
    RssVector,
    Verdict,
    decode_message,
    decode_rss_vector,
    encode_message,
    encode_rss_vector,
)


class TestRssVectorLayout:
    def test_single_reading_exact_bytes(self):
        v = RssVector([RssReading(1, -7000, 1000)])
        expected = bytes.fromhex("00000001" "00000001" "ffffe4a8" "00000000000003e8")
        assert encode_rss_vector(v) == expected

    def test_decode_single_reading(self):
        b = bytes.fromhex("00000001" "00000001" "ffffe4a8" "00000000000003e8")
        v = decode_rss_vector(b)
        assert v.readings == (RssReading(1, -7000, 1000),)

    def test_round_trip_randomized(self):
        rng = random.Random(1234)
        for _ in range(100):
            v = make_random_vector(rng)
            assert decode_rss_vector(encode_rss_vector(v)) == v

    def test_determinism(self):
        v = RssVector([RssReading(3, -5000, 77), RssReading(9, -100, 88)])
        w = RssVector([RssReading(3, -5000, 77), RssReading(9, -100, 88)])
        assert encode_rss_vector(v) == encode_rss_vector(w)

    def test_unsorted_ap_ids_rejected(self):
        with pytest.raises(CodecError):
            RssVector([RssReading(2, -5000, 1), RssReading(1, -5000, 1)])

    def test_duplicate_ap_ids_rejected(self):
        with pytest.raises(CodecError):
            RssVector([RssReading(2, -5000, 1), RssReading(2, -4000, 1)])

    def test_empty_vector_rejected(self):
        with pytest.raises(CodecError):
            RssVector([])

    def test_truncated_header(self):
        with pytest.raises(CodecError):
            decode_rss_vector(b"\x00\x00")

    def test_count_mismatch(self):
        good = encode_rss_vector(RssVector([RssReading(1, -7000, 1000)]))
        with pytest.raises(CodecError):
            decode_rss_vector(good[:-1])
        with pytest.raises(CodecError):
            decode_rss_vector(good + b"\x00")

    def test_decode_enforces_invariants(self):
        two = encode_rss_vector(
            RssVector([RssReading(1, -7000, 5), RssReading(2, -7000, 5)]))
        # overwrite the second ap_id with 1 to forge a duplicate
        forged = two[:20] + b"\x00\x00\x00\x01" + two[24:]
        with pytest.raises(CodecError):
            decode_rss_vector(forged)

    def test_reading_bounds(self):
        with pytest.raises(CodecError):
            RssReading(1, 1, 1)  # rss above 0 dBm
        with pytest.raises(CodecError):
            RssReading(1, -15001, 1)
        with pytest.raises(CodecError):
            RssReading(1, -100, 0)  # toa must be positive


def _sample_messages(rng):
    vec = make_random_vector(rng)
    return [
        AuthRequest(rng.randbytes(32), rng.randbytes(12), vec),
        AvToNs(rng.randbytes(16), rng.randbytes(16), rng.randbytes(8)),
        Challenge(rng.randbytes(16), rng.randbytes(16)),
        ResResponse(rng.randbytes(8)),
        Verdict(bool(rng.getrandbits(1)), rng.randrange(256)),
    ]


class TestMessageFraming:
    def test_verdict_exact_bytes(self):
        assert encode_message(Verdict(True, 0)) == b"\x05\x01\x00"

    def test_round_trip_all_tags(self):
        rng = random.Random(99)
        for _ in range(40):
            for msg in _sample_messages(rng):
                assert decode_message(encode_message(msg)) == msg

    def test_unknown_tag(self):
        with pytest.raises(CodecError, match="0xFF"):
            decode_message(b"\xff\x00\x00")

    def test_empty_buffer(self):
        with pytest.raises(CodecError):
            decode_message(b"")

    @pytest.mark.parametrize("tag", [0x01, 0x02, 0x03, 0x04, 0x05])
    def test_truncation_every_tag(self, tag):
        rng = random.Random(tag)
        msg = _sample_messages(rng)[tag - 1]
        encoded = encode_message(msg)
        with pytest.raises(CodecError):
            decode_message(encoded[:-1])

    def test_fixed_widths_enforced(self):
        with pytest.raises(CodecError):
            Challenge(b"\x00" * 15, b"\x00" * 16)
        with pytest.raises(CodecError):
            AvToNs(b"\x00" * 16, b"\x00" * 17, b"\x00" * 8)
        with pytest.raises(CodecError):
            ResResponse(b"\x00" * 9)
        with pytest.raises(CodecError):
            AuthRequest(b"", b"\x00" * 11, RssVector([RssReading(1, -1, 1)]))
