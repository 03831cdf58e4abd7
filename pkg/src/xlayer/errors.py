"""Shared exception types and protocol reason codes.

Every rejection that can cross an entity boundary carries a ReasonCode so
verdict messages stay one byte wide and attack reports can histogram the
outcomes.
"""

from enum import IntEnum


class ReasonCode(IntEnum):
    """One-byte reason codes used in Verdict messages and session verdicts."""

    OK = 0
    DECRYPT_FAILED = 1
    UNKNOWN_IDENTITY = 2
    STALE_RSS = 3
    ZONE_REJECTED = 4
    MAC_MISMATCH = 5
    SQN_OUT_OF_RANGE = 6
    UNSOLICITED_CHALLENGE = 7
    NO_PENDING_ENTRY = 8
    EXPIRED = 9
    HALF_OPEN_CAPACITY = 10
    RES_MISMATCH = 11
    TIMED_OUT = 12
    NO_AP_IN_RANGE = 13
    DUPLICATE_SESSION = 14


class XLayerError(Exception):
    """Base class for all errors raised by this package."""


class CodecError(XLayerError, ValueError):
    """Malformed bytes or invalid values at the wire codec boundary."""


class RadioMapFormatError(XLayerError, ValueError):
    """Radio-map file violates the persisted format."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class Reject(XLayerError):
    """A protocol-level rejection with a wire-representable reason code."""

    reason = ReasonCode.OK

    def __init__(self, reason=None, detail=""):
        if reason is not None:
            self.reason = ReasonCode(reason)
        self.detail = detail
        super().__init__(f"{self.reason.name}{': ' + detail if detail else ''}")


class MacMismatch(Reject):
    """XMAC computed by the terminal differs from the MAC in the token."""

    reason = ReasonCode.MAC_MISMATCH

    def __init__(self, detail=""):
        super().__init__(None, detail)


class SqnOutOfRange(Reject):
    """Sequence number outside the acceptance window; replay or desync."""

    reason = ReasonCode.SQN_OUT_OF_RANGE

    def __init__(self, detail=""):
        super().__init__(None, detail)


class AuthTagInvalid(Reject):
    """Authenticated decryption failed; ciphertext, tag, nonce or key is wrong."""

    reason = ReasonCode.DECRYPT_FAILED

    def __init__(self, detail=""):
        super().__init__(None, detail)


class NoApInRange(Reject):
    """No access point produced a signal above the noise floor."""

    reason = ReasonCode.NO_AP_IN_RANGE

    def __init__(self, detail=""):
        super().__init__(None, detail)


class AllImputed(Reject):
    """Query shares no access point with any radio-map record."""

    reason = ReasonCode.ZONE_REJECTED

    def __init__(self, detail="query shares no AP with any record"):
        super().__init__(None, detail)


class FastPathAvailable(XLayerError):
    """Signal that a cached zone authentication makes a full run unnecessary."""
