"""Cryptographic core: the f1-f5 key-list functions, authentication-vector
construction, identity masking, and authenticated encryption of the masked
identity.

f1-f5 follow the standard MILENAGE construction over AES-128 (the canonical
realization of exactly this five-function family, with published conformance
vectors the test suite pins). The operator constant defaults to all-zero and
is configurable. Widths are the standard ones: 64-bit MAC/RES, 48-bit SQN/AK,
16-bit AMF, 128-bit RAND/CK/IK.

Secret comparisons (MAC, RES) go through ``hmac.compare_digest``; no
early-exit equality is used anywhere in this module.
"""

import hmac
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.cmac import CMAC

from .counters import count_blocks, count_prf
from .errors import AuthTagInvalid, MacMismatch, SqnOutOfRange, XLayerError

KEY_LEN = 16
OP_DEFAULT = bytes(KEY_LEN)
PRF_ZERO_KEY = bytes(KEY_LEN)
AMF_DEFAULT = b"\x80\x00"

SQN_MAX = 2**48 - 1

TIM_MASK_LABEL = b"tim-mask"
TIM_ENC_LABEL = b"tim-enc"

# Per-function constants and byte rotations of the construction.
_C = {
    1: bytes(16),
    2: bytes(15) + b"\x01",
    3: bytes(15) + b"\x02",
    4: bytes(15) + b"\x04",
    5: bytes(15) + b"\x08",
}
_R = {1: 8, 2: 0, 3: 4, 4: 8, 5: 12}


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError(f"xor length mismatch: {len(a)} vs {len(b)}")
    return bytes(x ^ y for x, y in zip(a, b))


def _rotate(buf: bytes, n_bytes: int) -> bytes:
    return bytes(buf[(i + n_bytes) % len(buf)] for i in range(len(buf)))


def _encrypt_block(key: bytes, block: bytes, counters=None) -> bytes:
    """Single AES-128 block encryption, the kernel under every f function."""
    count_blocks(counters, 1)
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def compute_opc(k: bytes, op: bytes, counters=None) -> bytes:
    return xor_bytes(_encrypt_block(k, op, counters), op)


def _out(i: int, k: bytes, rand: bytes, opc: bytes, counters=None) -> bytes:
    """OUTi for i in 2..5: E_K(rot(TEMP xor OPc, Ri) xor Ci) xor OPc."""
    temp = _encrypt_block(k, xor_bytes(rand, opc), counters)
    rotated = _rotate(xor_bytes(temp, opc), _R[i])
    return xor_bytes(_encrypt_block(k, xor_bytes(rotated, _C[i]), counters), opc)


def _check_inputs(k, rand, sqn=None, amf=None):
    if len(k) != KEY_LEN:
        raise ValueError("key must be 16 bytes")
    if len(rand) != KEY_LEN:
        raise ValueError("rand must be 16 bytes")
    if sqn is not None and not 0 <= sqn <= SQN_MAX:
        raise ValueError("sqn must fit in 48 bits")
    if amf is not None and len(amf) != 2:
        raise ValueError("amf must be 2 bytes")


def f1(k: bytes, rand: bytes, sqn: int, amf: bytes, op: bytes = OP_DEFAULT, counters=None) -> bytes:
    """Network authentication code MAC (64 bits)."""
    _check_inputs(k, rand, sqn, amf)
    opc = compute_opc(k, op, counters)
    temp = _encrypt_block(k, xor_bytes(rand, opc), counters)
    in1 = (sqn.to_bytes(6, "big") + amf) * 2
    inner = xor_bytes(temp, _rotate(xor_bytes(in1, opc), _R[1]))
    out1 = xor_bytes(_encrypt_block(k, xor_bytes(inner, _C[1]), counters), opc)
    return out1[:8]


def f2(k: bytes, rand: bytes, op: bytes = OP_DEFAULT, counters=None) -> bytes:
    """Challenge response RES/XRES (64 bits)."""
    _check_inputs(k, rand)
    opc = compute_opc(k, op, counters)
    return _out(2, k, rand, opc, counters)[8:16]


def f3(k: bytes, rand: bytes, op: bytes = OP_DEFAULT, counters=None) -> bytes:
    """Cipher key CK (128 bits)."""
    _check_inputs(k, rand)
    opc = compute_opc(k, op, counters)
    return _out(3, k, rand, opc, counters)


def f4(k: bytes, rand: bytes, op: bytes = OP_DEFAULT, counters=None) -> bytes:
    """Integrity key IK (128 bits)."""
    _check_inputs(k, rand)
    opc = compute_opc(k, op, counters)
    return _out(4, k, rand, opc, counters)


def f5(k: bytes, rand: bytes, op: bytes = OP_DEFAULT, counters=None) -> bytes:
    """Anonymity key AK (48 bits)."""
    _check_inputs(k, rand)
    opc = compute_opc(k, op, counters)
    return _out(2, k, rand, opc, counters)[:6]


def f(i: int, k: bytes, rand: bytes, sqn: int = 0, amf: bytes = AMF_DEFAULT,
      op: bytes = OP_DEFAULT, counters=None) -> bytes:
    """Dispatch to f1..f5; sqn and amf are consumed only by f1."""
    if i == 1:
        return f1(k, rand, sqn, amf, op, counters)
    if i == 2:
        return f2(k, rand, op, counters)
    if i == 3:
        return f3(k, rand, op, counters)
    if i == 4:
        return f4(k, rand, op, counters)
    if i == 5:
        return f5(k, rand, op, counters)
    raise ValueError(f"f index must be 1..5, got {i}")


@dataclass(frozen=True)
class AuthVector:
    """One-time vector issued by the authenticator: {RAND, XRES, CK, IK, AUTN}."""

    rand: bytes
    xres: bytes
    ck: bytes
    ik: bytes
    autn: bytes

    def __post_init__(self):
        for name, val, ln in (
            ("rand", self.rand, 16), ("xres", self.xres, 8),
            ("ck", self.ck, 16), ("ik", self.ik, 16), ("autn", self.autn, 16),
        ):
            if len(val) != ln:
                raise ValueError(f"{name} must be {ln} bytes, got {len(val)}")

    @property
    def sqn_xor_ak(self) -> bytes:
        return self.autn[:6]

    @property
    def amf(self) -> bytes:
        return self.autn[6:8]

    @property
    def mac(self) -> bytes:
        return self.autn[8:16]


@dataclass(frozen=True)
class SqnState:
    """Terminal-side acceptance window over the 48-bit sequence counter.

    A challenge is fresh iff its sqn lies in (last_accepted, last_accepted +
    window]; acceptance advances last_accepted to the seen value.
    """

    last_accepted: int = 0
    window: int = 32

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not 0 <= self.last_accepted <= SQN_MAX:
            raise ValueError("last_accepted must fit in 48 bits")

    def accepts(self, sqn: int) -> bool:
        return self.last_accepted < sqn <= self.last_accepted + self.window

    def advanced_to(self, sqn: int) -> "SqnState":
        return SqnState(sqn, self.window)


@dataclass(frozen=True)
class MobileIdentity:
    """Permanent identity and its keystream-masked temporary form."""

    im: bytes
    tim: bytes

    def __post_init__(self):
        if len(self.im) != 16 or len(self.tim) != 16:
            raise ValueError("im and tim must be 16 bytes")


@dataclass(frozen=True)
class ChallengeResult:
    res: bytes
    ck: bytes
    ik: bytes
    state: SqnState


class SqnReuse(XLayerError):
    """Attempt to issue an authentication vector with a non-fresh sequence number."""


def build_av(k: bytes, sqn: int, amf: bytes, rand: bytes, op: bytes = OP_DEFAULT,
             last_issued: int = None, counters=None) -> AuthVector:
    """Assemble the authentication vector for one challenge.

    ``last_issued`` is the issuer's per-identity high-water mark; passing it
    enforces the strictly-greater freshness rule at the point of construction.
    """
    _check_inputs(k, rand, sqn, amf)
    if last_issued is not None and sqn <= last_issued:
        raise SqnReuse(f"sqn {sqn} already issued (last was {last_issued})")
    mac = f1(k, rand, sqn, amf, op, counters)
    xres = f2(k, rand, op, counters)
    ck = f3(k, rand, op, counters)
    ik = f4(k, rand, op, counters)
    ak = f5(k, rand, op, counters)
    autn = xor_bytes(sqn.to_bytes(6, "big"), ak) + amf + mac
    return AuthVector(rand, xres, ck, ik, autn)


def mt_process_challenge(k: bytes, rand: bytes, autn: bytes, state: SqnState,
                         op: bytes = OP_DEFAULT, counters=None) -> ChallengeResult:
    """Terminal-side processing of a {RAND, AUTN} challenge.

    Recovers SQN through the anonymity key, validates the token MAC (so
    nothing about an unauthenticated token is trusted), then enforces the
    acceptance window. Raises MacMismatch or SqnOutOfRange; on success
    returns the response, session keys and the advanced window state.
    """
    _check_inputs(k, rand)
    if len(autn) != 16:
        raise ValueError("autn must be 16 bytes")
    ak = f5(k, rand, op, counters)
    sqn = int.from_bytes(xor_bytes(autn[:6], ak), "big")
    amf = autn[6:8]
    xmac = f1(k, rand, sqn, amf, op, counters)
    if not hmac.compare_digest(xmac, autn[8:16]):
        raise MacMismatch()
    if not state.accepts(sqn):
        raise SqnOutOfRange(f"sqn {sqn} outside ({state.last_accepted}, "
                            f"{state.last_accepted + state.window}]")
    res = f2(k, rand, op, counters)
    ck = f3(k, rand, op, counters)
    ik = f4(k, rand, op, counters)
    return ChallengeResult(res, ck, ik, state.advanced_to(sqn))


def verify_res(res: bytes, xres: bytes) -> bool:
    """Constant-time comparison closing the mutual authentication."""
    if len(res) != 8 or len(xres) != 8:
        raise ValueError("res and xres must be 8 bytes")
    return hmac.compare_digest(res, xres)


def prf(key: bytes, message: bytes, counters=None) -> bytes:
    """Keyed PRF (CMAC over the block cipher), 128-bit output."""
    if len(key) != KEY_LEN:
        raise ValueError("prf key must be 16 bytes")
    count_prf(counters)
    count_blocks(counters, 1 + max(1, -(-len(message) // 16)))
    c = CMAC(algorithms.AES(key))
    c.update(message)
    return c.finalize()


def mask_im(im: bytes, k: bytes, counters=None) -> bytes:
    """Masquerade the permanent identity under the fingerprint keystream."""
    if len(im) != 16:
        raise ValueError("im must be 16 bytes")
    return xor_bytes(im, prf(k, TIM_MASK_LABEL, counters))


def unmask_tim(tim: bytes, k: bytes, counters=None) -> bytes:
    """Inverse of mask_im; the mask is an involution."""
    return mask_im(tim, k, counters)


def _tim_aead_key(k: bytes, counters=None) -> bytes:
    return prf(k, TIM_ENC_LABEL, counters)


def encrypt_tim(tim: bytes, k: bytes, nonce: bytes, counters=None) -> bytes:
    """Authenticated encryption of the masked identity; returns ct || tag."""
    if len(nonce) != 12:
        raise ValueError("nonce must be 12 bytes")
    key = _tim_aead_key(k, counters)
    count_blocks(counters, 2 + -(-len(tim) // 16))
    return AESGCM(key).encrypt(nonce, tim, None)


def decrypt_tim(ciphertext: bytes, k: bytes, nonce: bytes, counters=None) -> bytes:
    """Verify the tag and recover the masked identity; raises AuthTagInvalid."""
    if len(nonce) != 12:
        raise ValueError("nonce must be 12 bytes")
    key = _tim_aead_key(k, counters)
    count_blocks(counters, 2 + -(-max(0, len(ciphertext) - 16) // 16))
    try:
        return AESGCM(key).decrypt(nonce, ciphertext, None)
    except InvalidTag as exc:
        raise AuthTagInvalid("tim ciphertext failed authentication") from exc
