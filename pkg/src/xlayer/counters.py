"""Deterministic cost accounting shared by the crypto, matching and protocol layers.

Counter conventions (documented once, applied everywhere):

* ``cipher_block_ops`` counts 128-bit block-cipher invocations. The
  key-list functions count their real block calls. CMAC over an L-byte
  message is booked as ``1 + ceil(L/16)`` blocks (subkey derivation plus
  message blocks); AES-GCM over an L-byte payload as ``2 + ceil(L/16)``
  (hash subkey and tag counter plus keystream blocks).
* ``prf_calls`` counts keyed-PRF invocations (key expansion, masking
  keystream, payload-key derivation).
* ``knn_distance_evals`` counts radio-map records scanned per match.
* ``messages_sent`` / ``bytes_sent`` count transport sends, including
  dropped ones (a dropped message was still transmitted).
* ``wall_ns`` is wall-clock time and is excluded from determinism checks.
"""

from dataclasses import dataclass, fields


@dataclass
class CostCounters:
    cipher_block_ops: int = 0
    prf_calls: int = 0
    knn_distance_evals: int = 0
    messages_sent: int = 0
    bytes_sent: int = 0
    wall_ns: int = 0

    def add(self, other: "CostCounters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def copy(self) -> "CostCounters":
        return CostCounters(**{f.name: getattr(self, f.name) for f in fields(self)})

    def deterministic_fields(self) -> dict:
        """All counters except wall-clock, for reproducibility assertions."""
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out.pop("wall_ns")
        return out


def count_blocks(counters, n: int) -> None:
    """Book n block-cipher operations if a counter sheet is attached."""
    if counters is not None:
        counters.cipher_block_ops += n


def count_prf(counters) -> None:
    if counters is not None:
        counters.prf_calls += 1


def count_knn(counters, n: int) -> None:
    if counters is not None:
        counters.knn_distance_evals += n
