"""Cross-layer authentication toolkit for dense small-cell networks.

Combines radio-fingerprint key generation, challenge-response key agreement,
a trusted-zone radio map with nearest-neighbor legitimacy checking, a
scripted adversary harness, and a cost benchmark, behind a FastAPI service
and a thin-client CLI.
"""

__version__ = "0.1.0"

from .errors import ReasonCode, Reject, XLayerError  # noqa: F401
