"""Scripted intruder harness: every attack scenario runs against a live
protocol world under explicit capability flags, and the report carries
measured rates rather than asserted outcomes.

Capability model: an adversary observes transcripts only with
``observe_wire``, stores-and-resends only with ``delay_replay``, sends
crafted traffic only with ``inject``, claims arbitrary identities only with
``spoof_im``, and may optionally ``recompute_fingerprint`` from observed
signal vectors (the strongest passive capability; its measured consequence
is reported, not hidden).
"""

import hashlib
import math
from dataclasses import dataclass, field, replace

from . import crypto_aka, fingerprint, protocol_engine as pe, radio_env, wire_codec
from .errors import ReasonCode, Reject
from .wire_codec import RssVector


@dataclass(frozen=True)
class AdversaryCapabilities:
    observe_wire: bool = False
    inject: bool = False
    delay_replay: bool = False
    spoof_im: bool = False
    recompute_fingerprint: bool = False
    position: tuple = None


FULL_CAPS = AdversaryCapabilities(
    observe_wire=True, inject=True, delay_replay=True, spoof_im=True)


@dataclass
class AttackReport:
    scenario: str
    attempts: int
    successes: int
    success_criterion: str
    transcript_digest: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.successes > self.attempts:
            raise ValueError("successes cannot exceed attempts")

    @property
    def success_rate(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0

    def machine_line(self) -> str:
        return (f"scenario={self.scenario} attempts={self.attempts} "
                f"successes={self.successes}")

    def text_block(self) -> str:
        lines = [
            f"attack scenario : {self.scenario}",
            f"attempts        : {self.attempts}",
            f"successes       : {self.successes} (rate {self.success_rate:.4f})",
            f"criterion       : {self.success_criterion}",
            f"transcript      : {self.transcript_digest}",
        ]
        for key in sorted(self.details):
            lines.append(f"  {key}: {self.details[key]}")
        return "\n".join(lines)


def transcript_digest(world) -> str:
    h = hashlib.sha256()
    for entry in world.transport.transcript:
        h.update(entry.payload)
    return h.hexdigest()[:16]


def _observed(world, adv):
    return world.transport.transcript if adv.observe_wire else []


def craft_auth_request(world, im: bytes, position, orientation: int = 0,
                       rss: RssVector = None) -> wire_codec.AuthRequest:
    """Build a protocol-correct request from the adversary's own radio view."""
    if rss is None:
        offsets = radio_env.orientation_offsets(world.cfg.seed, orientation, world.aps)
        rss = radio_env.sample_rss_vector(
            position, world.aps, world.cfg, world.rng, offsets).shifted(world.now_ns)
    key = fingerprint.fingerprint_from_vector(rss)
    nonce = world.rng.getrandbits(96).to_bytes(12, "big")
    tim = crypto_aka.mask_im(im, key.key)
    ct = crypto_aka.encrypt_tim(tim, key.key, nonce)
    return wire_codec.AuthRequest(ct, nonce, rss)


def serverside_centralized(world, req_bytes: bytes, serving_cell: int,
                           sender: str = "adv"):
    """Drive an injected request through NS and AS exactly as the network would.

    Returns (reason, challenge-or-None, session_id); reason OK means an
    authentication vector was issued for the request.
    """
    msg = wire_codec.decode_message(req_bytes)
    session_id = msg.nonce.hex()
    world.transport.send(world, sender, "ns", req_bytes, serving_cell)
    try:
        pe.ns_register_request(world, session_id)
    except Reject as exc:
        return exc.reason, None, session_id
    world.transport.send(world, "ns", "as", req_bytes, serving_cell)
    try:
        _, out_msg, _ = pe.as_handle_request(
            world, msg, serving_cell, pe.SlaMode.CENTRALIZED)
    except Reject as exc:
        world.transport.send(world, "as", sender,
                             wire_codec.encode_message(
                                 wire_codec.Verdict(False, exc.reason)),
                             serving_cell)
        return exc.reason, None, session_id
    world.transport.send(world, "as", "ns", wire_codec.encode_message(out_msg),
                         serving_cell)
    try:
        challenge = pe.ns_forward_challenge(world, out_msg, session_id)
    except Reject as exc:
        return exc.reason, None, session_id
    world.transport.send(world, "ns", sender, wire_codec.encode_message(challenge),
                         serving_cell)
    return ReasonCode.OK, challenge, session_id


def _find_legacy_hellos(entries):
    found = []
    for e in entries:
        try:
            found.append(pe.parse_legacy_hello(e.payload))
        except Exception:
            continue
    return found


def attack_legacy_key_over_air(world, adv: AdversaryCapabilities, n: int) -> AttackReport:
    """Sniff the identity and key from the air, then authenticate as the victim.

    Deterministically total against the legacy baseline; impossible in
    cross-layer mode because the key never crosses the wire.
    """
    world.enroll_mt("victim", cell_id=1)
    if "adv" not in world.mts:
        world.enroll_mt("adv", cell_id=1, enrolled=False)
    successes = 0
    reasons = {}
    for _ in range(n):
        start = len(world.transport.transcript)
        if world.params.legacy_mode:
            pe.run_legacy_session(world, "victim")
        else:
            pe.run_session(world, "victim")
            world.mts["victim"].zone_cache.clear()
        observed = _observed(world, adv)[start:]
        hellos = _find_legacy_hellos(observed)
        if not hellos:
            reasons["no-credentials-observed"] = reasons.get("no-credentials-observed", 0) + 1
            continue
        im, k = hellos[-1]
        verdict = pe.run_legacy_session(world, "adv", im=im, k=k)
        if verdict.ok:
            successes += 1
        else:
            reasons[verdict.reason.name] = reasons.get(verdict.reason.name, 0) + 1
    return AttackReport(
        scenario="legacy-key-recovery" if world.params.legacy_mode
        else "crosslayer-key-recovery",
        attempts=n,
        successes=successes,
        success_criterion="adversary completes an authentication using credentials "
                          "recovered from the air",
        transcript_digest=transcript_digest(world),
        details={"mode": "legacy" if world.params.legacy_mode else "cross-layer",
                 "rejections": reasons},
    )


def attack_replay(world, adv: AdversaryCapabilities, n: int) -> AttackReport:
    """Store-and-resend of captured requests and challenges at three timings."""
    world.enroll_mt("victim", cell_id=1)
    successes = 0
    reasons = {}

    def note(reason):
        reasons[reason if isinstance(reason, str) else reason.name] = \
            reasons.get(reason if isinstance(reason, str) else reason.name, 0) + 1

    for _ in range(n):
        start = len(world.transport.transcript)
        verdict = pe.run_session(world, "victim", pe.SlaMode.CENTRALIZED)
        world.mts["victim"].zone_cache.clear()
        if not verdict.ok:
            note("setup-" + verdict.reason.name)
            continue
        observed = _observed(world, adv)[start:]
        if not (adv.delay_replay and observed):
            note("no-capture")
            continue
        req_bytes = next(e.payload for e in observed
                         if e.payload[0] == wire_codec.TAG_AUTH_REQUEST)
        ch_bytes = next(e.payload for e in observed
                        if e.payload[0] == wire_codec.TAG_CHALLENGE)
        cell = world.mts["victim"].current_cell_id

        # (a) replay the request inside the freshness window
        reason, challenge, _ = serverside_centralized(world, req_bytes, cell)
        if reason is ReasonCode.OK and challenge is not None:
            # An AV was re-issued, but the adversary holds no fingerprint
            # key; success only if it could finish mutual auth, which needs
            # a RES it cannot compute. Count the re-issue in the details.
            note("av-reissued-in-window")
        else:
            note(reason)

        # (b) replay the challenge against a terminal with a live initiation
        mt = world.mts["victim"]
        pe.mt_initiate_auth(world, mt, world.claimed_zone(cell))
        try:
            pe.mt_handle_challenge(world, mt, wire_codec.decode_message(ch_bytes))
            successes += 1
        except Reject as exc:
            note(exc.reason)
        mt.pending = None
        world.mts["victim"].zone_cache.clear()

        # (c) replay the request after the freshness window
        world.advance(world.params.freshness_window_ns + 1_000_000_000)
        reason, challenge, _ = serverside_centralized(world, req_bytes, cell)
        if reason is ReasonCode.OK:
            successes += 1
        else:
            note(reason)
    return AttackReport(
        scenario="replay",
        attempts=n,
        successes=successes,
        success_criterion="a replayed message yields an accepted authentication",
        transcript_digest=transcript_digest(world),
        details={"rejections": reasons},
    )


def attack_mitm(world, adv: AdversaryCapabilities, n: int) -> AttackReport:
    """Eavesdrop for key material and splice tampered challenges."""
    world.enroll_mt("victim", cell_id=1)
    successes = 0
    reasons = {}
    recompute_hits = 0

    def note(name):
        reasons[name] = reasons.get(name, 0) + 1

    for _ in range(n):
        start = len(world.transport.transcript)
        verdict = pe.run_session(world, "victim", pe.SlaMode.CENTRALIZED)
        mt = world.mts["victim"]
        zone = world.claimed_zone(mt.current_cell_id)
        cache = mt.zone_cache.get(zone)
        observed = _observed(world, adv)[start:]
        if not verdict.ok or cache is None:
            note("setup-failed")
            continue
        attempt_won = False

        # passive: do the session keys or the fingerprint key leak as bytes?
        blob = b"".join(e.payload for e in observed)
        if cache.ck in blob or cache.ik in blob:
            attempt_won = True
            note("keys-on-wire")
        elif adv.recompute_fingerprint and observed:
            req = wire_codec.decode_message(next(
                e.payload for e in observed
                if e.payload[0] == wire_codec.TAG_AUTH_REQUEST))
            ch = wire_codec.decode_message(next(
                e.payload for e in observed
                if e.payload[0] == wire_codec.TAG_CHALLENGE))
            k_guess = fingerprint.fingerprint_from_wire(
                wire_codec.encode_rss_vector(req.rss)).key
            ck_guess = crypto_aka.f3(k_guess, ch.rand, world.params.op)
            if ck_guess == cache.ck:
                attempt_won = True
                recompute_hits += 1

        # active: tampered AUTN mac bit, then tampered RAND with original AUTN
        if adv.inject and observed:
            ch = wire_codec.decode_message(next(
                e.payload for e in observed
                if e.payload[0] == wire_codec.TAG_CHALLENGE))
            mt.zone_cache.clear()
            pe.mt_initiate_auth(world, mt, zone)
            bad_autn = ch.autn[:8] + bytes([ch.autn[8] ^ 0x01]) + ch.autn[9:]
            try:
                pe.mt_handle_challenge(world, mt, wire_codec.Challenge(ch.rand, bad_autn))
                attempt_won = True
            except Reject as exc:
                note("tampered-mac-" + exc.reason.name)
            bad_rand = bytes([ch.rand[0] ^ 0x01]) + ch.rand[1:]
            try:
                pe.mt_handle_challenge(world, mt, wire_codec.Challenge(bad_rand, ch.autn))
                attempt_won = True
            except Reject as exc:
                note("tampered-rand-" + exc.reason.name)
            mt.pending = None
        mt.zone_cache.clear()
        if attempt_won:
            successes += 1
    return AttackReport(
        scenario="mitm-recompute" if adv.recompute_fingerprint else "mitm",
        attempts=n,
        successes=successes,
        success_criterion="session keys recovered from the wire or a tampered "
                          "challenge accepted",
        transcript_digest=transcript_digest(world),
        details={"rejections": reasons, "recompute_hits": recompute_hits},
    )


def attack_impersonation(world, adv: AdversaryCapabilities, case: int, n: int) -> AttackReport:
    """Case 1: a fake serving network harvests and reuses responses.
    Case 2: unsolicited challenges pushed at an idle terminal."""
    world.enroll_mt("victim", cell_id=1)
    mt = world.mts["victim"]
    cell = mt.current_cell_id
    zone = world.claimed_zone(cell)
    successes = 0
    reasons = {}

    def note(name):
        reasons[name] = reasons.get(name, 0) + 1

    for _ in range(n):
        if case == 2:
            rand = world.rng.getrandbits(128).to_bytes(16, "big")
            autn = world.rng.getrandbits(128).to_bytes(16, "big")
            try:
                pe.mt_handle_challenge(world, mt, wire_codec.Challenge(rand, autn))
                successes += 1
            except Reject as exc:
                note(exc.reason.name)
            continue

        # case 1: adversary plays the NS role for one genuine exchange
        req = pe.mt_initiate_auth(world, mt, zone)
        req_bytes = wire_codec.encode_message(req)
        world.transport.send(world, "victim", "adv-ns", req_bytes, cell)
        world.transport.send(world, "adv-ns", "as", req_bytes, cell)
        av_msg = None
        try:
            _, av_msg, _ = pe.as_handle_request(
                world, req, cell, pe.SlaMode.CENTRALIZED)
        except Reject as exc:
            note("as-" + exc.reason.name)
            mt.pending = None
            continue
        world.transport.send(world, "as", "adv-ns",
                             wire_codec.encode_message(av_msg), cell)
        live = wire_codec.Challenge(av_msg.rand, av_msg.autn)
        world.transport.send(world, "adv-ns", "victim",
                             wire_codec.encode_message(live), cell)
        try:
            rsp = pe.mt_handle_challenge(world, mt, live)
        except Reject as exc:
            note("mt-" + exc.reason.name)
            continue
        world.transport.send(world, "victim", "adv-ns",
                             wire_codec.encode_message(rsp), cell)
        world.mts["victim"].zone_cache.clear()

        # (a) reuse the harvested RES against a fresh exchange
        req2 = pe.mt_initiate_auth(world, mt, zone)
        try:
            _, av2, _ = pe.as_handle_request(world, req2, cell, pe.SlaMode.CENTRALIZED)
        except Reject as exc:
            note("as2-" + exc.reason.name)
            mt.pending = None
            continue
        sid2 = req2.nonce.hex()
        pe.ns_register_request(world, sid2)
        pe.ns_forward_challenge(world, av2, sid2)
        try:
            pe.ns_verify(world, rsp, sid2)
            successes += 1
        except Reject as exc:
            note("reuse-" + exc.reason.name)
        mt.pending = None

        # (b) replay the stale AV at the terminal
        mt.zone_cache.clear()
        pe.mt_initiate_auth(world, mt, zone)
        try:
            pe.mt_handle_challenge(world, mt, live)
            successes += 1
        except Reject as exc:
            note("stale-av-" + exc.reason.name)
        mt.pending = None
        mt.zone_cache.clear()
    return AttackReport(
        scenario=f"impersonation-case{case}",
        attempts=n,
        successes=successes,
        success_criterion="adversary-controlled flow accepted as the victim"
        if case == 1 else "terminal accepts an unsolicited challenge",
        transcript_digest=transcript_digest(world),
        details={"rejections": reasons},
    )


def attack_location_spoof(world, adv: AdversaryCapabilities, n: int,
                          victim_zone: int = 0) -> AttackReport:
    """Submit requests with a legitimate identity from outside the zone.

    The measured acceptance rate is the zone check's false-accept rate at
    the adversary's distance.
    """
    world.enroll_mt("victim", cell_id=1)
    victim_im = world.mts["victim"].im
    zone_cells = world.zone_table.zones()[victim_zone]
    cell = zone_cells[0]
    zone_points = [pos for c in zone_cells for pos, _ in world.locations_by_cell[c]]
    if adv.position is None:
        xs = [p[0] for p in zone_points]
        ys = [p[1] for p in zone_points]
        pos = (max(xs) + 200.0, max(ys) + 200.0)
        while min(math.dist(pos, p) for p in zone_points) < 200.0:
            pos = (pos[0] + 50.0, pos[1] + 50.0)
        adv = replace(adv, position=pos)
    standoff_m = min(math.dist(adv.position, p) for p in zone_points)
    successes = 0
    reasons = {}
    for _ in range(n):
        if not (adv.inject and adv.spoof_im):
            reasons["missing-capability"] = reasons.get("missing-capability", 0) + 1
            continue
        req = craft_auth_request(world, victim_im, adv.position)
        reason, _, _ = serverside_centralized(
            world, wire_codec.encode_message(req), cell)
        if reason is ReasonCode.OK:
            successes += 1
        else:
            reasons[reason.name] = reasons.get(reason.name, 0) + 1
        pe.ns_purge_expired(world)
        world.ns_state.pending.clear()
    return AttackReport(
        scenario="location-spoof",
        attempts=n,
        successes=successes,
        success_criterion="authentication vector issued for a request sent "
                          "from outside the claimed zone",
        transcript_digest=transcript_digest(world),
        details={"rejections": reasons, "adversary_position": adv.position,
                 "standoff_m": round(standoff_m, 1),
                 "epsilon": world.params.epsilon},
    )


def attack_dos_flood(world, adv: AdversaryCapabilities, case: int,
                     n_flood: int) -> AttackReport:
    """Flood the half-open table; the defense holds if the table stays
    bounded, entries purge at their deadlines, and a legitimate terminal
    still completes once capacity frees."""
    world.enroll_mt("victim", cell_id=1)
    world.enroll_mt("atk", cell_id=1, enrolled=(case == 1))
    atk = world.mts["atk"]
    cell = atk.current_cell_id
    violations = 0
    refused = 0
    av_issued = 0
    as_rejections = {}
    legit_during = None

    for i in range(n_flood):
        if case == 1:
            atk.zone_cache.clear()
            req = pe.mt_initiate_auth(world, atk, world.claimed_zone(cell))
            atk.pending = None
        else:
            # alternate spoofed identities with outright garbage key material
            fake_im = world.rng.getrandbits(128).to_bytes(16, "big")
            req = craft_auth_request(world, fake_im, atk.position, atk.orientation)
            if i % 2:
                ct = bytearray(req.tim_ciphertext)
                ct[0] ^= 0xFF
                req = wire_codec.AuthRequest(bytes(ct), req.nonce, req.rss)
        reason, challenge, _ = serverside_centralized(
            world, wire_codec.encode_message(req), cell, sender="atk")
        if reason is ReasonCode.HALF_OPEN_CAPACITY:
            refused += 1
        elif reason is ReasonCode.OK:
            av_issued += 1
        else:
            as_rejections[reason.name] = as_rejections.get(reason.name, 0) + 1
        if len(world.ns_state.pending) > world.ns_state.capacity:
            violations += 1
        if i == n_flood // 2:
            legit_during = pe.run_session(world, "victim", pe.SlaMode.CENTRALIZED)
            world.mts["victim"].zone_cache.clear()

    table_peak = world.ns_state.max_pending_seen
    for deadline in sorted(e.deadline_ns for e in world.ns_state.pending.values()):
        if deadline > world.now_ns:
            world.advance_to(deadline)
    unpurged = len(world.ns_state.pending)
    violations += unpurged
    purge_lag = max((purged_at - deadline for _, deadline, purged_at
                     in world.ns_state.purged), default=0)

    legit_after = pe.run_session(world, "victim", pe.SlaMode.CENTRALIZED)
    if not legit_after.ok:
        violations += 1
    return AttackReport(
        scenario=f"dos-flood-case{case}",
        attempts=n_flood,
        successes=min(violations, n_flood),
        success_criterion="half-open table overflow, an entry surviving its "
                          "deadline, or a legitimate session starved",
        transcript_digest=transcript_digest(world),
        details={
            "table_peak": table_peak,
            "capacity": world.ns_state.capacity,
            "capacity_refusals": refused,
            "avs_issued_to_flood": av_issued,
            "as_rejections": as_rejections,
            "unpurged_after_deadline": unpurged,
            "max_purge_lag_ns": purge_lag,
            "legit_during_flood": legit_during.outcome.value if legit_during else None,
            "legit_during_reason": legit_during.reason.name if legit_during else None,
            "legit_after_flood": legit_after.outcome.value,
        },
    )


# ---------------------------------------------------------------------------
# Scenario registry used by the service and the CLI
# ---------------------------------------------------------------------------

def _attack_params(n: int, **overrides) -> pe.RunParams:
    # Harvest-style scenarios issue one extra AV per attempt that the victim
    # never consumes; widen the acceptance window so the setup sessions
    # themselves never desynchronize over long runs.
    return pe.RunParams(sqn_window=max(64, 4 * n), **overrides)


def _legacy_world(seed, n):
    return pe.build_world(seed, params=_attack_params(n, legacy_mode=True))


def _crosslayer_world(seed, n):
    return pe.build_world(seed, params=_attack_params(n))


def _spoof_world(seed, n):
    # Channel pinned by the calibration sweep: with the 99th-percentile error
    # range, the zone check holds the spoof-acceptance target up to 3 dB of
    # shadowing in this geometry and loses discrimination at 4 dB (measured;
    # see the location-spoof sweep in the test suite).
    return pe.build_world(
        seed, pe.WorldConfig(shadowing_sigma_cdbm=300, samples_per_combo=25),
        params=_attack_params(n))


SCENARIOS = {
    "legacy-key-recovery": lambda w, a, n: attack_legacy_key_over_air(w, a, n),
    "crosslayer-key-recovery": lambda w, a, n: attack_legacy_key_over_air(w, a, n),
    "replay": lambda w, a, n: attack_replay(w, a, n),
    "mitm": lambda w, a, n: attack_mitm(w, a, n),
    "mitm-recompute": lambda w, a, n: attack_mitm(
        w, replace(a, recompute_fingerprint=True), n),
    "impersonation-case1": lambda w, a, n: attack_impersonation(w, a, 1, n),
    "impersonation-case2": lambda w, a, n: attack_impersonation(w, a, 2, n),
    "location-spoof": lambda w, a, n: attack_location_spoof(w, a, n),
    "dos-flood-case1": lambda w, a, n: attack_dos_flood(w, a, 1, n),
    "dos-flood-case2": lambda w, a, n: attack_dos_flood(w, a, 2, n),
}

_WORLD_BUILDERS = {
    "legacy-key-recovery": _legacy_world,
    "location-spoof": _spoof_world,
}


def run_attack(scenario: str, n: int, seed: int,
               adv: AdversaryCapabilities = None) -> AttackReport:
    """Build a fresh world for the scenario and execute it."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown attack scenario {scenario!r}; "
                         f"known: {', '.join(sorted(SCENARIOS))}")
    world = _WORLD_BUILDERS.get(scenario, _crosslayer_world)(seed, n)
    return SCENARIOS[scenario](world, adv or FULL_CAPS, n)
