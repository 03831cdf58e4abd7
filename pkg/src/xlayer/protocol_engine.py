"""Three-party authentication engine: mobile terminal (MT), network slice
(NS) and authentication slice (AS) state machines, both service-level
agreement flows, the zone-authentication cache, freshness checks and the
half-open request bookkeeping that bounds flooding.

Message passing runs over an in-process simulated transport with a seeded
drop decision and a fixed link latency on a simulated nanosecond clock, so
every timeout, replay and flood scenario is reproducible. There are no
retries: a dropped message surfaces as a timeout.

Flow shapes:

* decentralized: MT -> AS (AuthRequest), AS -> MT (Challenge); the exchange
  ends with the terminal's local validation.
* centralized:   MT -> NS -> AS (AuthRequest), AS -> NS (AvToNs),
  NS -> MT (Challenge), MT -> NS (ResResponse), NS -> MT (Verdict).

The serving cell travels as transport metadata and names the zone the
terminal claims to occupy.
"""

import time
from dataclasses import dataclass, field, replace
from enum import Enum

from . import crypto_aka, fingerprint, radio_env, trusted_zone, wire_codec
from .counters import CostCounters
from .errors import (
    FastPathAvailable,
    NoApInRange,
    ReasonCode,
    Reject,
    XLayerError,
)

DEFAULT_EPSILON_CDBM = 100.0

LEGACY_HELLO_TAG = 0x7F
LEGACY_RES_TAG = 0x7D
BASELINE_HELLO_TAG = 0x11


class SlaMode(Enum):
    DECENTRALIZED = "decentralized"
    CENTRALIZED = "centralized"


class Outcome(Enum):
    MUTUAL_AUTH_SUCCESS = "MutualAuthSuccess"
    FAST_PATH_SUCCESS = "FastPathSuccess"
    REJECTED_BY_AS = "RejectedByAs"
    REJECTED_BY_MT = "RejectedByMt"
    REJECTED_BY_NS = "RejectedByNs"
    TIMED_OUT = "TimedOut"


@dataclass(frozen=True)
class SessionVerdict:
    outcome: Outcome
    reason: ReasonCode
    counters: CostCounters
    mt_id: str = ""
    cell_id: int = 0
    zone_id: int = 0

    @property
    def ok(self) -> bool:
        return self.outcome in (Outcome.MUTUAL_AUTH_SUCCESS, Outcome.FAST_PATH_SUCCESS)


@dataclass
class RunParams:
    sla: SlaMode = SlaMode.CENTRALIZED
    sqn_window: int = 32
    k_neighbors: int = 3
    epsilon: float = None
    freshness_window_ns: int = 2_000_000_000
    half_open_capacity: int = 64
    pending_ttl_ns: int = 3_000_000_000
    cache_ttl_ns: int = 3_600_000_000_000
    link_latency_ns: int = 10_000_000
    drop_rate: float = 0.0
    amf: bytes = crypto_aka.AMF_DEFAULT
    op: bytes = crypto_aka.OP_DEFAULT
    legacy_mode: bool = False


@dataclass
class WorldConfig:
    n_cells: int = 16
    cells_per_zone: int = 4
    cell_size_m: float = 200.0
    points_per_cell: int = 4
    orientations: int = 4
    samples_per_combo: int = 5
    n_mts: int = 4
    path_loss_exponent: float = 3.0
    reference_distance_m: float = 1.0
    reference_loss_cdbm: int = 4000
    # Protocol worlds default to a deterministic channel; the zone check is
    # then provably sound at mapped locations. Raise sigma to study the
    # calibrated false-reject rate instead.
    shadowing_sigma_cdbm: int = 0
    toa_jitter_ns: int = 50
    noise_floor_cdbm: int = radio_env.DEFAULT_NOISE_FLOOR_CDBM
    tx_power_cdbm: int = radio_env.DEFAULT_TX_POWER_CDBM


@dataclass(frozen=True)
class CacheEntry:
    ck: bytes
    ik: bytes
    expires_ns: int


@dataclass(frozen=True)
class PendingInit:
    nonce: bytes
    key: fingerprint.FingerprintKey
    zone_id: int
    started_ns: int


@dataclass
class MtState:
    mt_id: str
    im: bytes
    position: tuple
    current_cell_id: int
    orientation: int = 0
    sqn_state: crypto_aka.SqnState = field(default_factory=crypto_aka.SqnState)
    baseline_sqn_state: crypto_aka.SqnState = field(default_factory=crypto_aka.SqnState)
    zone_cache: dict = field(default_factory=dict)
    pending: PendingInit = None


@dataclass
class HalfOpenEntry:
    session_id: str
    created_ns: int
    deadline_ns: int
    xres: bytes = None

    @property
    def challenged(self) -> bool:
        return self.xres is not None


@dataclass
class NsState:
    capacity: int = 64
    pending: dict = field(default_factory=dict)
    max_pending_seen: int = 0
    purged: list = field(default_factory=list)
    purged_ids: set = field(default_factory=set)

    def note_size(self):
        self.max_pending_seen = max(self.max_pending_seen, len(self.pending))


@dataclass
class AsState:
    enrolled: set = field(default_factory=set)
    sqn_issued: dict = field(default_factory=dict)
    legacy_pending: dict = field(default_factory=dict)
    legacy_keys: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TranscriptEntry:
    time_ns: int
    sender: str
    receiver: str
    serving_cell_id: int
    payload: bytes
    delivered: bool


class Transport:
    """Seeded in-process link: fixed latency, Bernoulli drops, full transcript."""

    def __init__(self, rng, latency_ns: int, drop_rate: float):
        self.rng = rng
        self.latency_ns = latency_ns
        self.drop_rate = drop_rate
        self.transcript = []

    def send(self, world, sender: str, receiver: str, payload: bytes,
             serving_cell_id: int = 0, counters: CostCounters = None) -> bool:
        world.advance(self.latency_ns)
        if counters is not None:
            counters.messages_sent += 1
            counters.bytes_sent += len(payload)
        dropped = self.drop_rate > 0 and self.rng.random() < self.drop_rate
        self.transcript.append(TranscriptEntry(
            world.now_ns, sender, receiver, serving_cell_id, payload, not dropped))
        return not dropped


class World:
    """One simulation universe: environment, trusted-zone DB, entities, clock."""

    def __init__(self, seed: int, cfg, aps, zone_table, db, index,
                 locations_by_cell, params: RunParams):
        self.seed = seed
        self.cfg = cfg
        self.aps = aps
        self.zone_table = zone_table
        self.db = db
        self.index = index
        self.locations_by_cell = locations_by_cell
        self.params = params
        self.now_ns = 1_000_000_000
        self.rng = radio_env.substream(seed, "world")
        self.transport = Transport(radio_env.substream(seed, "net"),
                                   params.link_latency_ns, params.drop_rate)
        self.as_state = AsState()
        self.ns_state = NsState(capacity=params.half_open_capacity)
        self.mts = {}

    def advance(self, delta_ns: int) -> None:
        self.advance_to(self.now_ns + delta_ns)

    def advance_to(self, t_ns: int) -> None:
        if t_ns < self.now_ns:
            raise ValueError("simulated time cannot move backwards")
        self.now_ns = t_ns
        ns_purge_expired(self)

    def enroll_mt(self, mt_id: str, cell_id: int = 1, im: bytes = None,
                  orientation: int = 0, enrolled: bool = True) -> MtState:
        if im is None:
            im = radio_env.derive_bytes(self.seed, 16, "im", mt_id)
        pos = self.locations_by_cell[cell_id][0][0]
        mt = MtState(mt_id, im, pos, cell_id, orientation,
                     sqn_state=crypto_aka.SqnState(0, self.params.sqn_window))
        self.mts[mt_id] = mt
        if enrolled:
            self.as_state.enrolled.add(im)
        return mt

    def place_mt(self, mt_id: str, cell_id: int, rng=None) -> None:
        """Move a terminal to a mapped location/orientation of a cell."""
        combos = self.locations_by_cell[cell_id]
        pick = 0 if rng is None else rng.randrange(len(combos))
        pos, orientation = combos[pick]
        mt = self.mts[mt_id]
        mt.position = pos
        mt.current_cell_id = cell_id
        mt.orientation = orientation

    def sample_mt_vector(self, mt: MtState) -> wire_codec.RssVector:
        offsets = radio_env.orientation_offsets(self.cfg.seed, mt.orientation, self.aps)
        vec = radio_env.sample_rss_vector(mt.position, self.aps, self.cfg, self.rng, offsets)
        return vec.shifted(self.now_ns)

    def claimed_zone(self, cell_id: int) -> int:
        return self.zone_table.zone_of(cell_id)

    def attach_radio_map(self, db) -> None:
        """Adopt an externally loaded radio map: records, zone assignment and
        the set of mapped locations all come from the file.

        The map must have been generated against the same cell geometry and
        environment seed, otherwise orientation offsets will not line up and
        legitimate sessions will fail the zone check.
        """
        if not db:
            raise ValueError("radio map is empty")
        self.db = db
        self.index = trusted_zone.KnnIndex(db, self.cfg.noise_floor_cdbm)
        self.zone_table = trusted_zone.ZoneTable(
            {rec.cell_id: rec.zone_id for rec in db})
        locations = {}
        for rec in db:
            combos = locations.setdefault(rec.cell_id, [])
            if (rec.location, rec.orientation) not in combos:
                combos.append((rec.location, rec.orientation))
        self.locations_by_cell = locations
        for mt in self.mts.values():
            if mt.current_cell_id not in locations:
                mt.current_cell_id = min(locations)
            self.place_mt(mt.mt_id, mt.current_cell_id)


def build_world(seed: int, world_cfg: WorldConfig = None, params: RunParams = None) -> World:
    """Construct a deterministic world: cells, APs, radio map, zone table, MTs."""
    world_cfg = world_cfg or WorldConfig()
    params = params or RunParams()
    cfg = radio_env.EnvironmentConfig(
        path_loss_exponent=world_cfg.path_loss_exponent,
        reference_distance_m=world_cfg.reference_distance_m,
        reference_loss_cdbm=world_cfg.reference_loss_cdbm,
        shadowing_sigma_cdbm=world_cfg.shadowing_sigma_cdbm,
        toa_jitter_ns=world_cfg.toa_jitter_ns,
        noise_floor_cdbm=world_cfg.noise_floor_cdbm,
        seed=seed,
    )
    layout = radio_env.CellLayout(world_cfg.n_cells, world_cfg.cell_size_m,
                                  world_cfg.tx_power_cdbm)
    aps = layout.access_points()
    zone_table = trusted_zone.build_zone_table(
        [ap.cell_id for ap in aps], world_cfg.cells_per_zone)

    map_rng = radio_env.substream(seed, "radio-map")
    db = []
    locations_by_cell = {ap.cell_id: [] for ap in aps}
    for ap in aps:
        cell = ap.cell_id
        grid = layout.points_in_cell(cell, world_cfg.points_per_cell)
        records = radio_env.synthesize_radio_map(
            grid, world_cfg.orientations, world_cfg.samples_per_combo, aps, cfg, map_rng)
        for pos, orientation, vec in records:
            db.append(trusted_zone.RadioMapRecord(
                pos, orientation, zone_table.zone_of(cell), cell, vec))
        for pos in grid:
            for o in range(world_cfg.orientations):
                locations_by_cell[cell].append((pos, o))

    index = trusted_zone.KnnIndex(db, cfg.noise_floor_cdbm)
    if params.epsilon is None:
        if cfg.shadowing_sigma_cdbm > 0:
            cal = trusted_zone.calibrate_epsilon(db, aps, cfg, seed=seed,
                                                 k_neighbors=params.k_neighbors)
            params = replace(params, epsilon=max(cal.epsilon, 1.0))
        else:
            params = replace(params, epsilon=DEFAULT_EPSILON_CDBM)

    world = World(seed, cfg, aps, zone_table, db, index, locations_by_cell, params)
    for i in range(world_cfg.n_mts):
        cell = aps[i % len(aps)].cell_id
        world.enroll_mt(f"mt{i}", cell_id=cell)
    return world


# ---------------------------------------------------------------------------
# Entity operations
# ---------------------------------------------------------------------------

def mt_fast_path(world: World, mt: MtState, zone_id: int):
    """Return the cached zone entry for an intra-zone handover, or None."""
    entry = mt.zone_cache.get(zone_id)
    if entry is not None and entry.expires_ns > world.now_ns:
        return entry
    return None


def mt_initiate_auth(world: World, mt: MtState, zone_id: int,
                     counters: CostCounters = None) -> wire_codec.AuthRequest:
    """Step 1 at the terminal: sample, fingerprint, mask, encrypt, request."""
    if mt_fast_path(world, mt, zone_id) is not None:
        raise FastPathAvailable(f"zone {zone_id} already authenticated")
    rss = world.sample_mt_vector(mt)
    key = fingerprint.fingerprint_from_vector(rss, counters=counters)
    nonce = world.rng.getrandbits(96).to_bytes(12, "big")
    tim = crypto_aka.mask_im(mt.im, key.key, counters)
    ct = crypto_aka.encrypt_tim(tim, key.key, nonce, counters)
    mt.pending = PendingInit(nonce, key, zone_id, world.now_ns)
    return wire_codec.AuthRequest(ct, nonce, rss)


def as_handle_request(world: World, req: wire_codec.AuthRequest, serving_cell_id: int,
                      sla: SlaMode, counters: CostCounters = None):
    """Step 2 at the authentication slice.

    Rederives the fingerprint from the wire bytes, recovers and checks the
    identity, enforces arrival-time freshness, and runs the trusted-zone
    legitimacy decision; only then is an authentication vector issued.
    Returns (AuthVector, outbound message, receiver entity).
    """
    rss_bytes = wire_codec.encode_rss_vector(req.rss)
    key = fingerprint.fingerprint_from_wire(rss_bytes, counters=counters)
    tim = crypto_aka.decrypt_tim(req.tim_ciphertext, key.key, req.nonce, counters)
    im = crypto_aka.unmask_tim(tim, key.key, counters)
    if im not in world.as_state.enrolled:
        raise Reject(ReasonCode.UNKNOWN_IDENTITY)
    age_ns = world.now_ns - req.rss.max_toa_ns
    if abs(age_ns) > world.params.freshness_window_ns:
        raise Reject(ReasonCode.STALE_RSS, f"rss age {age_ns} ns")
    match = world.index.match(req.rss, world.params.k_neighbors, counters)
    claimed = world.claimed_zone(serving_cell_id)
    if not trusted_zone.zone_legitimacy(match, claimed, world.params.epsilon):
        raise Reject(ReasonCode.ZONE_REJECTED,
                     f"k_dh={match.k_dh:.1f} matched_zone={match.matched_zone} "
                     f"claimed={claimed}")
    last = world.as_state.sqn_issued.get(im, 0)
    sqn = last + 1
    rand = world.rng.getrandbits(128).to_bytes(16, "big")
    av = crypto_aka.build_av(key.key, sqn, world.params.amf, rand,
                             world.params.op, last_issued=last, counters=counters)
    world.as_state.sqn_issued[im] = sqn
    if sla is SlaMode.DECENTRALIZED:
        return av, wire_codec.Challenge(av.rand, av.autn), "mt"
    return av, wire_codec.AvToNs(av.rand, av.autn, av.xres), "ns"


def ns_purge_expired(world: World) -> list:
    """Drop every half-open entry whose deadline has passed, freeing resources."""
    ns = world.ns_state
    expired = [sid for sid, e in ns.pending.items() if e.deadline_ns <= world.now_ns]
    for sid in expired:
        entry = ns.pending.pop(sid)
        ns.purged.append((sid, entry.deadline_ns, world.now_ns))
        ns.purged_ids.add(sid)
    return expired


def ns_register_request(world: World, session_id: str) -> HalfOpenEntry:
    """Admit a forwarded authentication request into the half-open table."""
    ns = world.ns_state
    ns_purge_expired(world)
    if session_id in ns.pending:
        raise Reject(ReasonCode.DUPLICATE_SESSION, f"session {session_id} already pending")
    if len(ns.pending) >= ns.capacity:
        raise Reject(ReasonCode.HALF_OPEN_CAPACITY,
                     f"{len(ns.pending)} half-open requests")
    entry = HalfOpenEntry(session_id, world.now_ns,
                          world.now_ns + world.params.pending_ttl_ns)
    ns.pending[session_id] = entry
    ns.note_size()
    return entry


def ns_forward_challenge(world: World, av: wire_codec.AvToNs,
                         session_id: str) -> wire_codec.Challenge:
    """Store the expected response with a deadline; pass RAND and AUTN onward."""
    ns = world.ns_state
    ns_purge_expired(world)
    entry = ns.pending.get(session_id)
    if entry is None:
        if len(ns.pending) >= ns.capacity:
            raise Reject(ReasonCode.HALF_OPEN_CAPACITY,
                         f"{len(ns.pending)} half-open requests")
        entry = HalfOpenEntry(session_id, world.now_ns,
                              world.now_ns + world.params.pending_ttl_ns)
        ns.pending[session_id] = entry
        ns.note_size()
    entry.xres = av.xres
    entry.deadline_ns = world.now_ns + world.params.pending_ttl_ns
    return wire_codec.Challenge(av.rand, av.autn)


def mt_handle_challenge(world: World, mt: MtState, ch: wire_codec.Challenge,
                        counters: CostCounters = None) -> wire_codec.ResResponse:
    """Step 3 at the terminal: validate the network, cache the zone keys."""
    if mt.pending is None:
        raise Reject(ReasonCode.UNSOLICITED_CHALLENGE, "no initiated request for AV")
    result = crypto_aka.mt_process_challenge(
        mt.pending.key.key, ch.rand, ch.autn, mt.sqn_state,
        world.params.op, counters)
    mt.sqn_state = result.state
    mt.zone_cache[mt.pending.zone_id] = CacheEntry(
        result.ck, result.ik, world.now_ns + world.params.cache_ttl_ns)
    mt.pending = None
    return wire_codec.ResResponse(result.res)


def ns_verify(world: World, rsp: wire_codec.ResResponse, session_id: str):
    """Close the half-open entry; accept iff RES equals the stored XRES."""
    ns = world.ns_state
    ns_purge_expired(world)
    entry = ns.pending.get(session_id)
    if entry is None:
        if session_id in ns.purged_ids:
            raise Reject(ReasonCode.EXPIRED, "response arrived after the deadline")
        raise Reject(ReasonCode.NO_PENDING_ENTRY)
    if entry.xres is None:
        ns.pending.pop(session_id)
        raise Reject(ReasonCode.NO_PENDING_ENTRY, "no challenge forwarded yet")
    ns.pending.pop(session_id)
    if crypto_aka.verify_res(rsp.res, entry.xres):
        return ReasonCode.OK
    raise Reject(ReasonCode.RES_MISMATCH)


# ---------------------------------------------------------------------------
# Session orchestration
# ---------------------------------------------------------------------------

def run_session(world: World, mt_id: str, sla: SlaMode = None) -> SessionVerdict:
    """One full authentication: Step 1 through Step 3 over the transport."""
    t0 = time.perf_counter_ns()
    sla = sla or world.params.sla
    mt = world.mts[mt_id]
    cell = mt.current_cell_id
    zone = world.claimed_zone(cell)
    counters = CostCounters()

    def verdict(outcome, reason):
        counters.wall_ns = time.perf_counter_ns() - t0
        return SessionVerdict(outcome, ReasonCode(reason), counters,
                              mt_id=mt_id, cell_id=cell, zone_id=zone)

    def timed_out():
        world.advance(world.params.pending_ttl_ns)
        mt.pending = None
        return verdict(Outcome.TIMED_OUT, ReasonCode.TIMED_OUT)

    try:
        req = mt_initiate_auth(world, mt, zone, counters)
    except NoApInRange as exc:
        return verdict(Outcome.REJECTED_BY_MT, exc.reason)
    session_id = req.nonce.hex()
    req_bytes = wire_codec.encode_message(req)

    if sla is SlaMode.CENTRALIZED:
        if not world.transport.send(world, mt_id, "ns", req_bytes, cell, counters):
            return timed_out()
        try:
            ns_register_request(world, session_id)
        except Reject as exc:
            world.transport.send(world, "ns", mt_id,
                                 wire_codec.encode_message(
                                     wire_codec.Verdict(False, exc.reason)),
                                 cell, counters)
            mt.pending = None
            return verdict(Outcome.REJECTED_BY_NS, exc.reason)
        if not world.transport.send(world, "ns", "as", req_bytes, cell, counters):
            return timed_out()
    else:
        if not world.transport.send(world, mt_id, "as", req_bytes, cell, counters):
            return timed_out()

    as_req = wire_codec.decode_message(
        world.transport.transcript[-1].payload)
    try:
        _, out_msg, receiver = as_handle_request(world, as_req, cell, sla, counters)
    except Reject as exc:
        world.transport.send(world, "as", mt_id,
                             wire_codec.encode_message(
                                 wire_codec.Verdict(False, exc.reason)),
                             cell, counters)
        mt.pending = None
        return verdict(Outcome.REJECTED_BY_AS, exc.reason)

    if sla is SlaMode.CENTRALIZED:
        if not world.transport.send(world, "as", "ns",
                                    wire_codec.encode_message(out_msg), cell, counters):
            return timed_out()
        try:
            challenge = ns_forward_challenge(world, out_msg, session_id)
        except Reject as exc:
            mt.pending = None
            return verdict(Outcome.REJECTED_BY_NS, exc.reason)
        if not world.transport.send(world, "ns", mt_id,
                                    wire_codec.encode_message(challenge), cell, counters):
            return timed_out()
        challenger = "ns"
    else:
        if not world.transport.send(world, "as", mt_id,
                                    wire_codec.encode_message(out_msg), cell, counters):
            return timed_out()
        challenge = out_msg
        challenger = "as"

    try:
        rsp = mt_handle_challenge(world, mt, challenge, counters)
    except Reject as exc:
        mt.pending = None
        return verdict(Outcome.REJECTED_BY_MT, exc.reason)

    if sla is SlaMode.DECENTRALIZED:
        # The exchange ceases at step 2: network validated locally, nothing
        # further crosses the wire.
        return verdict(Outcome.MUTUAL_AUTH_SUCCESS, ReasonCode.OK)

    if not world.transport.send(world, mt_id, challenger,
                                wire_codec.encode_message(rsp), cell, counters):
        return timed_out()
    try:
        ns_verify(world, rsp, session_id)
    except Reject as exc:
        world.transport.send(world, "ns", mt_id,
                             wire_codec.encode_message(
                                 wire_codec.Verdict(False, exc.reason)),
                             cell, counters)
        return verdict(Outcome.REJECTED_BY_NS, exc.reason)
    world.transport.send(world, "ns", mt_id,
                         wire_codec.encode_message(wire_codec.Verdict(True)),
                         cell, counters)
    return verdict(Outcome.MUTUAL_AUTH_SUCCESS, ReasonCode.OK)


def run_handover_trace(world: World, mt_id: str, trace, sla: SlaMode = None) -> list:
    """Replay a mobility trace: cached zones hand over without any exchange."""
    verdicts = []
    mt = world.mts[mt_id]
    base = world.now_ns
    for entry in trace:
        world.advance_to(max(world.now_ns, base + entry.time_ns))
        world.place_mt(mt_id, entry.cell_id)
        zone = world.claimed_zone(entry.cell_id)
        if mt_fast_path(world, mt, zone) is not None:
            verdicts.append(SessionVerdict(
                Outcome.FAST_PATH_SUCCESS, ReasonCode.OK, CostCounters(),
                mt_id=mt_id, cell_id=entry.cell_id, zone_id=zone))
        else:
            verdicts.append(run_session(world, mt_id, sla))
    return verdicts


# ---------------------------------------------------------------------------
# Legacy baseline (insecure on purpose): the pre-shared key travels in clear.
# Exists solely so the key-recovery contrast is executable.
# ---------------------------------------------------------------------------

def legacy_key_for(world: World, mt_id: str) -> bytes:
    return radio_env.derive_bytes(world.seed, 16, "legacy-key", mt_id)


def parse_legacy_hello(payload: bytes):
    if len(payload) != 33 or payload[0] != LEGACY_HELLO_TAG:
        raise XLayerError("not a legacy hello")
    return payload[1:17], payload[17:33]


def run_legacy_session(world: World, mt_id: str, im: bytes = None,
                       k: bytes = None) -> SessionVerdict:
    """Conventional flow with the identity and key sent over the air."""
    t0 = time.perf_counter_ns()
    mt = world.mts[mt_id]
    counters = CostCounters()
    im = im if im is not None else mt.im
    k = k if k is not None else legacy_key_for(world, mt_id)
    world.as_state.legacy_keys.setdefault(im, k)

    hello = bytes([LEGACY_HELLO_TAG]) + im + k
    world.transport.send(world, mt_id, "as", hello, mt.current_cell_id, counters)
    got_im, got_k = parse_legacy_hello(hello)

    def verdict(outcome, reason):
        counters.wall_ns = time.perf_counter_ns() - t0
        return SessionVerdict(outcome, ReasonCode(reason), counters,
                              mt_id=mt_id, cell_id=mt.current_cell_id)

    if got_im not in world.as_state.enrolled:
        return verdict(Outcome.REJECTED_BY_AS, ReasonCode.UNKNOWN_IDENTITY)
    expected = world.as_state.legacy_keys[got_im]
    if got_k != expected:
        return verdict(Outcome.REJECTED_BY_AS, ReasonCode.DECRYPT_FAILED)
    last = world.as_state.sqn_issued.get(b"legacy" + got_im, 0)
    sqn = last + 1
    rand = world.rng.getrandbits(128).to_bytes(16, "big")
    av = crypto_aka.build_av(expected, sqn, world.params.amf, rand,
                             world.params.op, last_issued=last, counters=counters)
    world.as_state.sqn_issued[b"legacy" + got_im] = sqn
    world.as_state.legacy_pending[rand.hex()] = av.xres
    challenge = wire_codec.Challenge(av.rand, av.autn)
    world.transport.send(world, "as", mt_id,
                         wire_codec.encode_message(challenge),
                         mt.current_cell_id, counters)

    # The terminal side answers with the key it holds (possibly a stolen one).
    res = crypto_aka.f2(k, av.rand, world.params.op, counters)
    world.transport.send(world, mt_id, "as",
                         bytes([LEGACY_RES_TAG]) + res, mt.current_cell_id, counters)
    xres = world.as_state.legacy_pending.pop(rand.hex())
    if crypto_aka.verify_res(res, xres):
        return verdict(Outcome.MUTUAL_AUTH_SUCCESS, ReasonCode.OK)
    return verdict(Outcome.REJECTED_BY_NS, ReasonCode.RES_MISMATCH)
