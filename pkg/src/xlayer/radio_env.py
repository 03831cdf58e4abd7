"""Seedable radio environment: log-distance path loss with log-normal
shadowing, time-of-arrival, radio-map synthesis and mobility traces.

Everything is deterministic given a seed. Randomness is drawn either from an
explicitly passed ``random.Random`` stream or from hash-derived substreams,
so concurrent callers never share generator state and per-orientation
offsets can be recomputed independently of call order.
"""

import hashlib
import math
import random
from dataclasses import dataclass

from .errors import NoApInRange
from .wire_codec import RSS_MAX_CDBM, RssReading, RssVector

SPEED_OF_LIGHT_M_PER_NS = 0.299792458

DEFAULT_NOISE_FLOOR_CDBM = -11000
DEFAULT_TX_POWER_CDBM = 2000

ORIENTATION_OFFSET_RANGE_CDBM = 300


def substream(seed: int, *parts) -> random.Random:
    """Independent deterministic RNG stream named by (seed, parts)."""
    tag = repr((int(seed),) + tuple(parts)).encode()
    return random.Random(int.from_bytes(hashlib.sha256(tag).digest()[:8], "big"))


def derive_bytes(seed: int, n: int, *parts) -> bytes:
    """n deterministic bytes named by (seed, parts); used for identities and keys."""
    tag = repr((int(seed),) + tuple(parts)).encode()
    out = b""
    counter = 0
    while len(out) < n:
        out += hashlib.sha256(tag + counter.to_bytes(4, "big")).digest()
        counter += 1
    return out[:n]


@dataclass(frozen=True)
class AccessPoint:
    ap_id: int
    position: tuple
    tx_power_cdbm: int = DEFAULT_TX_POWER_CDBM
    cell_id: int = 0

    def __post_init__(self):
        if self.tx_power_cdbm > 3000:
            raise ValueError("tx_power_cdbm must be <= 3000 (30 dBm)")


@dataclass(frozen=True)
class EnvironmentConfig:
    path_loss_exponent: float = 3.0
    reference_distance_m: float = 1.0
    reference_loss_cdbm: int = 4000
    shadowing_sigma_cdbm: int = 400
    toa_jitter_ns: int = 50
    noise_floor_cdbm: int = DEFAULT_NOISE_FLOOR_CDBM
    seed: int = 0

    def __post_init__(self):
        if not 1.5 <= self.path_loss_exponent <= 6.0:
            raise ValueError("path_loss_exponent must be in [1.5, 6]")
        if self.shadowing_sigma_cdbm < 0:
            raise ValueError("shadowing_sigma_cdbm must be >= 0")
        if self.reference_distance_m <= 0:
            raise ValueError("reference_distance_m must be positive")


@dataclass(frozen=True)
class TraceEntry:
    time_ns: int
    position: tuple
    cell_id: int
    zone_id: int


@dataclass(frozen=True)
class MobilityTrace:
    entries: tuple

    def __init__(self, entries):
        object.__setattr__(self, "entries", tuple(entries))
        times = [e.time_ns for e in self.entries]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("trace times must be strictly increasing")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def rss_at(pos, ap: AccessPoint, cfg: EnvironmentConfig, rng: random.Random) -> RssReading:
    """One reading at ``pos`` from ``ap``: path loss, shadowing, arrival time.

    The returned strength is clamped into [noise floor, 0]; a reading at
    exactly the noise floor means the AP is out of radio range.
    """
    d = _distance(pos, ap.position)
    if d <= 0:
        raise ValueError("zero distance between receiver and access point")
    loss = cfg.reference_loss_cdbm + 1000.0 * cfg.path_loss_exponent * math.log10(
        d / cfg.reference_distance_m
    )
    rss = ap.tx_power_cdbm - loss
    if cfg.shadowing_sigma_cdbm > 0:
        rss += rng.gauss(0.0, cfg.shadowing_sigma_cdbm)
    rss_cdbm = min(RSS_MAX_CDBM, max(cfg.noise_floor_cdbm, round(rss)))
    toa = d / SPEED_OF_LIGHT_M_PER_NS
    if cfg.toa_jitter_ns > 0:
        toa += rng.uniform(0.0, cfg.toa_jitter_ns)
    return RssReading(ap.ap_id, rss_cdbm, max(1, round(toa)))


def sample_rss_vector(pos, aps, cfg: EnvironmentConfig, rng: random.Random,
                      ap_offsets: dict = None) -> RssVector:
    """Readings from every in-range AP, sorted by ap_id.

    ``ap_offsets`` maps ap_id to a deterministic per-orientation strength
    offset in centi-dBm, applied before the range cut.
    """
    if not aps:
        raise ValueError("aps must be non-empty")
    readings = []
    for ap in sorted(aps, key=lambda a: a.ap_id):
        r = rss_at(pos, ap, cfg, rng)
        rss = r.rss_cdbm
        if ap_offsets:
            rss = min(RSS_MAX_CDBM, max(cfg.noise_floor_cdbm, rss + ap_offsets.get(ap.ap_id, 0)))
        if rss > cfg.noise_floor_cdbm:
            readings.append(RssReading(r.ap_id, rss, r.toa_ns))
    if not readings:
        raise NoApInRange(f"no AP in range at position {pos}")
    return RssVector(readings)


def orientation_offsets(seed: int, orientation: int, aps) -> dict:
    """Deterministic per-AP strength offset for one receiver orientation."""
    out = {}
    for ap in aps:
        r = substream(seed, "orientation", orientation, ap.ap_id)
        out[ap.ap_id] = round(r.uniform(-ORIENTATION_OFFSET_RANGE_CDBM,
                                        ORIENTATION_OFFSET_RANGE_CDBM))
    return out


def synthesize_radio_map(grid, orientations: int, samples_per_combo: int, aps,
                         cfg: EnvironmentConfig, rng: random.Random):
    """Sampled RSS dataset over |grid| x orientations x samples_per_combo.

    Returns (position, orientation, RssVector) tuples in deterministic
    row-major order. Orientation offsets derive from cfg.seed, so later
    queries can reproduce them without replaying this call.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    if orientations < 1 or samples_per_combo < 1:
        raise ValueError("orientations and samples_per_combo must be >= 1")
    offsets = {o: orientation_offsets(cfg.seed, o, aps) for o in range(orientations)}
    records = []
    for pos in grid:
        for o in range(orientations):
            for _ in range(samples_per_combo):
                records.append((pos, o, sample_rss_vector(pos, aps, cfg, rng, offsets[o])))
    return records


def generate_mobility_trace(cell_zone, cells_visited: int, dwell_ns: int,
                            rng: random.Random, cell_positions: dict = None) -> MobilityTrace:
    """Trace visiting ``cells_visited`` distinct cells, zone by zone.

    Zone visit order is shuffled by the stream; cells inside a zone are
    visited in ascending id order. ``cell_positions`` supplies the receiver
    position per cell (defaults to the origin).
    """
    if cells_visited < 1:
        raise ValueError("cells_visited must be >= 1")
    if dwell_ns < 1:
        raise ValueError("dwell_ns must be >= 1")
    if cells_visited > len(cell_zone):
        raise ValueError(
            f"requested {cells_visited} cells but environment has {len(cell_zone)}")
    zones = {}
    for cell, zone in sorted(cell_zone.items()):
        zones.setdefault(zone, []).append(cell)
    zone_order = sorted(zones)
    rng.shuffle(zone_order)
    ordered_cells = [c for z in zone_order for c in zones[z]][:cells_visited]
    entries = []
    for i, cell in enumerate(ordered_cells):
        pos = cell_positions.get(cell, (0.0, 0.0)) if cell_positions else (0.0, 0.0)
        entries.append(TraceEntry((i + 1) * dwell_ns, pos, cell, cell_zone[cell]))
    return MobilityTrace(entries)


@dataclass(frozen=True)
class CellLayout:
    """Square-ish grid of small cells, one AP at each cell center."""

    n_cells: int = 16
    cell_size_m: float = 200.0
    tx_power_cdbm: int = DEFAULT_TX_POWER_CDBM

    def columns(self) -> int:
        return math.ceil(math.sqrt(self.n_cells))

    def access_points(self) -> list:
        cols = self.columns()
        aps = []
        for i in range(self.n_cells):
            row, col = divmod(i, cols)
            center = ((col + 0.5) * self.cell_size_m, (row + 0.5) * self.cell_size_m)
            aps.append(AccessPoint(ap_id=i + 1, position=center,
                                   tx_power_cdbm=self.tx_power_cdbm, cell_id=i + 1))
        return aps

    def bounds(self) -> tuple:
        cols = self.columns()
        rows = math.ceil(self.n_cells / cols)
        return (cols * self.cell_size_m, rows * self.cell_size_m)

    def cell_of(self, pos) -> int:
        """Cell whose AP is nearest to pos (grid cells are AP Voronoi regions)."""
        aps = self.access_points()
        return min(aps, key=lambda a: (_distance(pos, a.position), a.ap_id)).cell_id

    def map_grid(self, n_points: int) -> list:
        """n_points lattice positions spread over the covered area, row-major.

        Points are offset from cell centers so no position coincides with an
        access point.
        """
        if n_points < 1:
            raise ValueError("n_points must be >= 1")
        width, height = self.bounds()
        cols = math.ceil(math.sqrt(n_points))
        rows = math.ceil(n_points / cols)
        pts = []
        for r in range(rows):
            for c in range(cols):
                if len(pts) == n_points:
                    break
                pts.append((
                    (c + 0.5) * width / cols + 1.0,
                    (r + 0.5) * height / rows + 1.0,
                ))
        return pts

    def points_in_cell(self, cell_id: int, n_points: int) -> list:
        """n_points positions inside one cell, offset from the AP center."""
        ap = self.access_points()[cell_id - 1]
        cx, cy = ap.position
        quarter = self.cell_size_m / 4.0
        corners = [(-1, -1), (1, -1), (-1, 1), (1, 1)]
        pts = []
        for i in range(n_points):
            dx, dy = corners[i % 4]
            shrink = 1.0 + i // 4
            pts.append((cx + dx * quarter / shrink, cy + dy * quarter / shrink))
        return pts
