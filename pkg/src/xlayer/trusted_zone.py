"""Radio trusted zones: the persisted radio map, cell-to-zone clustering,
nearest-neighbor matching over stored fingerprints, and the legitimacy
decision with its calibrated error threshold.

Matching is an exhaustive scan (dense vectorized, but index structures are
an implementation detail; equivalence with a brute-force scan is the
contract). Distances are Euclidean over strength values aligned by ap_id;
an AP present on only one side is imputed at the noise floor; arrival times
never enter the distance.
"""

import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .counters import count_knn
from .errors import AllImputed, RadioMapFormatError
from .radio_env import DEFAULT_NOISE_FLOOR_CDBM, sample_rss_vector, orientation_offsets, substream
from .wire_codec import RssReading, RssVector

RADIO_MAP_HEADER = "xlayer-radiomap v1"


@dataclass(frozen=True)
class RadioMapRecord:
    location: tuple
    orientation: int
    zone_id: int
    cell_id: int
    rss: RssVector


@dataclass(frozen=True)
class ZoneTable:
    """Total mapping of every cell to exactly one zone."""

    cell_to_zone: dict

    def zone_of(self, cell_id: int) -> int:
        return self.cell_to_zone[cell_id]

    def zones(self) -> dict:
        out = {}
        for cell, zone in sorted(self.cell_to_zone.items()):
            out.setdefault(zone, []).append(cell)
        return out

    def __len__(self):
        return len(self.cell_to_zone)


def build_zone_table(cells, cells_per_zone: int) -> ZoneTable:
    """Group cells into zones of ``cells_per_zone`` by ascending cell id.

    The trailing zone may end up smaller when the division is not exact;
    that degrades the one-auth-per-zone economy, so it is flagged.
    """
    cells = sorted(cells)
    if not cells:
        raise ValueError("cell list must be non-empty")
    if cells_per_zone < 2:
        raise ValueError("cells_per_zone must be >= 2 (a zone covers multiple cells)")
    table = {}
    for i, cell in enumerate(cells):
        table[cell] = i // cells_per_zone
    remainder = len(cells) % cells_per_zone
    if remainder:
        warnings.warn(
            f"last zone holds only {remainder} cell(s); zones should span "
            f"multiple cells", stacklevel=2)
    return ZoneTable(table)


@dataclass(frozen=True)
class NeighborHit:
    index: int
    distance: float
    record: RadioMapRecord


@dataclass(frozen=True)
class MatchResult:
    """Outcome of one query against the radio map."""

    k_dh: float
    neighbors: tuple
    matched_zone: int
    matched_location: tuple


class KnnIndex:
    """Dense strength matrix over the union of map APs, noise-floor imputed.

    APs absent from both the query and a record contribute zero to the
    distance, so the dense representation computes exactly the
    aligned-by-ap_id distance.
    """

    def __init__(self, db, noise_floor_cdbm: int = DEFAULT_NOISE_FLOOR_CDBM):
        if not db:
            raise ValueError("radio map must be non-empty")
        self.db = list(db)
        self.noise_floor_cdbm = noise_floor_cdbm
        ap_ids = sorted({r.ap_id for rec in self.db for r in rec.rss.readings})
        self._col = {ap: i for i, ap in enumerate(ap_ids)}
        self._matrix = np.full((len(self.db), len(ap_ids)), float(noise_floor_cdbm))
        for row, rec in enumerate(self.db):
            for r in rec.rss.readings:
                self._matrix[row, self._col[r.ap_id]] = float(r.rss_cdbm)
        self._known_aps = frozenset(ap_ids)

    def match(self, query: RssVector, k_neighbors: int, counters=None) -> MatchResult:
        if k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        q_aps = {r.ap_id for r in query.readings}
        if not q_aps & self._known_aps:
            raise AllImputed()
        count_knn(counters, len(self.db))

        floor = float(self.noise_floor_cdbm)
        qvec = np.full(self._matrix.shape[1], floor)
        extra = 0.0
        for r in query.readings:
            col = self._col.get(r.ap_id)
            if col is None:
                # AP unknown to the map: contributes the same imputed term
                # against every record.
                extra += float(r.rss_cdbm - floor) ** 2
            else:
                qvec[col] = float(r.rss_cdbm)
        dist = np.sqrt(((self._matrix - qvec) ** 2).sum(axis=1) + extra)

        order = np.argsort(dist, kind="stable")
        top = order[: min(k_neighbors, len(self.db))]
        neighbors = tuple(NeighborHit(int(i), float(dist[i]), self.db[int(i)]) for i in top)
        votes = Counter(h.record.zone_id for h in neighbors)
        best = max(votes.values())
        leaders = [z for z, c in votes.items() if c == best]
        matched_zone = leaders[0] if len(leaders) == 1 else neighbors[0].record.zone_id
        return MatchResult(
            k_dh=neighbors[0].distance,
            neighbors=neighbors,
            matched_zone=matched_zone,
            matched_location=neighbors[0].record.location,
        )


def knn_match(query: RssVector, db, k_neighbors: int = 3,
              noise_floor_cdbm: int = DEFAULT_NOISE_FLOOR_CDBM, counters=None) -> MatchResult:
    """One-shot match; builds a fresh index. Hot paths should hold a KnnIndex."""
    return KnnIndex(db, noise_floor_cdbm).match(query, k_neighbors, counters)


def zone_legitimacy(m: MatchResult, claimed_zone: int, epsilon: float) -> bool:
    """Accept iff the match is inside the error range and lands in the claimed zone."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return m.k_dh <= epsilon and m.matched_zone == claimed_zone


def format_radio_map(db) -> str:
    """Render the map in its persisted line format (header + one record per line)."""
    lines = [RADIO_MAP_HEADER]
    for rec in db:
        rss = ";".join(f"{r.ap_id}:{r.rss_cdbm}:{r.toa_ns}" for r in rec.rss.readings)
        lines.append(
            f"{rec.zone_id},{rec.cell_id},{rec.location[0]!r},{rec.location[1]!r},"
            f"{rec.orientation},{rss}")
    return "\n".join(lines) + "\n"


def parse_radio_map(text: str):
    lines = text.splitlines()
    if not lines or lines[0] != RADIO_MAP_HEADER:
        got = lines[0] if lines else "<empty>"
        raise RadioMapFormatError(f"bad header {got!r}, expected {RADIO_MAP_HEADER!r}", 1)
    db = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise RadioMapFormatError(f"expected 6 comma fields, got {len(parts)}", line_no)
        try:
            zone_id, cell_id = int(parts[0]), int(parts[1])
            loc = (float(parts[2]), float(parts[3]))
            orientation = int(parts[4])
            readings = []
            for chunk in parts[5].split(";"):
                ap, rss, toa = chunk.split(":")
                readings.append(RssReading(int(ap), int(rss), int(toa)))
            rec = RadioMapRecord(loc, orientation, zone_id, cell_id, RssVector(readings))
        except ValueError as exc:
            raise RadioMapFormatError(str(exc), line_no) from exc
        db.append(rec)
    return db


def save_radio_map(db, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_radio_map(db))


def load_radio_map(path):
    with open(path, "r", encoding="ascii") as fh:
        return parse_radio_map(fh.read())


@dataclass(frozen=True)
class EpsilonCalibration:
    """Result of the error-range sweep over legitimate same-location queries."""

    epsilon: float
    percentile: float
    samples: tuple

    @property
    def max_sample(self) -> float:
        return max(self.samples)


def calibrate_epsilon(db, aps, cfg, n_queries: int = 500, percentile: float = 99.0,
                      seed: int = 0, k_neighbors: int = 3) -> EpsilonCalibration:
    """Empirical error-range threshold: the given percentile of the nearest
    distance over fresh queries taken at mapped locations and orientations.

    The resulting threshold makes the false-reject rate explicit
    (1 - percentile/100 by construction).
    """
    if not db:
        raise ValueError("radio map must be non-empty")
    index = KnnIndex(db, cfg.noise_floor_cdbm)
    rng = substream(seed, "epsilon-calibration")
    samples = []
    for _ in range(n_queries):
        rec = db[rng.randrange(len(db))]
        offsets = orientation_offsets(cfg.seed, rec.orientation, aps)
        query = sample_rss_vector(rec.location, aps, cfg, rng, offsets)
        samples.append(index.match(query, k_neighbors).k_dh)
    eps = float(np.percentile(np.array(samples), percentile))
    return EpsilonCalibration(eps, percentile, tuple(samples))
