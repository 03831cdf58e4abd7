"""FastAPI service exposing the toolkit's operations.

Endpoints wrap the core package one-to-one; every request carries its own
seed and parameters, so responses are deterministic (wall-clock fields
aside) and the service holds no hidden state between calls.
"""

from typing import Dict, List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, adversary, cost_bench, protocol_engine as pe, radio_env, trusted_zone


class EnvConfigModel(BaseModel):
    path_loss_exponent: float = 3.0
    reference_distance_m: float = 1.0
    reference_loss_cdbm: int = 4000
    shadowing_sigma_cdbm: int = 400
    toa_jitter_ns: int = 50
    noise_floor_cdbm: int = radio_env.DEFAULT_NOISE_FLOOR_CDBM

    def to_config(self, seed: int) -> radio_env.EnvironmentConfig:
        return radio_env.EnvironmentConfig(seed=seed, **self.model_dump())


class GenMapRequest(BaseModel):
    seed: int = 0
    grid_points: int = Field(70, ge=1)
    orientations: int = Field(4, ge=1)
    samples_per_combo: int = Field(25, ge=1)
    n_cells: int = Field(16, ge=1)
    cells_per_zone: int = Field(4, ge=2)
    cell_size_m: float = 200.0
    env: EnvConfigModel = EnvConfigModel()


class GenMapResponse(BaseModel):
    records: int
    combinations: int
    samples_per_combo: int
    map_text: str


class RunAuthRequest(BaseModel):
    seed: int = 0
    sla: str = Field("centralized", pattern="^(centralized|decentralized)$")
    trace_cells: int = Field(8, ge=1)
    drop_rate: float = Field(0.0, ge=0.0, le=1.0)
    n_cells: int = Field(16, ge=1)
    cells_per_zone: int = Field(4, ge=2)
    shadowing_sigma_cdbm: int = Field(0, ge=0)
    sqn_window: int = Field(32, ge=1)
    k_neighbors: int = Field(3, ge=1)
    epsilon: Optional[float] = None
    freshness_window_ns: int = 2_000_000_000
    half_open_capacity: int = Field(64, ge=1)
    cache_ttl_ns: int = 3_600_000_000_000
    map_text: Optional[str] = None


class VerdictLine(BaseModel):
    session: int
    cell: int
    zone: int
    outcome: str
    reason: str


class RunAuthResponse(BaseModel):
    verdicts: List[VerdictLine]
    summary: Dict[str, int]
    epsilon: float
    sla: str


class AttackRequest(BaseModel):
    scenario: str
    n: int = Field(100, ge=1)
    seed: int = 0
    observe_wire: bool = True
    inject: bool = True
    delay_replay: bool = True
    spoof_im: bool = True
    recompute_fingerprint: bool = False


class AttackResponse(BaseModel):
    scenario: str
    attempts: int
    successes: int
    success_rate: float
    success_criterion: str
    transcript_digest: str
    details: Dict


class BenchRequest(BaseModel):
    approaches: List[str] = [a.value for a in cost_bench.DEFAULT_APPROACHES]
    cells: List[int] = list(cost_bench.DEFAULT_CELL_COUNTS)
    seed: int = 0
    cells_per_zone: int = Field(4, ge=2)
    sla: str = Field("centralized", pattern="^(centralized|decentralized)$")


class BenchRow(BaseModel):
    approach: str
    cells: int
    cipher_block_ops: int
    prf_calls: int
    knn_distance_evals: int
    messages: int
    bytes: int
    wall_ns: int
    full_auths: int
    fast_paths: int


class BenchResponse(BaseModel):
    rows: List[BenchRow]
    csv_text: str


class EntropyRequest(BaseModel):
    seed: int = 0
    sample_positions: int = Field(1000, ge=1)
    n_cells: int = Field(16, ge=1)
    cell_size_m: float = 200.0
    env: EnvConfigModel = EnvConfigModel()


class EntropyResponse(BaseModel):
    n_positions: int
    distinct_values: int
    shannon_bits: float
    sigma_cdbm: int
    distribution: Dict[int, int]


def create_app() -> FastAPI:
    app = FastAPI(title="xlayer", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/radio-map", response_model=GenMapResponse)
    def gen_map(req: GenMapRequest):
        cfg = req.env.to_config(req.seed)
        layout = radio_env.CellLayout(req.n_cells, req.cell_size_m)
        aps = layout.access_points()
        zone_table = trusted_zone.build_zone_table(
            [ap.cell_id for ap in aps], req.cells_per_zone)
        grid = layout.map_grid(req.grid_points)
        rng = radio_env.substream(req.seed, "radio-map")
        raw = radio_env.synthesize_radio_map(
            grid, req.orientations, req.samples_per_combo, aps, cfg, rng)
        db = []
        for pos, orientation, vec in raw:
            cell = layout.cell_of(pos)
            db.append(trusted_zone.RadioMapRecord(
                pos, orientation, zone_table.zone_of(cell), cell, vec))
        return GenMapResponse(
            records=len(db),
            combinations=req.grid_points * req.orientations,
            samples_per_combo=req.samples_per_combo,
            map_text=trusted_zone.format_radio_map(db),
        )

    @app.post("/auth/run", response_model=RunAuthResponse)
    def run_auth(req: RunAuthRequest):
        params = pe.RunParams(
            sla=pe.SlaMode(req.sla),
            sqn_window=req.sqn_window,
            k_neighbors=req.k_neighbors,
            epsilon=req.epsilon,
            freshness_window_ns=req.freshness_window_ns,
            half_open_capacity=req.half_open_capacity,
            cache_ttl_ns=req.cache_ttl_ns,
            drop_rate=req.drop_rate,
        )
        cfg = pe.WorldConfig(n_cells=req.n_cells, cells_per_zone=req.cells_per_zone,
                             shadowing_sigma_cdbm=req.shadowing_sigma_cdbm)
        try:
            world = pe.build_world(req.seed, cfg, params)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if req.map_text is not None:
            try:
                world.attach_radio_map(trusted_zone.parse_radio_map(req.map_text))
            except (ValueError, KeyError) as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            if req.epsilon is None:
                # Re-anchor the error range: sessions will query this map with
                # the world's channel, whatever noise the map itself carries.
                cal = trusted_zone.calibrate_epsilon(
                    world.db, world.aps, world.cfg, seed=req.seed,
                    k_neighbors=req.k_neighbors)
                world.params.epsilon = max(cal.epsilon, 1.0)
        try:
            trace = radio_env.generate_mobility_trace(
                world.zone_table.cell_to_zone, req.trace_cells, 1_000_000_000,
                radio_env.substream(req.seed, "trace"),
                {c: combos[0][0] for c, combos in world.locations_by_cell.items()})
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        verdicts = pe.run_handover_trace(world, "mt0", trace)
        lines = [VerdictLine(session=i, cell=v.cell_id, zone=v.zone_id,
                             outcome=v.outcome.value, reason=v.reason.name)
                 for i, v in enumerate(verdicts)]
        summary = {}
        for v in verdicts:
            summary[v.outcome.value] = summary.get(v.outcome.value, 0) + 1
        return RunAuthResponse(verdicts=lines, summary=dict(sorted(summary.items())),
                               epsilon=world.params.epsilon, sla=req.sla)

    @app.post("/attack", response_model=AttackResponse)
    def attack(req: AttackRequest):
        caps = adversary.AdversaryCapabilities(
            observe_wire=req.observe_wire,
            inject=req.inject,
            delay_replay=req.delay_replay,
            spoof_im=req.spoof_im,
            recompute_fingerprint=req.recompute_fingerprint,
        )
        try:
            report = adversary.run_attack(req.scenario, req.n, req.seed, caps)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return AttackResponse(
            scenario=report.scenario,
            attempts=report.attempts,
            successes=report.successes,
            success_rate=report.success_rate,
            success_criterion=report.success_criterion,
            transcript_digest=report.transcript_digest,
            details=report.details,
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest):
        try:
            table = cost_bench.run_comparison(
                approaches=req.approaches, cell_counts=req.cells, seed=req.seed,
                cells_per_zone=req.cells_per_zone, sla=pe.SlaMode(req.sla))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        rows = [BenchRow(
            approach=r.approach.value, cells=r.cells,
            cipher_block_ops=r.counters.cipher_block_ops,
            prf_calls=r.counters.prf_calls,
            knn_distance_evals=r.counters.knn_distance_evals,
            messages=r.counters.messages_sent,
            bytes=r.counters.bytes_sent,
            wall_ns=r.counters.wall_ns,
            full_auths=r.full_auths,
            fast_paths=r.fast_paths,
        ) for r in table.rows]
        return BenchResponse(rows=rows, csv_text=cost_bench.format_csv(table))

    @app.post("/entropy", response_model=EntropyResponse)
    def entropy(req: EntropyRequest):
        cfg = req.env.to_config(req.seed)
        aps = radio_env.CellLayout(req.n_cells, req.cell_size_m).access_points()
        report = cost_bench.key_entropy_report(
            aps, cfg, req.sample_positions, seed=req.seed)
        return EntropyResponse(
            n_positions=report.n_positions,
            distinct_values=report.distinct_values,
            shannon_bits=report.shannon_bits,
            sigma_cdbm=report.sigma_cdbm,
            distribution=report.distribution,
        )

    return app


app = create_app()
