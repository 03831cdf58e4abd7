"""Acceptance suite: one criterion per test, one printed pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
complete. Every tolerance is pinned here; nothing is deferred to later
calibration.
"""

import random
import time

import numpy as np
import pytest

import oracle_crypto as oc
from xlayer import adversary as adv_mod
from xlayer import cli, cost_bench as cb, crypto_aka as ca, protocol_engine as pe
from xlayer import radio_env, trusted_zone, wire_codec
from xlayer.adversary import FULL_CAPS, run_attack


def report(num, name, ok, detail=""):
    line = f"[ACCEPTANCE {num}] {'PASS' if ok else 'FAIL'} {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


# -------------------------------------------------------------------------
# 1. Mutual-authentication completeness
# -------------------------------------------------------------------------

def test_criterion_1_mutual_auth_completeness():
    world = pe.build_world(1001)
    rng = random.Random(1001)
    cells = sorted(world.locations_by_cell)
    t0 = time.perf_counter()
    outcomes = []
    for i in range(1000):
        mt_id = f"mt{i % 4}"
        world.place_mt(mt_id, rng.choice(cells), rng)
        world.mts[mt_id].zone_cache.clear()
        sla = pe.SlaMode.CENTRALIZED if i % 2 else pe.SlaMode.DECENTRALIZED
        outcomes.append(pe.run_session(world, mt_id, sla))
    elapsed = time.perf_counter() - t0
    successes = sum(1 for v in outcomes if v.outcome is pe.Outcome.MUTUAL_AUTH_SUCCESS)
    report(1, "mutual-auth completeness: 1000 randomized sessions, both modes",
           successes == 1000 and elapsed < 10.0,
           f"{successes}/1000 succeeded in {elapsed:.2f}s (budget 10s)")


# -------------------------------------------------------------------------
# 2. Crypto oracle equivalence
# -------------------------------------------------------------------------

def test_criterion_2_crypto_oracle_equivalence():
    checks = []
    # published conformance vectors through both implementations
    k = bytes.fromhex("465b5ce8b199b49faa5f0a2ee238a6bc")
    rand = bytes.fromhex("23553cbe9637a89d218ae64dae47bf35")
    op = bytes.fromhex("cdc202d5123e20f62b6d676ac72cb318")
    sqn_b, amf = bytes.fromhex("ff9bb4d0b607"), bytes.fromhex("b9b9")
    want = oc.milenage(k, op, rand, sqn_b, amf)
    checks.append(ca.f1(k, rand, int.from_bytes(sqn_b, "big"), amf, op)
                  == want["mac_a"] == bytes.fromhex("4a9ffac354dfafb3"))
    checks.append(ca.f2(k, rand, op) == want["res"]
                  == bytes.fromhex("a54211d5e3ba50bf"))
    checks.append(ca.f3(k, rand, op) == want["ck"])
    checks.append(ca.f4(k, rand, op) == want["ik"])
    checks.append(ca.f5(k, rand, op) == want["ak"]
                  == bytes.fromhex("aa689c648370"))

    rng = random.Random(1002)
    for _ in range(100):
        rk, rr = rng.randbytes(16), rng.randbytes(16)
        rsqn, ramf, rop = rng.getrandbits(48), rng.randbytes(2), rng.randbytes(16)
        got = ca.build_av(rk, rsqn, ramf, rr, rop)
        want_av = oc.build_av(rk, rsqn, ramf, rr, rop)
        checks.append((got.xres, got.ck, got.ik, got.autn) == (
            want_av["xres"], want_av["ck"], want_av["ik"], want_av["autn"]))
        im = rng.randbytes(16)
        checks.append(ca.mask_im(im, rk) == ca.xor_bytes(im, oc.cmac(rk, b"tim-mask")))
        tim, nonce = rng.randbytes(16), rng.randbytes(12)
        checks.append(ca.encrypt_tim(tim, rk, nonce)
                      == oc.gcm_encrypt(oc.cmac(rk, b"tim-enc"), nonce, tim))
    report(2, "crypto oracle equivalence: f1-f5, AV, mask, AEAD bit-exact",
           all(checks), f"{len(checks)} bit-exact comparisons")


# -------------------------------------------------------------------------
# 3. k-NN brute-force equivalence on the full-scale map
# -------------------------------------------------------------------------

def _exhaustive_scan(db, floor):
    """Independent dense exhaustive scan used as the matching oracle."""
    universe = sorted({r.ap_id for rec in db for r in rec.rss.readings})
    col = {ap: i for i, ap in enumerate(universe)}
    rows = np.array(
        [[dict((r.ap_id, r.rss_cdbm) for r in rec.rss.readings).get(ap, floor)
          for ap in universe] for rec in db], dtype=float)

    def scan(query, k_neighbors):
        q = np.full(len(universe), float(floor))
        extra = 0.0
        for r in query.readings:
            if r.ap_id in col:
                q[col[r.ap_id]] = float(r.rss_cdbm)
            else:
                extra += float(r.rss_cdbm - floor) ** 2
        d = np.sqrt(((rows - q) ** 2).sum(axis=1) + extra)
        order = np.argsort(d, kind="stable")[:k_neighbors]
        votes = {}
        for i in order:
            z = db[int(i)].zone_id
            votes[z] = votes.get(z, 0) + 1
        best = max(votes.values())
        leaders = [z for z, c in votes.items() if c == best]
        zone = leaders[0] if len(leaders) == 1 else db[int(order[0])].zone_id
        return ([int(i) for i in order], float(d[order[0]]), zone,
                db[int(order[0])].location)

    return scan


def test_criterion_3_knn_equivalence_7000_records():
    seed = 1003
    cfg = radio_env.EnvironmentConfig(shadowing_sigma_cdbm=400, seed=seed)
    layout = radio_env.CellLayout(16, 200.0)
    aps = layout.access_points()
    zone_table = trusted_zone.build_zone_table([ap.cell_id for ap in aps], 4)
    raw = radio_env.synthesize_radio_map(
        layout.map_grid(70), 4, 25, aps, cfg, radio_env.substream(seed, "map"))
    db = [trusted_zone.RadioMapRecord(
        pos, o, zone_table.zone_of(layout.cell_of(pos)), layout.cell_of(pos), vec)
        for pos, o, vec in raw]
    assert len(db) == 7000

    rng = random.Random(seed)
    queries = []
    for _ in range(500):
        ids = sorted(rng.sample(range(1, 17), rng.randint(4, 16)))
        queries.append(wire_codec.RssVector(
            wire_codec.RssReading(i, rng.randint(-11000, -4000), 5) for i in ids))

    index = trusted_zone.KnnIndex(db, cfg.noise_floor_cdbm)
    oracle = _exhaustive_scan(db, cfg.noise_floor_cdbm)
    t0 = time.perf_counter()
    mismatches = 0
    for q in queries:
        for k_n in (1, 3, 5):
            got = index.match(q, k_n)
            want_idx, want_kdh, want_zone, want_loc = oracle(q, k_n)
            if ([h.index for h in got.neighbors] != want_idx
                    or got.k_dh != want_kdh
                    or got.matched_zone != want_zone
                    or got.matched_location != want_loc):
                mismatches += 1
    elapsed = time.perf_counter() - t0
    report(3, "k-NN equals exhaustive scan: 500 queries x K in {1,3,5} on 7000 records",
           mismatches == 0 and elapsed < 5.0,
           f"{mismatches} mismatches, {elapsed:.2f}s (budget 5s)")


# -------------------------------------------------------------------------
# 4. Security contrast
# -------------------------------------------------------------------------

def test_criterion_4_security_contrast():
    legacy = run_attack("legacy-key-recovery", 1000, 1004)
    replay = run_attack("replay", 1000, 1004)
    mitm = run_attack("mitm", 1000, 1004)
    unsolicited = run_attack("impersonation-case2", 1000, 1004)

    # byte-scan: fingerprint and session keys absent from a mixed transcript
    world = pe.build_world(1004)
    rng = random.Random(1004)
    secrets = []
    for i in range(200):
        mt_id = f"mt{i % 4}"
        world.place_mt(mt_id, rng.choice(sorted(world.locations_by_cell)), rng)
        mt = world.mts[mt_id]
        mt.zone_cache.clear()
        sla = pe.SlaMode.CENTRALIZED if i % 2 else pe.SlaMode.DECENTRALIZED
        v = pe.run_session(world, mt_id, sla)
        assert v.ok
        zone = world.claimed_zone(mt.current_cell_id)
        cache = mt.zone_cache[zone]
        k = pe.fingerprint.fingerprint_from_vector(world.sample_mt_vector(mt)).key
        secrets.extend((k, cache.ck, cache.ik))
    blob = b"".join(e.payload for e in world.transport.transcript)
    leaks = sum(1 for s in secrets if s in blob)

    ok = (legacy.successes == 1000 and replay.successes == 0
          and mitm.successes == 0 and unsolicited.successes == 0 and leaks == 0)
    report(4, "security contrast: legacy 1000/1000 broken; cross-layer 0/1000 "
              "for replay, tamper/MITM, unsolicited; no key bytes on wire",
           ok,
           f"legacy={legacy.successes}/1000 replay={replay.successes} "
           f"mitm={mitm.successes} unsolicited={unsolicited.successes} leaks={leaks}")


# -------------------------------------------------------------------------
# 5. Location-spoof bound with calibrated epsilon
# -------------------------------------------------------------------------

def test_criterion_5_location_spoof_bound():
    world = adv_mod._spoof_world(1005, 1000)
    calibration = trusted_zone.calibrate_epsilon(
        world.db, world.aps, world.cfg, seed=1005,
        k_neighbors=world.params.k_neighbors)
    # the deliverable sweep: the pinned threshold is the 99th percentile of
    # legitimate same-location distances in this world
    pinned = max(calibration.epsilon, 1.0)
    assert abs(world.params.epsilon - pinned) < 1e-9
    result = adv_mod.attack_location_spoof(world, FULL_CAPS, 1000)
    ok = (result.details["standoff_m"] >= 200.0
          and result.successes <= 10)
    report(5, "location spoof: calibrated epsilon (p99), adversary >= 200 m out, "
              "acceptance <= 1%",
           ok,
           f"epsilon={pinned:.0f} cdBm, standoff={result.details['standoff_m']} m, "
           f"accepted {result.successes}/1000")


# -------------------------------------------------------------------------
# 6. Cost-trend reproduction
# -------------------------------------------------------------------------

def test_criterion_6_cost_trend():
    table = cb.run_comparison(cell_counts=(2, 4, 8, 16), seed=1006)
    checks = []
    gaps = []
    for cells in (2, 4, 8, 16):
        nz = table.row(cb.Approach.CROSS_LAYER_NO_ZONES, cells)
        z = table.row(cb.Approach.CROSS_LAYER_ZONES, cells)
        crypto = table.row(cb.Approach.CRYPTO_ONLY, cells)
        nocrypto = table.row(cb.Approach.NON_CRYPTO, cells)
        checks.append(nz.scalar_compute_cost() > crypto.scalar_compute_cost() > 0)
        checks.append(nz.scalar_compute_cost() > nocrypto.scalar_compute_cost())
        for field in ("cipher_block_ops", "prf_calls", "knn_distance_evals",
                      "messages_sent", "bytes_sent"):
            checks.append(getattr(nz.counters, field) >= getattr(crypto.counters, field))
            checks.append(getattr(nz.counters, field) >= getattr(nocrypto.counters, field))
            checks.append(getattr(z.counters, field) <= getattr(nz.counters, field))
        # zone-cache economy is exact
        zones = len({zid for zid in
                     pe.build_world(1006, pe.WorldConfig(n_cells=cells,
                                                         cells_per_zone=min(4, max(2, cells))))
                     .zone_table.cell_to_zone.values()})
        checks.append(z.full_auths == zones and z.fast_paths == cells - zones)
        gaps.append(nz.scalar_compute_cost() - crypto.scalar_compute_cost())
    checks.append(gaps == sorted(gaps))
    report(6, "cost trend: NoZones > CryptoOnly, NoZones > NonCrypto, "
              "Zones < NoZones, gap non-decreasing, zone economy exact",
           all(checks), f"gaps={gaps}")


# -------------------------------------------------------------------------
# 7. DoS boundedness
# -------------------------------------------------------------------------

@pytest.mark.parametrize("case", [1, 2])
def test_criterion_7_dos_boundedness(case):
    world = pe.build_world(1007)
    n_flood = 10 * world.params.half_open_capacity
    result = adv_mod.attack_dos_flood(world, FULL_CAPS, case, n_flood)
    d = result.details
    ok = (d["table_peak"] <= d["capacity"]
          and d["unpurged_after_deadline"] == 0
          and d["max_purge_lag_ns"] == 0
          and d["legit_after_flood"] == "MutualAuthSuccess")
    report(7, f"DoS case {case}: 10x capacity flood bounded, purged on deadline, "
              "legitimate session completes",
           ok,
           f"peak={d['table_peak']}/{d['capacity']} purge_lag={d['max_purge_lag_ns']}ns "
           f"refusals={d['capacity_refusals']} legit_after={d['legit_after_flood']}")


# -------------------------------------------------------------------------
# 8. CLI determinism
# -------------------------------------------------------------------------

def _run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_criterion_8_cli_determinism(tmp_path, capsys):
    results = {}

    map_a, map_b = tmp_path / "a.map", tmp_path / "b.map"
    gen_args = ["--seed", "1008", "--grid-points", "8", "--orientations", "2",
                "--samples", "2"]
    _, out_a = _run_cli(capsys, "gen-map", "--out", str(map_a), *gen_args)
    _, out_b = _run_cli(capsys, "gen-map", "--out", str(map_b), *gen_args)
    results["gen-map"] = (map_a.read_bytes() == map_b.read_bytes()
                          and out_a.replace(str(map_a), "") == out_b.replace(str(map_b), ""))

    _, auth_a = _run_cli(capsys, "run-auth", "--seed", "1008", "--trace-cells", "6")
    _, auth_b = _run_cli(capsys, "run-auth", "--seed", "1008", "--trace-cells", "6")
    results["run-auth"] = auth_a == auth_b

    atk = ["attack", "--scenario", "replay", "--n", "25", "--seed", "1008"]
    _, atk_a = _run_cli(capsys, *atk)
    _, atk_b = _run_cli(capsys, *atk)
    results["attack"] = atk_a == atk_b

    csv_a, csv_b = tmp_path / "a.csv", tmp_path / "b.csv"
    bench_args = ["--cells", "2,4", "--seed", "1008", "--entropy-positions", "40"]
    _, ba = _run_cli(capsys, "bench", "--out", str(csv_a), *bench_args)
    _, bb = _run_cli(capsys, "bench", "--out", str(csv_b), *bench_args)

    def strip_wall(text):
        return [",".join(line.split(",")[:-1]) for line in text.splitlines()]

    results["bench"] = (strip_wall(csv_a.read_text()) == strip_wall(csv_b.read_text())
                        and ba.replace(str(csv_a), "") == bb.replace(str(csv_b), ""))

    report(8, "CLI determinism: every subcommand byte-reproducible under a fixed "
              "seed (wall-clock column excluded)",
           all(results.values()),
           " ".join(f"{k}={'ok' if v else 'DIFFERS'}" for k, v in results.items()))
