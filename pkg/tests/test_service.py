"""HTTP surface: every endpoint, validation, and seed determinism."""

import hashlib

import pytest
from fastapi.testclient import TestClient

from xlayer.service import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


class TestHealth:
    def test_health(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json()["status"] == "ok"


class TestRadioMapEndpoint:
    def test_default_shape_is_paper_scale(self, client):
        resp = client.post("/radio-map", json={"seed": 5})
        assert resp.status_code == 200
        data = resp.json()
        assert data["records"] == 7000
        assert data["combinations"] == 280
        assert data["samples_per_combo"] == 25
        assert data["map_text"].startswith("xlayer-radiomap v1\n")

    def test_seed_determinism(self, client):
        small = {"seed": 9, "grid_points": 6, "orientations": 2,
                 "samples_per_combo": 2}
        a = client.post("/radio-map", json=small).json()["map_text"]
        b = client.post("/radio-map", json=small).json()["map_text"]
        assert hashlib.sha256(a.encode()).digest() == hashlib.sha256(b.encode()).digest()

    def test_different_seed_differs(self, client):
        small = {"grid_points": 4, "orientations": 1, "samples_per_combo": 1}
        a = client.post("/radio-map", json=dict(small, seed=1)).json()["map_text"]
        b = client.post("/radio-map", json=dict(small, seed=2)).json()["map_text"]
        assert a != b

    def test_validation(self, client):
        assert client.post("/radio-map", json={"grid_points": 0}).status_code == 422


class TestAuthEndpoint:
    def test_run_and_summary(self, client):
        resp = client.post("/auth/run", json={"seed": 6, "trace_cells": 8})
        assert resp.status_code == 200
        data = resp.json()
        assert len(data["verdicts"]) == 8
        total = sum(data["summary"].values())
        assert total == 8
        assert data["summary"].get("MutualAuthSuccess", 0) >= 1
        assert data["summary"].get("FastPathSuccess", 0) >= 1

    def test_decentralized_mode(self, client):
        resp = client.post("/auth/run",
                           json={"seed": 6, "sla": "decentralized",
                                 "trace_cells": 4})
        assert resp.status_code == 200
        assert resp.json()["sla"] == "decentralized"

    def test_with_generated_map(self, client):
        gen = client.post("/radio-map", json={
            "seed": 8, "grid_points": 16, "orientations": 2,
            "samples_per_combo": 3, "n_cells": 8}).json()
        resp = client.post("/auth/run", json={
            "seed": 8, "trace_cells": 4, "n_cells": 8,
            "map_text": gen["map_text"]})
        assert resp.status_code == 200
        summary = resp.json()["summary"]
        assert sum(summary.values()) == 4

    def test_bad_map_rejected(self, client):
        resp = client.post("/auth/run", json={"seed": 1, "map_text": "garbage"})
        assert resp.status_code == 422

    def test_too_many_trace_cells(self, client):
        resp = client.post("/auth/run", json={"seed": 1, "n_cells": 4,
                                              "trace_cells": 99})
        assert resp.status_code == 422


class TestAttackEndpoint:
    def test_replay_attack(self, client):
        resp = client.post("/attack", json={"scenario": "replay", "n": 10,
                                            "seed": 4})
        assert resp.status_code == 200
        data = resp.json()
        assert data["successes"] == 0
        assert data["attempts"] == 10

    def test_unknown_scenario(self, client):
        resp = client.post("/attack", json={"scenario": "nope", "n": 1})
        assert resp.status_code == 422

    def test_capability_flags_passed_through(self, client):
        resp = client.post("/attack", json={
            "scenario": "legacy-key-recovery", "n": 5, "seed": 4,
            "observe_wire": False})
        assert resp.json()["successes"] == 0


class TestBenchEndpoint:
    def test_rows_and_csv(self, client):
        resp = client.post("/bench", json={"cells": [2, 4], "seed": 3})
        assert resp.status_code == 200
        data = resp.json()
        assert len(data["rows"]) == 8
        lines = data["csv_text"].splitlines()
        assert len(lines) == 9
        assert lines[0].startswith("approach,cells,")

    def test_csv_deterministic_except_wall(self, client):
        req = {"cells": [2], "seed": 3}

        def strip_wall(text):
            return ["," .join(line.split(",")[:-1]) for line in text.splitlines()]

        a = client.post("/bench", json=req).json()["csv_text"]
        b = client.post("/bench", json=req).json()["csv_text"]
        assert strip_wall(a) == strip_wall(b)

    def test_bad_approach(self, client):
        resp = client.post("/bench", json={"approaches": ["Quantum"],
                                           "cells": [2]})
        assert resp.status_code == 422


class TestEntropyEndpoint:
    def test_report(self, client):
        resp = client.post("/entropy", json={"seed": 2, "sample_positions": 100})
        assert resp.status_code == 200
        data = resp.json()
        assert data["n_positions"] == 100
        assert data["shannon_bits"] > 0
