"""Command-line client for the service.

Subcommands build a request, post it to the service endpoints and format
the response. By default the app is driven in-process (no server needed,
byte-reproducible under a fixed seed); ``--server URL`` targets a running
instance instead, and ``serve`` starts one.

Exit codes: 0 success, 1 domain rejection under ``--strict``, 2 usage or
configuration errors.
"""

import argparse
import sys

from .adversary import SCENARIOS

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

CONFIG_KEYS = {
    "path_loss_exponent": float,
    "reference_distance_m": float,
    "reference_loss_cdbm": int,
    "shadowing_sigma_cdbm": int,
    "toa_jitter_ns": int,
    "noise_floor_cdbm": int,
    "seed": int,
}


def load_config_file(path) -> dict:
    """key=value pairs, one per line; '#' starts a comment; keys are the
    environment-config field names."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value, got {raw.rstrip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
            out[key] = CONFIG_KEYS[key](value)
    return out


def _client(server: str):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings
    with warnings.catch_warnings():
        # starlette nudges its test client users toward a forked httpx;
        # in-process ASGI is exactly what the local mode wants.
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import app
    return TestClient(app)


def _post(client, path, payload):
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        raise SystemExit(f"service error {resp.status_code}: {resp.text}")
    return resp.json()


def _env_payload(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k in CONFIG_KEYS and k != "seed"}


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config-file seed (default 0)")
    parser.add_argument("--config", default=None,
                        help="environment config file (key=value lines)")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    parser.add_argument("--strict", action="store_true",
                        help="exit 1 when the run contains domain rejections")


def _resolve_seed(args, cfg):
    if args.seed is not None:
        return args.seed
    return cfg.get("seed", 0)


def cmd_gen_map(args) -> int:
    cfg = load_config_file(args.config) if args.config else {}
    payload = {
        "seed": _resolve_seed(args, cfg),
        "grid_points": args.grid_points,
        "orientations": args.orientations,
        "samples_per_combo": args.samples,
        "n_cells": args.cells,
        "cells_per_zone": args.cells_per_zone,
        "env": _env_payload(cfg),
    }
    with _client(args.server) as client:
        data = _post(client, "/radio-map", payload)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(data["map_text"])
    print(f"wrote {data['records']} records "
          f"({data['combinations']} location/orientation combinations x "
          f"{data['samples_per_combo']} samples) to {args.out}")
    return EXIT_OK


def cmd_run_auth(args) -> int:
    cfg = load_config_file(args.config) if args.config else {}
    payload = {
        "seed": _resolve_seed(args, cfg),
        "sla": args.sla,
        "trace_cells": args.trace_cells,
        "drop_rate": args.drop_rate,
        "n_cells": args.cells,
        "shadowing_sigma_cdbm": cfg.get("shadowing_sigma_cdbm", 0),
    }
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    if args.map:
        with open(args.map, "r", encoding="ascii") as fh:
            payload["map_text"] = fh.read()
    with _client(args.server) as client:
        data = _post(client, "/auth/run", payload)
    for v in data["verdicts"]:
        print(f"session={v['session']} cell={v['cell']} zone={v['zone']} "
              f"outcome={v['outcome']} reason={v['reason']}")
    summary = " ".join(f"{k}={v}" for k, v in data["summary"].items())
    print(f"summary: {summary} epsilon={data['epsilon']:.3f} sla={data['sla']}")
    rejected = sum(n for outcome, n in data["summary"].items()
                   if outcome not in ("MutualAuthSuccess", "FastPathSuccess"))
    return EXIT_DOMAIN if args.strict and rejected else EXIT_OK


def cmd_attack(args) -> int:
    cfg = load_config_file(args.config) if args.config else {}
    payload = {
        "scenario": args.scenario,
        "n": args.n,
        "seed": _resolve_seed(args, cfg),
        "recompute_fingerprint": args.recompute_fingerprint,
    }
    with _client(args.server) as client:
        data = _post(client, "/attack", payload)
    print(f"attack scenario : {data['scenario']}")
    print(f"attempts        : {data['attempts']}")
    print(f"successes       : {data['successes']} (rate {data['success_rate']:.4f})")
    print(f"criterion       : {data['success_criterion']}")
    print(f"transcript      : {data['transcript_digest']}")
    for key in sorted(data["details"]):
        print(f"  {key}: {data['details'][key]}")
    print(f"scenario={data['scenario']} attempts={data['attempts']} "
          f"successes={data['successes']}")
    return EXIT_DOMAIN if args.strict and data["successes"] else EXIT_OK


def cmd_bench(args) -> int:
    cfg = load_config_file(args.config) if args.config else {}
    payload = {
        "seed": _resolve_seed(args, cfg),
        "cells": [int(c) for c in args.cells.split(",")],
        "approaches": args.approaches.split(",") if args.approaches else None,
        "sla": args.sla,
    }
    if payload["approaches"] is None:
        payload.pop("approaches")
    with _client(args.server) as client:
        data = _post(client, "/bench", payload)
        entropy = None
        if args.entropy_positions:
            entropy = _post(client, "/entropy", {
                "seed": _resolve_seed(args, cfg),
                "sample_positions": args.entropy_positions,
                "env": _env_payload(cfg),
            })
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(data["csv_text"])
    print(f"wrote {len(data['rows'])} rows to {args.out}")
    for row in data["rows"]:
        print(f"{row['approach']:>20} cells={row['cells']:>3} "
              f"blocks={row['cipher_block_ops']:>6} prf={row['prf_calls']:>5} "
              f"knn={row['knn_distance_evals']:>7} msgs={row['messages']:>4} "
              f"full={row['full_auths']} fast={row['fast_paths']}")
    if entropy:
        print(f"fingerprint scalar entropy: {entropy['shannon_bits']:.3f} bits over "
              f"{entropy['n_positions']} positions "
              f"({entropy['distinct_values']} distinct values, "
              f"sigma={entropy['sigma_cdbm']} cdB)")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn
    uvicorn.run("xlayer.service:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlayer",
        description="cross-layer authentication toolkit: radio-map generation, "
                    "authentication runs, attack suites and cost benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-map", help="synthesize and write a radio map file")
    _add_common(p)
    p.add_argument("--out", required=True, help="output map path")
    p.add_argument("--grid-points", type=int, default=70)
    p.add_argument("--orientations", type=int, default=4)
    p.add_argument("--samples", type=int, default=25)
    p.add_argument("--cells", type=int, default=16)
    p.add_argument("--cells-per-zone", type=int, default=4)
    p.set_defaults(func=cmd_gen_map)

    p = sub.add_parser("run-auth", help="replay a mobility trace of authentications")
    _add_common(p)
    p.add_argument("--sla", choices=["centralized", "decentralized"],
                   default="centralized")
    p.add_argument("--map", default=None, help="radio map file to authenticate against")
    p.add_argument("--drop-rate", type=float, default=0.0)
    p.add_argument("--trace-cells", type=int, default=8)
    p.add_argument("--cells", type=int, default=16)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=cmd_run_auth)

    p = sub.add_parser("attack", help="run an adversary scenario and report rates")
    _add_common(p)
    p.add_argument("--scenario", required=True, choices=sorted(SCENARIOS),
                   metavar="SCENARIO",
                   help="one of: " + ", ".join(sorted(SCENARIOS)))
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--recompute-fingerprint", action="store_true",
                   help="grant the passive fingerprint-recompute capability")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="four-way cost comparison across cell counts")
    _add_common(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--cells", default="2,4,8,16",
                   help="comma-separated cell counts")
    p.add_argument("--approaches", default=None,
                   help="comma-separated approach names (default: all four)")
    p.add_argument("--sla", choices=["centralized", "decentralized"],
                   default="centralized")
    p.add_argument("--entropy-positions", type=int, default=1000,
                   help="positions for the fingerprint entropy report (0 disables)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
