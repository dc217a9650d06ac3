"""Command-line client for stream generation, fitting, prediction, and
the benchmark protocols.

The CLI is a thin HTTP client of the service: by default it runs the
requests against an in-process application (no server needed); pass
``--server URL`` to target a running instance instead. File I/O stays on
the client side; the service only ever sees request bodies.

Exit codes: 0 success, 2 input/config error, 3 numeric/convergence error.
Progress goes to stderr; data artifacts go to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .errors import ConvergenceError, CoupleStreamError, InputError, NumericError

EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _log(msg: str):
    print(msg, file=sys.stderr)


class ServiceClient:
    """Minimal JSON-over-HTTP client; in-process unless a server URL is given."""

    def __init__(self, server: str | None = None):
        if server:
            import httpx
            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            from fastapi.testclient import TestClient
            from .service import app
            self._client = TestClient(app, raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code == 200:
            return resp.json()
        try:
            detail = resp.json().get("detail")
        except Exception:
            detail = None
        if isinstance(detail, dict):
            kind = detail.get("kind")
            message = detail.get("message", str(detail))
            if kind == "numeric":
                if "gap" in detail:
                    raise ConvergenceError(message, gap=detail["gap"],
                                           iterations=detail.get("iterations", -1))
                raise NumericError(message)
            raise InputError(message)
        if resp.status_code == 422:  # request-body validation
            raise InputError(f"invalid request: {detail}")
        raise CoupleStreamError(f"service error {resp.status_code}: {resp.text[:500]}")


# ---------------------------------------------------------------------------
# Config file + flag merging: explicit flags override file values.
# ---------------------------------------------------------------------------

def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as f:
            cfg = json.load(f)
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config JSON parse error at offset {exc.pos}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise InputError("config file must contain a JSON object")
    return cfg


def _merge(args: argparse.Namespace, config: dict) -> dict:
    """Resolved options: defaults < config file < explicit flags."""
    resolved = dict(vars(args))
    for key, val in config.items():
        key = key.replace("-", "_")
        if key in resolved and resolved[key] is None:
            resolved[key] = val
    return resolved


def _opt(resolved: dict, key: str, default):
    v = resolved.get(key)
    return default if v is None else v


def _write_text(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _write_json(path: str, doc: dict):
    _write_text(path, json.dumps(doc, indent=2) + "\n")


def _floats(csv_text: str) -> list:
    try:
        return [float(v) for v in str(csv_text).split(",") if v != ""]
    except ValueError:
        raise InputError(f"expected a comma-separated number list, got {csv_text!r}") from None


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _recipe_payload(resolved: dict, kind: str) -> dict:
    recipe = {"base": kind}
    for field, key in (("n", "n"), ("m", "m"), ("r", "r"), ("noise_sd", "noise_sd"),
                       ("d", "d"), ("offset_deg", "offset_deg"),
                       ("total_rotation", "total_rotation"),
                       ("margin_exclusion", "margin_exclusion"),
                       ("label_noise", "label_noise"), ("halve", "halve"),
                       ("shared_draws", "shared_draws")):
        if resolved.get(key) is not None:
            recipe[field] = resolved[key]
    return recipe


def cmd_gen(client: ServiceClient, resolved: dict) -> int:
    kind = {"ds1": "ds1", "hyperplane": "hyperplane"}[resolved["generator"]]
    payload = {"recipe": _recipe_payload(resolved, kind), "seed": _opt(resolved, "seed", 0)}
    out = client.post("/generate", payload)
    _write_text(resolved["out"], out["csv"])
    print(out["rows"])
    return 0


def _grid_payload(resolved: dict) -> dict:
    grid = {}
    for flag, key in (("grid_C", "C"), ("grid_sigma", "sigma"),
                      ("grid_gamma", "gamma"), ("grid_lambda", "lambda")):
        if resolved.get(flag) is not None:
            grid[key] = _floats(resolved[flag])
    if resolved.get("grid") == "paper":
        from .harness import Grid
        paper = Grid.paper()
        grid = {"C": list(paper.C_values), "sigma": list(paper.sigma_values),
                "gamma": list(paper.gamma_values), "lambda": list(paper.lambda_values)}
    return grid


def cmd_fit(client: ServiceClient, resolved: dict) -> int:
    with open(resolved["stream"]) as f:
        stream_csv = f.read()
    hyper = {"C": _opt(resolved, "C", 10.0),
             "kernel": {"kind": _opt(resolved, "kernel", "linear"),
                        "sigma": _opt(resolved, "sigma", 1.0)},
             "gamma": _opt(resolved, "gamma", 0.0),
             "lambda": _opt(resolved, "lam", 0.0)}
    t0 = time.perf_counter()
    out = client.post("/fit", {"stream_csv": stream_csv, "hyper": hyper})
    _log(f"fit: n={out['n']} kkt_gap={out['kkt_gap']:.3e} iterations={out['iterations']} "
         f"({time.perf_counter() - t0:.2f}s)")
    for w in out["warnings"]:
        _log(f"warning: {w}")
    _write_json(resolved["out"], out["model"])
    return 0


def _read_model(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as exc:
        raise InputError(f"cannot read model file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"model JSON parse error at offset {exc.pos}: {exc.msg}") from None


def cmd_predict(client: ServiceClient, resolved: dict) -> int:
    from .datatypes import read_stream_csv
    model = _read_model(resolved["model"])
    stream = read_stream_csv(resolved["stream"])
    samples = [{"task": int(t), "time": int(w), "features": x.tolist()}
               for t, w, x in zip(stream.task, stream.time, stream.X)]
    out = client.post("/predict", {"model": model, "samples": samples})
    lines = ["task,time,score,label"]
    for t, w, s, lbl in zip(stream.task, stream.time, out["scores"], out["labels"]):
        lines.append(f"{t},{w},{s!r},{lbl}")
    _write_text(resolved["out"], "\n".join(lines) + "\n")
    correct = [int(lbl) == int(yy) for lbl, yy in zip(out["labels"], stream.y)]
    print(f"accuracy {sum(correct) / len(correct):.6f}")
    return 0


def cmd_eval(client: ServiceClient, resolved: dict) -> int:
    model = _read_model(resolved["model"])
    with open(resolved["stream"]) as f:
        stream_csv = f.read()
    out = client.post("/evaluate", {"model": model, "stream_csv": stream_csv})
    if resolved.get("json_out"):
        _write_json(resolved["json_out"], out)
    per_task = " ".join(f"task={t} {a:.6f}" for t, a in sorted(out["accuracy"].items(), key=lambda kv: int(kv[0])))
    print(f"{per_task} mean {out['mean_accuracy']:.6f}")
    return 0


BENCH_DATASETS = ("ds1", "ds2", "ds3", "ds4", "ds5")


def cmd_bench(client: ServiceClient, resolved: dict) -> int:
    protocol = resolved["protocol"]
    t0 = time.perf_counter()
    if protocol in BENCH_DATASETS:
        from .generators import named_recipe
        if resolved.get("r") is not None:
            resolved["r"] = float(resolved["r"])
        base = named_recipe(protocol)
        recipe = {"base": base.base, "label_noise": base.label_noise, "halve": base.halve}
        overlay = _recipe_payload(resolved, base.base)
        recipe.update({k: v for k, v in overlay.items() if k != "base"})
        payload = {
            "recipe": recipe,
            "kernel": _opt(resolved, "kernel", "linear"),
            "methods": str(_opt(resolved, "methods", "dc,single_chain")).split(","),
            "n_runs": _opt(resolved, "runs", 10),
            "master_seed": _opt(resolved, "seed", 0),
            "jobs": _opt(resolved, "jobs", 1),
        }
        grid = _grid_payload(resolved)
        if grid:
            payload["grid"] = grid
        if resolved.get("sweep_r"):
            payload["sweep_field"] = "r"
            payload["sweep_values"] = _floats(resolved["sweep_r"])
        elif resolved.get("sweep_offset"):
            payload["sweep_field"] = "offset_deg"
            payload["sweep_values"] = _floats(resolved["sweep_offset"])
        out = client.post("/bench/synthetic", payload)
    elif protocol == "prequential":
        if resolved.get("streams"):
            from .datatypes import combine_tasks, read_stream_csv, stream_to_csv_text
            parts = [read_stream_csv(p) for p in str(resolved["streams"]).split(",")]
            stream_csv = stream_to_csv_text(combine_tasks(parts))
        else:
            # synthetic stand-in shaped like the batched real datasets
            batches = _opt(resolved, "batches", 25)
            batch_size = _opt(resolved, "batch_size", 20)
            gen_payload = {"recipe": {"base": "ds1", "n": batches * batch_size,
                                      "m": batches, "r": _opt(resolved, "r", 0.05)},
                           "seed": _opt(resolved, "seed", 0)}
            stream_csv = client.post("/generate", gen_payload)["csv"]
        payload = {"stream_csv": stream_csv, "N": _opt(resolved, "N", 3),
                   "kernel": _opt(resolved, "kernel", "linear"),
                   "methods": str(_opt(resolved, "methods", "dc,single_chain")).split(","),
                   "jobs": _opt(resolved, "jobs", 1)}
        grid = _grid_payload(resolved)
        if grid:
            payload["grid"] = grid
        out = client.post("/bench/prequential", payload)
    elif protocol == "lambda-sweep":
        payload = {"r_values": _floats(_opt(resolved, "r", "0.1,0.2,0.3")),
                   "C": _opt(resolved, "C", 10.0), "sigma": _opt(resolved, "sigma", 1.0),
                   "n_runs": _opt(resolved, "runs", 10),
                   "master_seed": _opt(resolved, "seed", 0),
                   "n": _opt(resolved, "n", 500), "m": _opt(resolved, "m", 25),
                   "jobs": _opt(resolved, "jobs", 1)}
        if resolved.get("grid_gamma"):
            payload["gamma_values"] = _floats(resolved["grid_gamma"])
        if resolved.get("grid_lambda"):
            payload["lambda_values"] = _floats(resolved["grid_lambda"])
        out = client.post("/bench/lambda-sweep", payload)
    else:
        raise InputError(f"unknown bench protocol {protocol!r}")

    _log(f"bench {protocol}: {time.perf_counter() - t0:.1f}s")
    report = dict(out["report"])
    report["resolved_config"] = {k: v for k, v in resolved.items()
                                 if k not in ("func",) and v is not None}
    _write_json(resolved["out"], report)
    if resolved.get("csv_out"):
        rows = out.get("plot_rows")
        if rows:
            from .harness import plot_rows_csv
            _write_text(resolved["csv_out"], plot_rows_csv(rows))
        elif report.get("kind") == "synthetic":
            from .harness import ExperimentReport, report_rows_csv
            rep = ExperimentReport(config=report["config"], per_run=report["per_run"],
                                   aggregates=report["aggregates"])
            _write_text(resolved["csv_out"], report_rows_csv(rep))
        else:
            _log("no tabular rows for this protocol; skipping --csv")
    return 0


def cmd_serve(resolved: dict) -> int:
    import uvicorn
    from .service import app
    uvicorn.run(app, host=_opt(resolved, "host", "127.0.0.1"),
                port=int(_opt(resolved, "port", 8000)))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="couplestream",
                                description="Coupled-SVM drift-stream toolkit")
    p.add_argument("--server", help="URL of a running service (default: run in-process)")
    p.add_argument("--config", help="JSON config file; explicit flags override its values")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic stream CSV")
    gen.add_argument("generator", choices=["ds1", "hyperplane"])
    gen.add_argument("--n", type=int, help="samples per task")
    gen.add_argument("--m", type=int, help="time windows")
    gen.add_argument("--r", type=float, help="deviation (sliding-curve task 2)")
    gen.add_argument("--noise-sd", dest="noise_sd", type=float)
    gen.add_argument("--d", type=int, help="hyperplane dimension")
    gen.add_argument("--offset-deg", dest="offset_deg", type=float)
    gen.add_argument("--total-rotation", dest="total_rotation", type=float)
    gen.add_argument("--margin-exclusion", dest="margin_exclusion", type=float)
    gen.add_argument("--shared-draws", dest="shared_draws", action="store_const", const=True)
    gen.add_argument("--label-noise", dest="label_noise", type=float)
    gen.add_argument("--halve", action="store_const", const=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", required=True, help="output CSV path ('-' for stdout)")

    fit_p = sub.add_parser("fit", help="fit a model on a stream CSV")
    fit_p.add_argument("--stream", required=True)
    fit_p.add_argument("--kernel", choices=["linear", "gaussian"])
    fit_p.add_argument("--sigma", type=float)
    fit_p.add_argument("--C", type=float)
    fit_p.add_argument("--gamma", type=float)
    fit_p.add_argument("--lam", "--lambda", dest="lam", type=float)
    fit_p.add_argument("--out", required=True, help="model JSON path")

    pred = sub.add_parser("predict", help="score a stream with a saved model")
    pred.add_argument("--model", required=True)
    pred.add_argument("--stream", required=True)
    pred.add_argument("--out", required=True, help="prediction CSV path ('-' for stdout)")

    ev = sub.add_parser("eval", help="windowed accuracy of a saved model on a stream")
    ev.add_argument("--model", required=True)
    ev.add_argument("--stream", required=True)
    ev.add_argument("--json", dest="json_out", help="also write the result as JSON")

    bench = sub.add_parser("bench", help="run a benchmark protocol")
    bench.add_argument("protocol", choices=list(BENCH_DATASETS) + ["prequential", "lambda-sweep"])
    bench.add_argument("--out", required=True, help="report JSON path")
    bench.add_argument("--csv", dest="csv_out", help="plot-ready / per-run CSV path")
    bench.add_argument("--kernel", choices=["linear", "gaussian"])
    bench.add_argument("--methods", help="comma list from dc,single_chain,merged")
    bench.add_argument("--runs", type=int)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--jobs", type=int, help="parallel grid-cell workers")
    bench.add_argument("--n", type=int)
    bench.add_argument("--m", type=int)
    bench.add_argument("--r", help="deviation (number; lambda-sweep takes a comma list)")
    bench.add_argument("--noise-sd", dest="noise_sd", type=float)
    bench.add_argument("--offset-deg", dest="offset_deg", type=float)
    bench.add_argument("--shared-draws", dest="shared_draws", action="store_const", const=True)
    bench.add_argument("--sweep-r", dest="sweep_r", help="comma list of r values to sweep")
    bench.add_argument("--sweep-offset", dest="sweep_offset", help="comma list of offsets to sweep")
    bench.add_argument("--C", type=float, help="fixed C (lambda-sweep)")
    bench.add_argument("--sigma", type=float, help="fixed sigma (lambda-sweep)")
    bench.add_argument("--grid", choices=["desk", "paper"])
    bench.add_argument("--grid-C", dest="grid_C", help="comma list overriding the C axis")
    bench.add_argument("--grid-sigma", dest="grid_sigma")
    bench.add_argument("--grid-gamma", dest="grid_gamma")
    bench.add_argument("--grid-lambda", dest="grid_lambda")
    bench.add_argument("--streams", help="comma list of single-task stream CSVs (prequential)")
    bench.add_argument("--batches", type=int, help="synthetic prequential batch count")
    bench.add_argument("--batch-size", dest="batch_size", type=int)
    bench.add_argument("--N", type=int, help="prequential training window")

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host")
    srv.add_argument("--port", type=int)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = _merge(args, _load_config(args.config))
        if args.command == "serve":
            return cmd_serve(resolved)
        client = ServiceClient(resolved.get("server"))
        if args.command == "gen":
            # range checks that otherwise only fail service-side
            if resolved.get("r") is not None and not 0 <= float(resolved["r"]) < 1:
                raise InputError(f"deviation r must lie in [0, 1), got {resolved['r']}")
            return cmd_gen(client, resolved)
        if args.command == "fit":
            return cmd_fit(client, resolved)
        if args.command == "predict":
            return cmd_predict(client, resolved)
        if args.command == "eval":
            return cmd_eval(client, resolved)
        if args.command == "bench":
            return cmd_bench(client, resolved)
        parser.error(f"unknown command {args.command}")
    except InputError as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    except NumericError as exc:
        extra = f" (gap {exc.gap:.3e})" if isinstance(exc, ConvergenceError) else ""
        _log(f"numeric error: {exc}{extra}")
        return EXIT_NUMERIC
    except CoupleStreamError as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
