"""Command-line driver: metrics, sweeps, Monte Carlo, surrogates, bench.

Every run that writes a CSV also writes ``<csv>.manifest.json`` with the
resolved config hash, seed and output checksum; identical manifests
reproduce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from . import metrics as M
from . import montecarlo as mc_mod
from . import surrogate as S
from .errors import ConfigError, IrsThzError, NumericError
from .scenario import ScenarioConfig, emit_defaults, parse_config

CSV_COLUMNS = (
    "ps_dbm",
    "metric",
    "analytical",
    "asymptotic",
    "mc_estimate",
    "mc_std_error",
    "surrogate",
    "trials",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(args, cfg: ScenarioConfig, rows: list[dict], command: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in CSV_COLUMNS])
    payload = buf.getvalue()

    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
        manifest = {
            "tool": "irsthz",
            "version": __version__,
            "command": command,
            "config_hash": cfg.config_hash(),
            "seed": cfg.values["sim"]["seed"],
            "csv": os.path.basename(out),
            "csv_sha256": hashlib.sha256(payload.encode()).hexdigest(),
        }
        with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {out} ({len(rows)} rows), manifest {out}.manifest.json")
    else:
        sys.stdout.write(payload)


def _load_config(args) -> ScenarioConfig:
    cfg = parse_config(getattr(args, "config", None))
    if getattr(args, "ps_dbm", None) is not None:
        cfg.values["link"]["tx_power_dbm"] = float(args.ps_dbm)
    if getattr(args, "seed", None) is not None:
        cfg.values["sim"]["seed"] = int(args.seed)
    if getattr(args, "trials", None) is not None:
        cfg.values["sim"]["trials"] = int(args.trials)
    if getattr(args, "n", None) is not None:
        cfg.values["link"]["n_elements"] = int(args.n)
    if getattr(args, "mi", None) is not None:
        cfg.values["modulation"]["mi"] = int(args.mi)
    if getattr(args, "mq", None) is not None:
        cfg.values["modulation"]["mq"] = int(args.mq)
    if getattr(args, "beta", None) is not None:
        cfg.values["modulation"]["beta"] = float(args.beta)
    if getattr(args, "m", None) is not None:
        cfg.values["modulation"]["hqam_m"] = int(args.m)
    if getattr(args, "phase", None) is not None:
        cfg.values["sim"]["phase_model"] = args.phase
    if getattr(args, "lambda_th_db", None) is not None:
        cfg.values["sim"]["lambda_th_db"] = float(args.lambda_th_db)
    if getattr(args, "range", None) is not None:
        try:
            start, stop, step = (float(v) for v in args.range.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad sweep range {args.range!r}, want start:stop:step") from exc
        cfg.values["sweep"].update(
            {"ps_dbm_start": start, "ps_dbm_stop": stop, "ps_dbm_step": step}
        )
        cfg.sweep_points()
    return cfg


def _analytic_point(cfg: ScenarioConfig, metric: str) -> float:
    lse = cfg.lse()
    lam0 = cfg.lambda0()
    if metric == "op":
        return M.outage_probability(lse, lam0, cfg.lambda_th())
    if metric == "aser-rqam":
        return M.aser_rqam(cfg.rqam(), lse, lam0)
    if metric == "aser-hqam":
        return M.aser_hqam(cfg.hqam(), lse, lam0)
    if metric == "acc":
        return M.acc(lse, lam0)
    raise ConfigError(f"unknown metric {metric!r}")


def cmd_metric(args, metric: str) -> int:
    cfg = _load_config(args)
    value = _analytic_point(cfg, metric)
    row = {
        "ps_dbm": cfg.values["link"]["tx_power_dbm"],
        "metric": metric,
        "analytical": value,
    }
    if metric == "op":
        row["asymptotic"] = M.outage_asymptotic(cfg.lse(), cfg.lambda0(), cfg.lambda_th())
    _write_rows(args, cfg, [row], metric)
    return 0


def _sweep_analytic(cfg: ScenarioConfig, metric: str, points: list[float]) -> list[float]:
    lse = cfg.lse()
    lam0s = np.asarray([cfg.lambda0(p) for p in points])
    lsl = lse.lam * np.sqrt(lam0s)
    if metric == "op":
        return [M.outage_probability(lse, l0, cfg.lambda_th()) for l0 in lam0s]
    if metric == "acc":
        scaled = M._i5_scaled_many(lse.tau, lsl, 1e-10)
        return list(scaled / math.log(2.0))
    if metric == "aser-rqam":
        spec = cfg.rqam()
        vals, errs = M.aser_rqam_curve(spec, lse.tau, lsl)
        deriv = lambda l: M.rqam_cond_sep_derivative(spec, l)
        rate = 0.5 * min(spec.a, spec.b) ** 2
    else:
        spec = cfg.hqam()
        vals, errs = M.aser_hqam_curve(spec, lse.tau, lsl)
        deriv = lambda l: M.hqam_cond_sep_derivative(spec, l)
        rate = spec.alpha_h / 6.0
    out = []
    for v, e, l0 in zip(vals, errs, lam0s):
        if v > 0 and e <= 0.02 * v:
            out.append(float(v))
        else:  # cancellation floor: integrate the definition instead
            out.append(M.quadrature_oracle_aser(deriv, lse, float(l0), decay_rate=rate))
    return out


def _sweep_mc(cfg: ScenarioConfig, metric: str, ps_dbm: float):
    budget = cfg.budget(ps_dbm)
    hops = (cfg.hop(1), cfg.hop(2))
    atm = cfg.atmosphere()
    phase = cfg.phase()
    mc = cfg.mc()
    eta = cfg.eta()
    if metric == "op":
        return mc_mod.simulate_outage(budget, hops, atm, phase, cfg.lambda_th(), mc, eta)
    if metric == "aser-rqam":
        return mc_mod.simulate_ser_rqam(cfg.rqam(), budget, hops, atm, phase, mc, eta)
    if metric == "aser-hqam":
        return mc_mod.simulate_ser_hqam(cfg.hqam(), budget, hops, atm, phase, mc, eta)
    if metric == "acc":
        return mc_mod.simulate_capacity(budget, hops, atm, phase, mc, eta)
    raise ConfigError(f"unknown metric {metric!r}")


def _surrogate_point(cfg: ScenarioConfig, metric: str, model, ps_dbm: float) -> float:
    lse = cfg.lse()
    lam0 = cfg.lambda0(ps_dbm)
    if metric == "op":
        x = S.op_net_inputs(lse, lam0, cfg.lambda_th())
    elif metric == "aser-rqam":
        x = S.aser_net_inputs(cfg.rqam(), lse, lam0)
    else:
        raise ConfigError(f"no surrogate for metric {metric!r}")
    return float(S.mlp_forward(model, x))


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    metric = args.metric
    points = cfg.sweep_points()
    analytic = _sweep_analytic(cfg, metric, points)

    asym = [None] * len(points)
    if args.with_asymptote and metric in ("op", "aser-rqam"):
        lse = cfg.lse()
        for i, p in enumerate(points):
            lam0 = cfg.lambda0(p)
            if metric == "op":
                asym[i] = M.outage_asymptotic(lse, lam0, cfg.lambda_th())
            else:
                asym[i] = M.aser_rqam_asymptotic(cfg.rqam(), lse, lam0).value

    model = None
    if args.with_dnn:
        model = S.load_model(args.with_dnn)

    rows = []
    for i, p in enumerate(points):
        row = {
            "ps_dbm": p,
            "metric": metric,
            "analytical": analytic[i],
            "asymptotic": asym[i],
        }
        if args.with_mc:
            est = _sweep_mc(cfg, metric, p)
            row["mc_estimate"] = est.value
            row["mc_std_error"] = est.std_error
            row["trials"] = est.trials_used
        if model is not None:
            row["surrogate"] = _surrogate_point(cfg, metric, model, p)
        rows.append(row)
    _write_rows(args, cfg, rows, "sweep")
    return 0


def cmd_mc(args) -> int:
    cfg = _load_config(args)
    metric = args.metric
    est = _sweep_mc(cfg, metric, cfg.values["link"]["tx_power_dbm"])
    rows = [
        {
            "ps_dbm": cfg.values["link"]["tx_power_dbm"],
            "metric": metric,
            "mc_estimate": est.value,
            "mc_std_error": est.std_error,
            "trials": est.trials_used,
        }
    ]
    _write_rows(args, cfg, rows, "mc")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    seed = cfg.values["sim"]["seed"]
    if args.net == "op":
        spec, transforms = S.op_net_spec()
        n = args.samples or (400_000 if args.full_scale else 20_000)
        dataset = S.generate_op_dataset(n_samples=n, seed=seed)
    else:
        spec, transforms = S.aser_net_spec()
        dataset = S.generate_aser_dataset(seed=seed, full_scale=args.full_scale)
    t0 = time.perf_counter()
    model = S.train_mlp(spec, transforms, dataset, S.TrainConfig(seed=seed))
    dt = time.perf_counter() - t0
    S.save_model(model, args.out_model)
    print(
        f"trained {args.net} net on {dataset.targets.size} rows in {dt:.1f}s: "
        f"val_mse={model.meta['val_mse']:.3e} test_mse={model.meta['test_mse']:.3e} "
        f"-> {args.out_model}"
    )
    return 0


def cmd_predict(args) -> int:
    cfg = _load_config(args)
    model = S.load_model(args.model)
    metric = "op" if args.net == "op" else "aser-rqam"
    points = cfg.sweep_points() if args.sweep else [cfg.values["link"]["tx_power_dbm"]]
    rows = []
    for p in points:
        rows.append(
            {
                "ps_dbm": p,
                "metric": metric,
                "surrogate": _surrogate_point(cfg, metric, model, p),
            }
        )
    _write_rows(args, cfg, rows, "predict")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    if args.metric != "aser-rqam":
        raise ConfigError("bench supports --metric aser-rqam")
    lse = cfg.lse()
    spec = cfg.rqam()
    rng = np.random.default_rng(cfg.values["sim"]["seed"])
    lam0s = np.exp(rng.uniform(math.log(1.0), math.log(1e6), args.samples))

    if args.model:
        model = S.load_model(args.model)
    else:
        # architecture-bound timing: an untrained net has identical cost
        net, transforms = S.aser_net_spec()
        w, b = S._init_params(net, rng)
        model = S.TrainedModel(
            net, transforms, w, b, np.array([2.0, 2.0, 0.0, -7.0]), np.array([16.0, 16.0, 2.4, 2.4]),
            meta={"untrained": True},
        )
    inputs = np.stack([S.aser_net_inputs(spec, lse, l0) for l0 in lam0s])
    t0 = time.perf_counter()
    S.mlp_forward(model, inputs)
    dt_pred = time.perf_counter() - t0

    n_cf = min(args.cf_samples, args.samples)
    t0 = time.perf_counter()
    for l0 in lam0s[:n_cf]:
        M.aser_rqam(spec, lse, float(l0))
    dt_cf = time.perf_counter() - t0
    dt_cf_full = dt_cf * args.samples / n_cf

    print(f"closed form : {n_cf} evals in {dt_cf:.2f}s "
          f"-> {args.samples} extrapolated {dt_cf_full:.1f}s")
    print(f"surrogate   : {args.samples} predictions in {dt_pred:.4f}s")
    ratio = dt_cf_full / max(dt_pred, 1e-12)
    print(f"speedup     : {ratio:.0f}x")
    if getattr(args, "out", None):
        rows = [
            {"metric": "bench-closed-form", "analytical": dt_cf_full, "trials": args.samples},
            {"metric": "bench-surrogate", "analytical": dt_pred, "trials": args.samples},
            {"metric": "bench-speedup", "analytical": ratio, "trials": args.samples},
        ]
        _write_rows(args, cfg, rows, "bench")
    return 0


def cmd_selftest(args) -> int:
    from .channel import LseParams

    failures = 0

    def check(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""))
        failures += 0 if ok else 1

    from .specfun import FoxHSpec, GammaTerm, fox_h_univariate, upper_gamma

    worst = 0.0
    for a in (1.0, 2.7, 5.0):
        for x in (0.1, 1.0, 10.0):
            spec = FoxHSpec(2, 0, (GammaTerm(1, 1),), (GammaTerm(a, 1), GammaTerm(0, 1)))
            h = fox_h_univariate(spec, x)
            worst = max(worst, abs(h - upper_gamma(a, x)) / upper_gamma(a, x))
    check("fox-h incomplete-gamma reduction", worst < 1e-8, f"worst rel {worst:.1e}")

    from .specfun import reg_lower_gamma

    p41 = reg_lower_gamma(4.0, 1.0)
    check("regularised gamma P(4,1)", abs(p41 - 0.01898815687615385) < 1e-12)

    lse = LseParams(lam=1.0, tau=0.0)
    op = M.outage_probability(lse, 1.0, 1.0)
    check("outage exponential reduction", abs(op - (1 - math.exp(-1))) < 1e-12)

    lse = LseParams(lam=1.42, tau=2.48)
    spec = M.RqamSpec(4, 4)
    cf = M.aser_rqam(spec, lse, 30.0)
    orc = M.quadrature_oracle_aser(
        lambda l: M.rqam_cond_sep_derivative(spec, l), lse, 30.0, decay_rate=0.5 * spec.a**2
    )
    check("rqam closed form vs oracle", abs(cf - orc) <= 1e-4 * orc, f"rel {abs(cf-orc)/orc:.1e}")

    cfg = _load_config(args)
    est = mc_mod.simulate_outage(
        cfg.budget(0.0), (cfg.hop(1), cfg.hop(2)), cfg.atmosphere(), mc_mod.PhaseModel.ideal(),
        cfg.lambda_th(), mc_mod.McConfig(trials=20_000, seed=7), cfg.eta(),
    )
    analytic = M.outage_probability(cfg.lse(), cfg.lambda0(0.0), cfg.lambda_th())
    tol = max(4 * est.std_error, 0.25 * analytic, 2e-3)
    check("mc outage smoke", abs(est.value - analytic) <= tol,
          f"mc {est.value:.3g} vs {analytic:.3g}")

    import tempfile

    net, transforms = S.aser_net_spec()
    rng = np.random.default_rng(5)
    w, b = S._init_params(net, rng)
    model = S.TrainedModel(net, transforms, w, b, np.zeros(4), np.ones(4), {})
    with tempfile.TemporaryDirectory() as td:
        p = os.path.join(td, "m.txt")
        S.save_model(model, p)
        back = S.load_model(p)
        x = np.abs(rng.standard_normal((10, 4))) + 0.5
        same = np.array_equal(S.mlp_forward(model, x), S.mlp_forward(back, x))
    check("model save/load round-trip", same)

    print(f"selftest: {failures} failure(s)")
    return 0 if failures == 0 else 3


def cmd_emit_defaults(args) -> int:
    sys.stdout.write(emit_defaults())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irsthz",
        description="IRS-assisted THz link performance: closed forms, Monte Carlo, surrogates",
    )
    parser.add_argument("--version", action="version", version=f"irsthz {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (searched in $IRSTHZ_CONFIG_DIR too)")
    common.add_argument("--out", help="CSV output path (stdout if omitted)")
    common.add_argument("--seed", type=int, help="override sim.seed")
    common.add_argument("--ps-dbm", type=float, dest="ps_dbm", help="override transmit power")
    common.add_argument("--n", type=int, help="override IRS element count")
    common.add_argument("--lambda-th-db", type=float, dest="lambda_th_db",
                        help="override outage threshold (dB)")

    mod_opts = argparse.ArgumentParser(add_help=False)
    mod_opts.add_argument("--mi", type=int, help="RQAM in-phase order")
    mod_opts.add_argument("--mq", type=int, help="RQAM quadrature order")
    mod_opts.add_argument("--beta", type=float, help="RQAM spacing ratio")
    mod_opts.add_argument("--m", type=int, help="HQAM order")

    for name in ("op", "aser-rqam", "aser-hqam", "acc"):
        p = sub.add_parser(name, parents=[common, mod_opts], help=f"analytical {name}")
        p.set_defaults(func=lambda a, _name=name: cmd_metric(a, _name))

    p = sub.add_parser("sweep", parents=[common, mod_opts], help="metric curve over transmit power")
    p.add_argument("--metric", required=True, choices=("op", "aser-rqam", "aser-hqam", "acc"))
    p.add_argument("--ps-dbm-range", dest="range", help="start:stop:step (dBm)")
    p.add_argument("--with-mc", action="store_true")
    p.add_argument("--with-dnn", metavar="MODEL", help="surrogate model file to overlay")
    p.add_argument("--with-asymptote", action="store_true")
    p.add_argument("--trials", type=int, help="override sim.trials")
    p.add_argument("--phase", help="ideal | random | quantized:Q")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc", parents=[common, mod_opts], help="single Monte Carlo estimate")
    p.add_argument("--metric", required=True, choices=("op", "aser-rqam", "aser-hqam", "acc"))
    p.add_argument("--trials", type=int)
    p.add_argument("--phase", help="ideal | random | quantized:Q")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("train", parents=[common], help="train a surrogate net")
    p.add_argument("--net", required=True, choices=("op", "aser"))
    p.add_argument("--out-model", required=True)
    p.add_argument("--samples", type=int, help="outage dataset rows (desk default 20000)")
    p.add_argument("--full-scale", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common, mod_opts], help="surrogate predictions")
    p.add_argument("--net", required=True, choices=("op", "aser"))
    p.add_argument("--model", required=True)
    p.add_argument("--sweep", action="store_true", help="predict over the sweep range")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", parents=[common, mod_opts], help="closed form vs surrogate timing")
    p.add_argument("--metric", default="aser-rqam")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--cf-samples", type=int, default=12, dest="cf_samples",
                   help="closed-form evals to measure before extrapolating")
    p.add_argument("--model", help="trained model (untrained same-shape net if omitted)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("selftest", parents=[common], help="quick internal consistency battery")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("emit-defaults", help="print the default scenario file")
    p.set_defaults(func=cmd_emit_defaults)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except IrsThzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
