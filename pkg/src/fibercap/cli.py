"""
Batch experiment runner.

Subcommands: ``coupling``, ``simulate``, ``validate``, ``capacity``,
``shape``.  A single JSON config file with flat per-section keys drives every
run; artifacts are CSV/JSON files that embed the config fingerprint and seed,
so identical inputs give byte-identical outputs.

Exit codes: 0 success, 1 numerical failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import capacity as cap
from . import channel, coupling, ssfm
from .blocks import Constellation, SymbolBlock, sample_block
from .config import ConfigError, dbm_to_watt, make_config
from .ripple import RippleDistribution

_LINK_KEYS = {
    "attenuation_db_km", "beta2_ps2_km", "gamma_w_km", "span_km", "n_spans",
    "baud_ghz", "pulse_fwhm_ps", "noise_density_w_hz", "bandwidth_ghz",
}


class UsageError(Exception):
    pass


def load_config(path):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    link = raw.get("link", {})
    unknown = set(link) - _LINK_KEYS
    if unknown:
        raise UsageError(f"unknown link keys: {sorted(unknown)}")
    try:
        cfg = make_config(**link)
    except ConfigError as exc:
        raise UsageError(f"config validation failed: {exc}") from exc
    return cfg, raw


def _write_csv(path, header_comment, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(header_comment + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(row)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_coupling(args):
    cfg, raw = load_config(args.config)
    section = raw.get("coupling", {})
    n_xi = int(args.n_xi or section.get("n_xi", 24))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fp = cfg.fingerprint()

    report_lines = [f"# fingerprint={fp}"]
    if args.tail_tol is not None:
        choice = coupling.select_memory(cfg, float(args.tail_tol), n_xi=n_xi)
        memory = choice.window
        report_lines += [
            f"tail_tol,{args.tail_tol!r}",
            f"memory,{choice.window}",
            f"decay_slope,{choice.slope!r}",
            f"fit_r_squared,{choice.r_squared!r}",
            f"tail_fraction,{choice.tail_fraction!r}",
        ]
    else:
        memory = int(args.window or section.get("memory", 8))
        report_lines += [f"memory,{memory}"]
    tensor = coupling.integrate_tensor(cfg, memory, n_xi=n_xi)
    coupling.save_tensor(tensor, out_dir / "tensor.bin")
    _write_csv(
        out_dir / "coupling_magnitude.csv",
        f"# fingerprint={fp} memory={memory}",
        ["m", "n", "abs_ss", "abs_sn"],
        [(m, n, repr(float(a)), repr(float(b)))
         for m, n, a, b in coupling.tensor_heatmap_rows(tensor)],
    )
    (out_dir / "coupling_report.csv").write_text("\n".join(report_lines) + "\n")
    print(f"coupling tensor (M={memory}) written to {out_dir}")
    return 0


def _constellation(kind, power):
    if kind == "ripple":
        raise UsageError("simulate/validate use qam64 or gaussian_iid")
    return Constellation(kind=kind, power=power)


def cmd_simulate(args):
    cfg, raw = load_config(args.config)
    power = dbm_to_watt(args.power_dbm)
    const = _constellation(args.constellation, power)
    X, Y = ssfm.run_ensemble(cfg, const, args.blocks, args.block_length,
                             args.seed, max_workers=args.threads)
    ssfm.save_dataset(args.out, X, Y, fingerprint=cfg.fingerprint(),
                      seed=args.seed)
    print(f"dataset {X.shape[0]}x{X.shape[1]} written to {args.out}")
    return 0


def _parse_powers(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad power list {text!r}") from exc


def cmd_validate(args):
    cfg, raw = load_config(args.config)
    section = raw.get("validate", {})
    powers = _parse_powers(args.power_sweep) if args.power_sweep else section.get(
        "powers_dbm", [-15.0, -10.0, -5.0]
    )
    blocks = int(args.blocks or section.get("blocks", 16))
    d = int(args.block_length or section.get("block_length", 512))
    orders = int(section.get("orders", args.orders))
    memory = int(section.get("memory", 32))
    tensor = coupling.integrate_tensor(cfg, memory)
    fp = cfg.fingerprint()
    gram = float(cfg.pulse.autocorrelation(cfg.symbol_period))

    rows = []
    for p_dbm in powers:
        s = float(dbm_to_watt(p_dbm))
        const = Constellation(kind="gaussian_iid", power=s)
        X, Y = ssfm.run_ensemble(cfg, const, blocks, d, args.seed,
                                 max_workers=args.threads)
        num_lin = num_first = num_second = 0.0
        den = 0.0
        for b in range(blocks):
            blk = SymbolBlock(symbols=X[b], power=s)
            ords = channel.deterministic_orders(tensor, blk, min(orders, 2), cfg)
            first = ords[0] + ords[1] if orders >= 1 else ords[0]
            preds = {"lin": X[b], "first": _gram_convolve(first, gram)}
            if orders >= 2:
                preds["second"] = _gram_convolve(first + ords[2], gram)
            den += np.sum(np.abs(X[b]) ** 2)
            num_lin += np.sum(np.abs(Y[b] - preds["lin"]) ** 2)
            num_first += np.sum(np.abs(Y[b] - preds["first"]) ** 2)
            if orders >= 2:
                num_second += np.sum(np.abs(Y[b] - preds["second"]) ** 2)
        row = [repr(float(p_dbm)),
               repr(float(10 * np.log10(num_lin / den))),
               repr(float(10 * np.log10(num_first / den)))]
        row.append(repr(float(10 * np.log10(num_second / den))) if orders >= 2 else "")
        rows.append(row)
    _write_csv(args.out, f"# fingerprint={fp} seed={args.seed} memory={memory}",
               ["power_dbm", "nmse_linear_db", "nmse_first_db", "nmse_second_db"],
               rows)
    print(f"validation sweep written to {args.out}")
    return 0


def _gram_convolve(symbols, a1):
    out = symbols.copy()
    out[1:] += a1 * symbols[:-1]
    out[:-1] += a1 * symbols[1:]
    return out


def cmd_capacity(args):
    cfg, raw = load_config(args.config)
    section = raw.get("capacity", {})
    bounds = (args.bounds or section.get("bounds", "ss,gn,i0,i1")).split(",")
    powers = _parse_powers(args.powers) if args.powers else section.get(
        "powers_dbm", list(np.linspace(-10, 10, 9))
    )
    memory = int(section.get("memory", 48))
    q = int(section.get("q", 2))
    budget = int(section.get("budget", 2000))
    mc = int(section.get("mc_samples", 1 << 16))
    noise = cfg.noise_power
    if noise <= 0:
        raise UsageError("capacity needs a positive noise_density_w_hz")
    tensor = coupling.integrate_tensor(cfg, memory)
    fp = cfg.fingerprint()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for p_dbm in powers:
        s = float(dbm_to_watt(p_dbm))
        for b in bounds:
            b = b.strip()
            if b == "ss":
                val, err = cap.rate_uncompensated(tensor, s, noise, cfg), 0.0
            elif b == "gn":
                val = cap.rate_uncompensated(tensor, s, noise, cfg,
                                             infinite_memory=True)
                err = 0.0
            elif b == "i0":
                val, err = cap.gaussian_input_bound(tensor, s, noise), 0.0
            elif b == "i1":
                try:
                    val, err = cap.two_ring_bound(tensor, s, noise).bits, 0.0
                except (cap.BelowSpliceError, cap.NoRootError) as exc:
                    rows.append([repr(float(p_dbm)), "i1", "", "",
                                 f"skipped: {exc.__class__.__name__}"])
                    continue
            elif b == "i2":
                opt = cap.optimize_ripple(q, s, noise, tensor, budget=budget,
                                          seed=args.seed, n_final=mc)
                val, err = opt.bits, opt.stderr
                dump = dict(opt.dist.to_dict(), achieved_bits=val,
                            stderr=err, power_dbm=float(p_dbm),
                            fingerprint=fp, seed=args.seed)
                name = f"ripple_q{q}_{p_dbm:+.2f}dBm.json".replace("+", "p").replace("-", "m")
                (out_dir / name).write_text(json.dumps(dump, sort_keys=True, indent=1))
            else:
                raise UsageError(f"unknown bound {b!r}")
            rows.append([repr(float(p_dbm)), b, repr(float(val)),
                         repr(float(err)), ""])
    _write_csv(out_dir / "capacity_curve.csv",
               f"# fingerprint={fp} seed={args.seed}",
               ["power_dbm", "bound", "bits_per_symbol", "stderr", "note"],
               rows)
    print(f"capacity curves written to {out_dir}")
    return 0


def cmd_shape(args):
    cfg, raw = load_config(args.config)
    section = raw.get("capacity", {})
    noise = cfg.noise_power
    if noise <= 0:
        raise UsageError("shape needs a positive noise_density_w_hz")
    memory = int(section.get("memory", 48))
    tensor = coupling.integrate_tensor(cfg, memory)
    s = float(dbm_to_watt(args.power_dbm))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    results = {}
    for q in (int(tok) for tok in args.q.split(",")):
        opt = cap.optimize_ripple(q, s, noise, tensor, budget=args.budget,
                                  seed=args.seed)
        results[f"q{q}"] = dict(opt.dist.to_dict(), achieved_bits=opt.bits,
                                stderr=opt.stderr, converged=opt.converged)
    payload = {
        "fingerprint": cfg.fingerprint(),
        "seed": args.seed,
        "power_dbm": args.power_dbm,
        "results": results,
    }
    out.write_text(json.dumps(payload, sort_keys=True, indent=1))
    print(f"shaping results written to {out}")
    return 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="fibercap",
                                 description="nonlinear fiber channel experiments")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker cap for ensemble runs")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coupling", help="integrate and cache the coupling tensor")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--window", type=int, help="memory half-width M")
    g.add_argument("--tail-tol", type=float, help="select M from tail tolerance")
    p.add_argument("--n-xi", type=int, help="quadrature nodes per distance panel")
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("simulate", help="split-step ensemble dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--power-dbm", type=float, required=True)
    p.add_argument("--blocks", type=int, default=8)
    p.add_argument("--block-length", type=int, default=512)
    p.add_argument("--constellation", default="gaussian_iid",
                   choices=["gaussian_iid", "qam64"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="model-vs-simulator NMSE sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--power-sweep", help="comma-separated powers in dBm")
    p.add_argument("--blocks", type=int)
    p.add_argument("--block-length", type=int)
    p.add_argument("--orders", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("capacity", help="capacity lower-bound curves")
    p.add_argument("--config", required=True)
    p.add_argument("--bounds", help="comma list from ss,gn,i0,i1,i2")
    p.add_argument("--powers", help="comma-separated powers in dBm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("shape", help="optimize ring-mixture input distributions")
    p.add_argument("--config", required=True)
    p.add_argument("--power-dbm", type=float, required=True)
    p.add_argument("--q", default="2,3", help="comma list of level counts")
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=cmd_shape)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (coupling.QuadratureError, coupling.MemoryFitError,
            cap.NoRootError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
