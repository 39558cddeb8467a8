"""Command-line interface.

Subcommands: channel gen|import, optimize, ber, classify, sweep ber|rx,
pipeline. Every run is deterministic for a fixed seed and config; reports are
CSV files with a YAML header block, and report-producing commands also render
matplotlib figures next to the CSV unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from .channel import (
    ChannelMatrix,
    LayoutConfig,
    PathLossModel,
    generate_layout,
    load_channel,
    save_channel,
    synth_channel,
)
from .errors import AirhdcError
from .experiments import (
    ExperimentConfig,
    PipelineConfig,
    run_ber_sweep,
    run_classification,
    run_ota_pipeline,
    run_scalability,
)
from .optimizer import evaluate, search_exhaustive, search_greedy
from .ota import PhaseAlphabet, PhaseAssignment, ber_montecarlo
from .reporting import config_to_dict, write_report

_EXPERIMENT_FIELDS = (
    "dim",
    "classes",
    "bundle_sizes",
    "mode",
    "channel",
    "flip_p",
    "trials",
    "seed",
    "distinct_classes",
)


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(" ", "").split(",") if x)


def _parse_layout(text: str) -> tuple[int, int]:
    try:
        m, n = text.lower().split("x")
        return int(m), int(n)
    except ValueError:
        raise ValueError(f"--layout expects MxN (e.g. 3x64), got {text!r}") from None


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return data


def _experiment_config(args, **overrides) -> ExperimentConfig:
    """Defaults <- config file <- explicit CLI flags."""
    merged = {}
    file_cfg = _load_config_file(getattr(args, "config", None))
    for name in _EXPERIMENT_FIELDS:
        if name in file_cfg:
            value = file_cfg[name]
            merged[name] = tuple(value) if name == "bundle_sizes" else value
        flag = getattr(args, name, None)
        if flag is not None:
            merged[name] = flag
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**merged)


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    file_cfg = _load_config_file(getattr(args, "config", None))
    return int(file_cfg.get("seed", 0))


def _figures_enabled(args) -> bool:
    return not getattr(args, "no_figures", False)


def _figure_path(out: str, suffix: str = "") -> Path:
    p = Path(out)
    return p.with_name(p.stem + suffix + ".png")


# -- channel -------------------------------------------------------------------


def _cmd_channel_gen(args) -> int:
    m, n = _parse_layout(args.layout)
    cfg = LayoutConfig(
        n_tx=m,
        n_rx=n,
        package_l1=args.package_l1,
        package_l2=args.package_l2,
        rx_pitch=args.rx_pitch,
        tx_offset=args.tx_offset,
        carrier_ghz=args.carrier_ghz,
    )
    model = PathLossModel(
        exponent=args.pl_exponent,
        ref_loss_db=args.ref_loss_db,
        phase_jitter_deg=args.phase_jitter_deg,
        rx_fade_db=args.rx_fade_db,
        ripple_db=args.ripple_db,
        phase_model=args.phase_model,
    )
    rng = np.random.default_rng(_seed(args))
    ch = synth_channel(generate_layout(cfg), model, n0=args.n0, rng=rng)
    save_channel(ch, args.out)
    print(f"wrote {m}x{n} channel to {args.out}")
    return 0


def _cmd_channel_import(args) -> int:
    ch = load_channel(args.input, n0=args.n0)
    save_channel(ch, args.out)
    print(f"imported {ch.n_tx}x{ch.n_rx} channel to {args.out}")
    return 0


# -- optimize --------------------------------------------------------------------


def _cmd_optimize(args) -> int:
    ch = load_channel(args.channel)
    alphabet = PhaseAlphabet.uniform(args.phases)
    if args.method == "greedy" or (args.method == "auto" and ch.n_tx > 5):
        rng = np.random.default_rng(np.random.SeedSequence(_seed(args), spawn_key=(5,)))
        report = search_greedy(
            ch, alphabet, restarts=args.restarts, rng=rng, objective=args.objective
        )
    else:
        report = search_exhaustive(ch, alphabet, objective=args.objective)
    report.best.save_csv(args.out)
    print(
        f"{report.method} search over {report.explored} assignments: "
        f"mean BER {report.profile.mean:.3e}, max {report.profile.max:.3e}"
    )
    if args.report:
        meta = {
            "command": "optimize",
            "channel": str(args.channel),
            "phases": args.phases,
            "method": report.method,
            "objective": args.objective,
            "seed": _seed(args),
            "explored": report.explored,
            "assignment": [list(p) for p in report.best.pairs_deg],
            "n0": ch.n0,
            "mean_ber": report.profile.mean,
            "max_ber": report.profile.max,
        }
        rows = [
            {"rx": i, "ber": float(b)} for i, b in enumerate(report.profile.per_rx)
        ]
        write_report(args.report, meta, ["rx", "ber"], rows)
        if _figures_enabled(args):
            from .plots import save_ber_profile_figure

            save_ber_profile_figure(report.profile.per_rx, _figure_path(args.report))
    return 0


# -- ber -------------------------------------------------------------------------


def _cmd_ber(args) -> int:
    ch = load_channel(args.channel)
    if args.n0 is not None:
        ch = ch.with_n0(args.n0)
    pa = PhaseAssignment.load_csv(args.assignment)
    profile = evaluate(ch, pa)
    rows = []
    rng = np.random.default_rng(np.random.SeedSequence(_seed(args), spawn_key=(7,)))
    for rx in range(ch.n_rx):
        row = {"rx": rx, "ber_analytic": float(profile.per_rx[rx])}
        if args.montecarlo:
            row["ber_montecarlo"] = ber_montecarlo(
                ch, pa, rx, ch.n0, args.montecarlo, rng
            )
        rows.append(row)
    for row in rows:
        line = f"rx {row['rx']:3d}  analytic {row['ber_analytic']:.6e}"
        if args.montecarlo:
            line += f"  montecarlo {row['ber_montecarlo']:.6e}"
        print(line)
    print(f"mean {profile.mean:.6e}  max {profile.max:.6e}")
    if args.out:
        meta = {
            "command": "ber",
            "channel": str(args.channel),
            "assignment": str(args.assignment),
            "n0": ch.n0,
            "montecarlo_trials": args.montecarlo or 0,
            "seed": _seed(args),
            "mean_ber": profile.mean,
            "max_ber": profile.max,
        }
        fields = ["rx", "ber_analytic"] + (["ber_montecarlo"] if args.montecarlo else [])
        write_report(args.out, meta, fields, rows)
        if _figures_enabled(args):
            from .plots import save_ber_profile_figure

            save_ber_profile_figure(profile.per_rx, _figure_path(args.out))
    return 0


# -- classify -------------------------------------------------------------------


def _cmd_classify(args) -> int:
    cfg = _experiment_config(args)
    report = run_classification(cfg)
    for cell in report.cells:
        print(
            f"M={cell.m:2d} {cell.mode:8s} {cell.channel}(p={cell.flip_p:g}) "
            f"accuracy {cell.accuracy:.3f} +/- {cell.ci_halfwidth:.3f}"
        )
    if args.out:
        meta = {"command": "classify", "config": config_to_dict(cfg)}
        fields = ["m", "mode", "channel", "flip_p", "trials", "accuracy",
                  "ci_halfwidth", "scoring"]
        rows = [
            {f: getattr(c, f) for f in fields} for c in report.cells
        ]
        write_report(args.out, meta, fields, rows)
        hist_path = Path(args.out).with_suffix(".similarity.csv")
        hist_fields = ["m", "mode", "similarity", "matched", "unmatched"]
        hist_rows = [
            {
                "m": h.m,
                "mode": h.mode,
                "similarity": s,
                "matched": int(h.matched[s]),
                "unmatched": int(h.unmatched[s]),
            }
            for h in report.histograms
            for s in range(len(h.matched))
            if h.matched[s] or h.unmatched[s]
        ]
        write_report(hist_path, meta, hist_fields, hist_rows)
        if _figures_enabled(args):
            from .plots import save_accuracy_figure

            save_accuracy_figure(report, _figure_path(args.out))
    return 0


# -- sweeps ----------------------------------------------------------------------


def _cmd_sweep_ber(args) -> int:
    cfg = _experiment_config(args, bundle_sizes=(1,), mode="baseline")
    grid = _parse_float_list(args.grid)
    points = run_ber_sweep(cfg, grid)
    for pt in points:
        print(f"p={pt.flip_p:.3f} accuracy {pt.accuracy:.4f} +/- {pt.ci_halfwidth:.4f}")
    if args.out:
        meta = {"command": "sweep ber", "grid": list(grid), "config": config_to_dict(cfg)}
        rows = [
            {"flip_p": pt.flip_p, "accuracy": pt.accuracy, "ci_halfwidth": pt.ci_halfwidth}
            for pt in points
        ]
        write_report(args.out, meta, ["flip_p", "accuracy", "ci_halfwidth"], rows)
        if _figures_enabled(args):
            from .plots import save_sweep_figure

            save_sweep_figure(points, _figure_path(args.out))
    return 0


def _cmd_sweep_rx(args) -> int:
    m, n_max = _parse_layout(args.layout)
    counts = _parse_int_list(args.rx_list)
    layout_cfg = LayoutConfig(n_tx=m, n_rx=max(counts))
    model = PathLossModel(
        exponent=args.pl_exponent,
        ref_loss_db=args.ref_loss_db,
        phase_jitter_deg=args.phase_jitter_deg,
        rx_fade_db=args.rx_fade_db,
        ripple_db=args.ripple_db,
        phase_model=args.phase_model,
    )
    if max(counts) > n_max:
        raise ValueError(f"--rx-list exceeds layout size {n_max}")
    report = run_scalability(
        layout_cfg,
        counts,
        model=model,
        alphabet=PhaseAlphabet.uniform(args.phases),
        method=args.method,
        seed=_seed(args),
        n0=args.n0,
    )
    for pt in report.points:
        print(f"N={pt.n_rx:3d} mean BER {pt.mean_ber:.4e} max {pt.max_ber:.4e}")
    if report.subset_invariant_ok is not None:
        print(f"subset optimality invariant: {'ok' if report.subset_invariant_ok else 'VIOLATED'}")
    if args.out:
        meta = {
            "command": "sweep rx",
            "layout": args.layout,
            "rx_list": list(counts),
            "method": args.method,
            "phases": args.phases,
            "seed": _seed(args),
            "subset_invariant_ok": report.subset_invariant_ok,
        }
        rows = [
            {"n_rx": pt.n_rx, "mean_ber": pt.mean_ber, "max_ber": pt.max_ber,
             "explored": pt.explored}
            for pt in report.points
        ]
        write_report(args.out, meta, ["n_rx", "mean_ber", "max_ber", "explored"], rows)
        if _figures_enabled(args):
            from .plots import save_scalability_figure

            save_scalability_figure(report, _figure_path(args.out))
    return 0


# -- pipeline --------------------------------------------------------------------


def _cmd_pipeline(args) -> int:
    ch = None
    if args.channel:
        ch = load_channel(args.channel)
        m, n = ch.n_tx, ch.n_rx
    else:
        m, n = _parse_layout(args.layout)
    hdc = _experiment_config(args, bundle_sizes=(m,))
    cfg = PipelineConfig(
        layout=LayoutConfig(n_tx=m, n_rx=n),
        model=PathLossModel(
            exponent=args.pl_exponent,
            ref_loss_db=args.ref_loss_db,
            phase_jitter_deg=args.phase_jitter_deg,
            rx_fade_db=args.rx_fade_db,
            ripple_db=args.ripple_db,
            phase_model=args.phase_model,
        ),
        alphabet=PhaseAlphabet.uniform(args.phases),
        method=args.method,
        target_mean_ber=args.target_ber,
        hdc=hdc,
        seed=_seed(args),
    )
    report = run_ota_pipeline(cfg, ch)
    print(
        f"chosen assignment: {report.assignment.pairs_deg}; calibrated N0 {report.n0:.4e}"
    )
    print(f"mean BER {report.profile.mean:.4e}  max BER {report.profile.max:.4e}")
    accs = [o.accuracy for o in report.per_rx]
    print(f"per-RX accuracy: min {min(accs):.3f} mean {float(np.mean(accs)):.3f}")
    if args.out:
        meta = {
            "command": "pipeline",
            "config": config_to_dict(cfg),
            "channel_file": str(args.channel) if args.channel else None,
            "assignment": [list(p) for p in report.assignment.pairs_deg],
            "n0": report.n0,
            "mean_ber": report.profile.mean,
            "max_ber": report.profile.max,
            "search_method": report.search.method,
            "explored": report.search.explored,
        }
        rows = [
            {"rx": o.rx, "ber": o.ber, "accuracy": o.accuracy,
             "ci_halfwidth": o.ci_halfwidth}
            for o in report.per_rx
        ]
        write_report(args.out, meta, ["rx", "ber", "accuracy", "ci_halfwidth"], rows)
        report.assignment.save_csv(Path(args.out).with_suffix(".assignment.csv"))
        if _figures_enabled(args):
            from .plots import save_pipeline_figure

            save_pipeline_figure(report, _figure_path(args.out))
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="rng seed (default 0)")
    common.add_argument("--config", default=None, help="YAML config file")
    common.add_argument("--no-figures", action="store_true",
                        help="skip matplotlib figure rendering")

    geometry = argparse.ArgumentParser(add_help=False)
    geometry.add_argument("--pl-exponent", type=float, default=0.6)
    geometry.add_argument("--phase-jitter-deg", type=float, default=30.0)
    geometry.add_argument("--ref-loss-db", type=float, default=40.0)
    geometry.add_argument("--rx-fade-db", type=float, default=4.0)
    geometry.add_argument("--ripple-db", type=float, default=0.0)
    geometry.add_argument("--phase-model", choices=["separable", "geometric"],
                          default="separable")

    hdc_flags = argparse.ArgumentParser(add_help=False)
    hdc_flags.add_argument("--dim", type=int, default=None)
    hdc_flags.add_argument("--classes", type=int, default=None)
    hdc_flags.add_argument("--trials", type=int, default=None)

    parser = argparse.ArgumentParser(
        prog="airhdc",
        description="Over-the-air majority bundling simulator for HDC scale-out",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_channel = sub.add_parser("channel", help="generate or import channel matrices")
    channel_sub = p_channel.add_subparsers(dest="channel_command", required=True)

    p_gen = channel_sub.add_parser("gen", parents=[common, geometry],
                                   help="synthesize a channel from the package layout")
    p_gen.add_argument("--layout", required=True, help="MxN, e.g. 3x64")
    p_gen.add_argument("--package-l1", type=float, default=33.0)
    p_gen.add_argument("--package-l2", type=float, default=30.0)
    p_gen.add_argument("--rx-pitch", type=float, default=3.75)
    p_gen.add_argument("--tx-offset", type=float, default=7.5)
    p_gen.add_argument("--carrier-ghz", type=float, default=60.0)
    p_gen.add_argument("--n0", type=float, default=1e-7)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_channel_gen)

    p_imp = channel_sub.add_parser("import", parents=[common],
                                   help="validate and canonicalize a channel CSV")
    p_imp.add_argument("--input", required=True)
    p_imp.add_argument("--n0", type=float, default=None)
    p_imp.add_argument("--out", required=True)
    p_imp.set_defaults(func=_cmd_channel_import)

    p_opt = sub.add_parser("optimize", parents=[common],
                           help="search TX phase assignments minimizing BER")
    p_opt.add_argument("--channel", required=True)
    p_opt.add_argument("--phases", type=int, default=8)
    p_opt.add_argument("--method", choices=["auto", "exhaustive", "greedy"], default="auto")
    p_opt.add_argument("--objective", choices=["mean", "max"], default="mean")
    p_opt.add_argument("--restarts", type=int, default=8)
    p_opt.add_argument("--out", required=True, help="assignment CSV")
    p_opt.add_argument("--report", default=None, help="per-RX BER profile CSV")
    p_opt.set_defaults(func=_cmd_optimize)

    p_ber = sub.add_parser("ber", parents=[common],
                           help="evaluate BER of an assignment on a channel")
    p_ber.add_argument("--channel", required=True)
    p_ber.add_argument("--assignment", required=True)
    p_ber.add_argument("--n0", type=float, default=None)
    p_ber.add_argument("--montecarlo", type=int, default=None, metavar="TRIALS")
    p_ber.add_argument("--out", default=None)
    p_ber.set_defaults(func=_cmd_ber)

    p_cls = sub.add_parser("classify", parents=[common, hdc_flags],
                           help="bundled classification accuracy (Table-style runs)")
    p_cls.add_argument("--sizes", dest="bundle_sizes", type=_parse_int_list, default=None)
    p_cls.add_argument("--mode", choices=["baseline", "permuted", "both"], default=None)
    p_cls.add_argument("--channel", dest="channel", choices=["ideal", "flip"], default=None)
    p_cls.add_argument("--flip-p", dest="flip_p", type=float, default=None)
    p_cls.add_argument("--distinct-classes", dest="distinct_classes",
                       action="store_const", const=True, default=None)
    p_cls.add_argument("--out", default=None)
    p_cls.set_defaults(func=_cmd_classify)

    p_sweep = sub.add_parser("sweep", help="parameter sweeps")
    sweep_sub = p_sweep.add_subparsers(dest="sweep_command", required=True)

    p_sb = sweep_sub.add_parser("ber", parents=[common, hdc_flags],
                                help="accuracy vs. flip probability (M=1)")
    p_sb.add_argument("--grid", required=True, help="comma-separated flip probabilities")
    p_sb.add_argument("--out", default=None)
    p_sb.set_defaults(func=_cmd_sweep_ber)

    p_sr = sweep_sub.add_parser("rx", parents=[common, geometry],
                                help="mean BER vs. receiver count on nested layouts")
    p_sr.add_argument("--layout", required=True, help="MxN of the largest layout")
    p_sr.add_argument("--rx-list", required=True, help="ascending receiver counts")
    p_sr.add_argument("--phases", type=int, default=8)
    p_sr.add_argument("--method", choices=["exhaustive", "greedy"], default="exhaustive")
    p_sr.add_argument("--n0", type=float, default=None)
    p_sr.add_argument("--out", default=None)
    p_sr.set_defaults(func=_cmd_sweep_rx)

    p_pipe = sub.add_parser("pipeline", parents=[common, geometry, hdc_flags],
                            help="channel -> optimize -> calibrate -> classify")
    p_pipe.add_argument("--layout", default=None, help="MxN for a synthetic channel")
    p_pipe.add_argument("--channel", default=None, help="channel CSV (overrides --layout)")
    p_pipe.add_argument("--phases", type=int, default=8)
    p_pipe.add_argument("--method", choices=["auto", "exhaustive", "greedy"], default="auto")
    p_pipe.add_argument("--target-ber", type=float, default=0.01)
    p_pipe.add_argument("--mode", choices=["baseline", "permuted"], default=None)
    p_pipe.add_argument("--out", default=None)
    p_pipe.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "pipeline" and not (args.channel or args.layout):
        print("error: pipeline needs --layout or --channel", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except AirhdcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
