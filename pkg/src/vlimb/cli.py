"""Command-line front end: validate models, run scenarios, recap logged
runs, and serve the live gateway.

Exit codes: 0 success (or scenario passed), 1 scenario/model failed,
2 usage or configuration error.
"""
import argparse
import hashlib
import os
import sys
from dataclasses import replace

from .model import (ModelError, ModelParseError, default_vlimb, load_model,
                    validate_model)
from .plant import PlantParams
from . import scenarios as scn

_PLOT_TEMPLATE = '''"""Auto-generated plotting companion for {csv_name}.

Run next to the CSV it was emitted with:  python3 {plot_name}
Needs matplotlib (not a package dependency; plots ship as data + script).
"""
import csv
import matplotlib.pyplot as plt

with open("{csv_name}") as fh:
    reader = csv.reader(fh)
    columns = next(reader)
    rows = [[float(v) for v in row] for row in reader]

col = {{name: [r[i] for r in rows] for i, name in enumerate(columns)}}
t = col["t_s"]

fig, axes = plt.subplots(3, 1, sharex=True, figsize=(9, 10))

for name in columns:
    if name.startswith("q_ref_"):
        axes[0].plot(t, col[name], "--", lw=0.8)
    elif name.startswith("q_"):
        axes[0].plot(t, col[name], label=name[2:-4])
axes[0].set_ylabel("joint angle [rad]")
axes[0].legend(fontsize=7, ncol=3)

for name in columns:
    if name.startswith("f_"):
        axes[1].plot(t, col[name], label=name[2:-2])
axes[1].axhline({cap:.1f}, color="k", ls=":", lw=1.0, label="cap")
axes[1].set_ylabel("wire tension [N]")
axes[1].legend(fontsize=7, ncol=3)

axes[2].plot(t, col["ee_height_m"], label="hand height")
axes[2].set_ylabel("height [m]")
axes[2].set_xlabel("t [s]")
axes[2].legend(fontsize=7)

fig.suptitle("{csv_name}")
fig.tight_layout()
plt.show()
'''


def _resolve_model(path):
    """Model search order: explicit path, then VLIMB_MODEL, then the packaged
    default. The literal name 'default-model' forces the packaged default."""
    if path == "default-model":
        return default_vlimb()
    if path is None:
        path = os.environ.get("VLIMB_MODEL")
    if path is None or path == "default-model":
        return default_vlimb()
    return load_model(path)


def _apply_overrides(model, args):
    ctl = model.controller
    patch = {}
    if getattr(args, "kp", None) is not None:
        patch["kp_nm_per_rad"] = (float(args.kp),) * len(model.joints)
    if getattr(args, "kd", None) is not None:
        patch["kd_nms_per_rad"] = (float(args.kd),) * len(model.joints)
    if patch:
        model = replace(model, controller=replace(ctl, **patch))
    return model


def _cmd_validate(args):
    model = _resolve_model(args.model_path or args.model)
    validate_model(model)
    print(f"model '{model.name}' OK: {len(model.joints)} joints, "
          f"{len(model.elements)} elements, modes: "
          f"{', '.join(model.mode_names())}")
    return 0


def _write_artifacts(report, out_dir, cap):
    os.makedirs(out_dir, exist_ok=True)
    csv_name = f"{report.name}.csv"
    plot_name = f"{report.name}_plot.py"
    scn.write_csv(report, os.path.join(out_dir, csv_name))
    scn.write_summary(report, os.path.join(out_dir, f"{report.name}_summary.txt"))
    with open(os.path.join(out_dir, plot_name), "w") as fh:
        fh.write(_PLOT_TEMPLATE.format(csv_name=csv_name, plot_name=plot_name,
                                       cap=cap))


def _cmd_run(args):
    model = _apply_overrides(_resolve_model(args.model), args)
    params = PlantParams() if args.dt is None else PlantParams(dt_s=args.dt)
    name = args.scenario
    if name == "reachability":
        report = scn.run_reachability(model=model, params=params)
    elif name == "manipulation":
        payload = 0.575 if args.payload_kg is None else args.payload_kg
        report = scn.run_manipulation(payload_kg=payload, model=model,
                                      params=params)
    else:
        payload = 60.0 if args.payload_kg is None else args.payload_kg
        report = scn.run_lift(payload_kg=payload, model=model, params=params)

    cap = model.controller.tension_cap_n
    _write_artifacts(report, args.out, cap)
    sys.stdout.write(scn.summary_text(report))
    if name == "lift":
        ok = report.metrics["peak_tension_n"] <= cap + 1e-9
        print(f"max_tension_N <= {cap:.0f}: {'PASS' if ok else 'FAIL'}")
    print(f"artifacts in {args.out}/")
    return 0 if report.passed else 1


def _cmd_report(args):
    if not os.path.isfile(args.csv):
        raise FileNotFoundError(args.csv)
    columns, rows = scn.read_csv(args.csv)
    with open(args.csv, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    t = rows[:, 0]
    print(f"{args.csv}: {rows.shape[0]} rows x {len(columns)} cols, "
          f"t {t[0]:.3f}..{t[-1]:.3f} s")
    print(f"sha256: {digest}")
    for i, name in enumerate(columns):
        if name.startswith(("f_", "i_")) or name == "ee_height_m":
            print(f"  {name}: max {rows[:, i].max():.4g} "
                  f"min {rows[:, i].min():.4g}")
    return 0


def _cmd_serve(args):
    from . import gateway
    model = _apply_overrides(_resolve_model(args.model), args)
    params = PlantParams() if args.dt is None else PlantParams(dt_s=args.dt)
    gateway.serve(model, params, host=args.host, port=args.port,
                  time_scale=args.time_scale, stream_hz=args.stream_hz,
                  console_dir=args.console_dir)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="vlimb",
        description="5-DOF wire-driven extension arm: simulator tools")
    p.add_argument("--model", default=None,
                   help="model JSON path (default: $VLIMB_MODEL or the "
                        "packaged model; 'default-model' forces the package)")
    sub = p.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("validate", help="load and validate a model file")
    v.add_argument("model_path", nargs="?", default=None, metavar="model",
                   help="model path or 'default-model'")

    r = sub.add_parser("run", help="run a scenario, write CSV/summary/plot")
    r.add_argument("scenario", choices=sorted(scn.SCENARIOS))
    r.add_argument("--payload-kg", type=float, default=None)
    r.add_argument("--dt", type=float, default=None, help="plant step [s]")
    r.add_argument("--kp", type=float, default=None,
                   help="proportional gain override, all joints [N m/rad]")
    r.add_argument("--kd", type=float, default=None,
                   help="damping gain override, all joints [N m s/rad]")
    r.add_argument("--out", default="out", help="artifact directory")

    q = sub.add_parser("report", help="recap a previously written CSV log")
    q.add_argument("csv")

    s = sub.add_parser("serve", help="run the live gateway")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int,
                   default=int(os.environ.get("VLIMB_PORT", "8733")))
    s.add_argument("--time-scale", type=float, default=1.0,
                   help="sim seconds per wall second")
    s.add_argument("--stream-hz", type=float, default=30.0)
    s.add_argument("--console-dir", default=None,
                   help="static console bundle to serve at /")
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--kp", type=float, default=None)
    s.add_argument("--kd", type=float, default=None)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, 0 on --help; keep its code
        return int(e.code or 0)

    try:
        if args.cmd == "validate":
            return _cmd_validate(args)
        if args.cmd == "run":
            return _cmd_run(args)
        if args.cmd == "report":
            return _cmd_report(args)
        if args.cmd == "serve":
            return _cmd_serve(args)
    except ModelParseError as e:
        print(f"error: unreadable model: {e}", file=sys.stderr)
        return 2
    except ModelError as e:
        # well-formed file, bad physics: a failed check, not a usage error
        print(f"invalid model: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    parser.error(f"unknown command {args.cmd!r}")


def main_entry():
    raise SystemExit(main())


if __name__ == "__main__":
    main_entry()
