"""Command-line driver: simulation runs, offline re-certification, parameter
sweeps, and linear-operator spectra.

Exit codes: 0 success, 1 certificate violation, 2 blowup, 3 bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .certificates import (CertificateSuite, TrajectoryRecord,
                           measured_decay_rate, replay_certificates,
                           summarize_records)
from .config import (ConfigError, RunConfig, build_config,
                     build_initial_state, config_hash, load_config)
from .dynamics import assemble_linear, spectral_abscissa
from .integrator import run as integrate
from .spectral import eigenvalue_grid, write_snapshot

EXIT_OK = 0
EXIT_CERT_FAIL = 1
EXIT_BLOWUP = 2
EXIT_CONFIG = 3

_PLOT_COLS = ("t", "lap_psi_sq", "theta_sq", "phi_sq", "grad_theta_sq",
              "grad_phi_sq", "gradlap_psi_sq", "E_Y", "E_half")

_SWEEP_COLS = ("parameter", "value", "status", "t_end", "E_Y_final",
               "theta_sq_final", "phi_sq_final", "lap_psi_sq_final",
               "decay_rate_measured", "spectral_abscissa", "M7", "decay_ok",
               "psi_absorb_ok", "h1_absorb_ok", "max_ebal_resid",
               "config_hash")

_SWEEP_PARAMS = ("Ra", "Pr", "Da", "C", "lambda", "gamma", "alpha", "a")


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_CONFIG


def _resolve(path_str, base_dir: Path) -> Path:
    p = Path(path_str)
    return p if p.is_absolute() else base_dir / p


def _effective_checks(rc: RunConfig) -> dict:
    if rc.cert_enabled:
        return rc.checks
    return {name: False for name in rc.checks}


def _write_jsonl(path: Path, rc: RunConfig, records, failure):
    with open(path, "w") as fh:
        fh.write(json.dumps({"meta": rc.resolved,
                             "config_hash": rc.config_hash},
                            sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict(), sort_keys=True) + "\n")
        if failure is not None:
            fh.write(json.dumps({"blowup": failure,
                                 "config_hash": rc.config_hash},
                                sort_keys=True) + "\n")


def _execute(rc: RunConfig, jsonl_path: Path, base_dir: Path):
    """Build IC, integrate with the certificate suite attached, write the
    JSONL stream plus any configured snapshot/plot artifacts."""
    s0 = build_initial_state(rc.ic, rc.dom, rc.p)
    suite = CertificateSuite(rc.p, rc.dom, rc.cert_cfg, s0, rc.config_hash,
                             checks=_effective_checks(rc))
    traj = integrate(s0, rc.p, rc.stepper, monitors=suite,
                     snapshot_times=tuple(float(x)
                                          for x in rc.output["snapshot_at"]))
    jsonl_path.parent.mkdir(parents=True, exist_ok=True)
    _write_jsonl(jsonl_path, rc, suite.records, traj.failure)
    snap_paths = []
    prefix = rc.output["snapshot_prefix"]
    prefix = _resolve(prefix, base_dir) if prefix \
        else jsonl_path.with_suffix("")
    for t, st in traj.snapshots:
        sp = Path(f"{prefix}_t{t:g}.snap")
        write_snapshot(sp, st.psi, st.theta, st.phi, t)
        snap_paths.append(sp)
    if rc.output["plot_csv"]:
        with open(_resolve(rc.output["plot_csv"], base_dir), "w",
                  newline="") as fh:
            w = csv.writer(fh)
            w.writerow(_PLOT_COLS)
            for rec in suite.records:
                d = rec.to_json_dict()
                w.writerow([d[c] for c in _PLOT_COLS])
    return suite, traj, snap_paths


def _print_report(rows):
    print("certificates:")
    for row in rows:
        status = "skipped" if row["checked"] == 0 else \
            ("pass" if row["ok"] else "FAIL")
        line = (f"  {row['name']:<11} {status:<7} "
                f"{row['passed']}/{row['checked']}")
        if row["worst_slack"] is not None:
            line += f"  worst {row['worst_slack']:.3e} @ t={row['worst_t']:g}"
        if row["lhs"] is not None:
            line += f"  lhs {row['lhs']:.6e}"
            if row["rhs"] is not None:
                line += f"  rhs {row['rhs']:.6e}"
        print(line)
        print(f"      {row['inequality']}")


def _verdict_exit(rows, failure) -> int:
    if failure is not None:
        return EXIT_BLOWUP
    if any(row["ok"] is False for row in rows):
        return EXIT_CERT_FAIL
    return EXIT_OK


def cmd_run(args) -> int:
    cfg_path = Path(args.config)
    try:
        rc = load_config(cfg_path)
    except ConfigError as e:
        return _fail(str(e))
    base_dir = cfg_path.resolve().parent
    jsonl_path = _resolve(rc.output["jsonl"], base_dir) \
        if rc.output["jsonl"] else cfg_path.with_suffix(".jsonl")
    try:
        suite, traj, snap_paths = _execute(rc, jsonl_path, base_dir)
    except (ConfigError, ValueError) as e:
        return _fail(str(e))
    p, dom, k = rc.p, rc.dom, suite.k
    print(f"run {cfg_path.name}  hash {rc.config_hash}")
    print(f"  Ra={p.Ra:g} Pr={p.Pr:g} Da={p.Da:g} C={p.C:g} "
          f"lambda={p.lam:g} gamma={p.gamma:g} alpha={p.alpha:g} a={p.a:g}"
          + ("  conduction" if p.conduction_coupling else ""))
    print(f"  modes {dom.Nx}x{dom.Nz}, grid {dom.Mx + 1}x{dom.Mz + 1}, "
          f"dt={rc.stepper.dt:g}, t_end={rc.stepper.t_end:g}, "
          f"scheme={rc.stepper.scheme}"
          + (", linear only" if rc.stepper.linear_only else ""))
    print(f"  constants: M7={k.M7:.6g} M8={k.M8:.6g} M9={k.M9:.6g} "
          f"t0={k.t0:.6g} M1={k.M1:.6g} M2={k.M2:.6g} "
          f"rho0^2={k.rho0_sq:.6g}")
    print(f"  wrote {jsonl_path} ({len(suite.records)} records)")
    for sp in snap_paths:
        print(f"  wrote {sp}")
    if traj.failure is not None:
        print(f"  BLOWUP at t={traj.failure['t']:g} "
              f"({traj.failure['field']}); partial stream retained")
    rows = summarize_records(suite.records)
    _print_report(rows)
    code = _verdict_exit(rows, traj.failure)
    print(f"verdict: {'PASS' if code == EXIT_OK else 'FAIL'}")
    return code


def cmd_certify(args) -> int:
    path = Path(args.timeseries)
    try:
        text = path.read_text()
    except OSError as e:
        return _fail(str(e))
    if not text:
        return _fail(f"{path}: empty file")
    if not text.endswith("\n"):
        return _fail(f"{path}: truncated (no final newline)")
    lines = text.splitlines()
    try:
        head = json.loads(lines[0])
        resolved = head["meta"]
        stored_hash = head["config_hash"]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        return _fail(f"{path}:1: not a meta line ({e})")
    if config_hash(resolved) != stored_hash:
        return _fail(f"{path}: config hash {stored_hash} does not match "
                     "its own config document")
    records, blowup = [], None
    for i, ln in enumerate(lines[1:], start=2):
        try:
            d = json.loads(ln)
        except json.JSONDecodeError as e:
            return _fail(f"{path}:{i}: malformed JSON ({e.msg})")
        if not isinstance(d, dict):
            return _fail(f"{path}:{i}: not a record object")
        if "blowup" in d:
            if i != len(lines):
                return _fail(f"{path}:{i}: blowup marker before end of file")
            blowup = d["blowup"]
            continue
        if d.get("config_hash") != stored_hash:
            return _fail(f"{path}:{i}: mixed config hashes "
                         f"({d.get('config_hash')!r} vs {stored_hash!r})")
        try:
            records.append(TrajectoryRecord.from_json_dict(d))
        except TypeError as e:
            return _fail(f"{path}:{i}: incomplete record ({e})")
    if not records:
        return _fail(f"{path}: no trajectory records")
    dt, t_end = resolved["dt"], resolved["t_end"]
    if blowup is None and records[-1].t < records[0].t + t_end - 0.5 * dt:
        return _fail(f"{path}: truncated: last sample t={records[-1].t:g} "
                     f"but the run covers t_end={t_end:g}")

    doc = json.loads(json.dumps(resolved))
    doc["ic"] = {"kind": "zero"}    # IC files need not still exist offline
    if args.mso is not None:
        doc["certificates"]["mso"] = args.mso
    try:
        rc = build_config(doc)
    except ConfigError as e:
        return _fail(f"{path}: stored config does not rebuild: {e}")
    replayed, k = replay_certificates(records, rc.p, rc.dom, rc.cert_cfg,
                                      checks=_effective_checks(rc))
    if args.mso is None:
        mismatches = _flag_mismatches(records, replayed)
        if mismatches:
            for m in mismatches[:10]:
                print(f"  {m}", file=sys.stderr)
            return _fail(f"{path}: {len(mismatches)} stored flags do not "
                         "reproduce (stream corrupt or version skew)")
    print(f"certify {path.name}  hash {stored_hash}  "
          f"({len(records)} records)")
    print(f"  constants: M7={k.M7:.6g} M8={k.M8:.6g} M9={k.M9:.6g} "
          f"t0={k.t0:.6g} M_so={k.M_so:g}")
    if args.mso is not None:
        print(f"  M_so overridden to {args.mso:g}")
    if blowup is not None:
        print(f"  stream ends in BLOWUP at t={blowup.get('t', '?')}")
    rows = summarize_records(replayed)
    _print_report(rows)
    code = _verdict_exit(rows, blowup)
    print(f"verdict: {'PASS' if code == EXIT_OK else 'FAIL'}")
    return code


_REPLAYED_FIELDS = ("decay_ok", "decay_slack", "diss_ok", "diss_slack",
                    "psi_absorb_ok", "psi_absorb_slack",
                    "psi_absorb_ball_ok", "h1_absorb_ok", "h1_absorb_slack")


def _flag_mismatches(stored, replayed) -> list[str]:
    out = []
    for rs, rr in zip(stored, replayed):
        for f in _REPLAYED_FIELDS:
            a, b = getattr(rs, f), getattr(rr, f)
            if a != b and not (a is None and b is None):
                out.append(f"t={rs.t:g}: {f} stored {a!r} recomputed {b!r}")
    return out


def _sweep_child(param, value, doc, jsonl_path: Path, base_dir: Path) -> dict:
    row = {c: "" for c in _SWEEP_COLS}
    row["parameter"], row["value"] = param, value
    try:
        rc = build_config(doc, base_dir)
        suite, traj, _ = _execute(rc, jsonl_path, base_dir)
        last = suite.records[-1]
        row.update(t_end=last.t, E_Y_final=last.E_Y,
                   theta_sq_final=last.theta_sq, phi_sq_final=last.phi_sq,
                   lap_psi_sq_final=last.lap_psi_sq,
                   config_hash=rc.config_hash, M7=suite.k.M7)
        ts = [r.t for r in suite.records]
        row["decay_rate_measured"] = measured_decay_rate(
            ts, [r.theta_sq + r.phi_sq for r in suite.records],
            t_lo=min(1.0, 0.5 * last.t), t_hi=last.t)
        try:
            row["spectral_abscissa"] = spectral_abscissa(
                assemble_linear(rc.p, rc.dom))
        except ValueError:
            pass    # dense spectrum refused at this truncation
        v = suite.verdict()
        for key in ("decay_ok", "psi_absorb_ok", "h1_absorb_ok"):
            if v[key] is not None:
                row[key] = v[key]
        resids = [r.ebal_resid for r in suite.records
                  if r.ebal_resid is not None]
        if resids:
            row["max_ebal_resid"] = max(resids)
        row["status"] = "ok" if traj.failure is None \
            else f"blowup t={traj.failure['t']:g}"
    except Exception as e:
        row["status"] = f"error: {e}"
    return row


def cmd_sweep(args) -> int:
    spec_path = Path(args.spec)
    try:
        spec = json.loads(spec_path.read_text())
    except OSError as e:
        return _fail(str(e))
    except json.JSONDecodeError as e:
        return _fail(f"{spec_path}:{e.lineno}:{e.colno}: {e.msg}")
    unknown = set(spec) - {"parameter", "values", "base", "base_path",
                           "output_dir", "csv"}
    if unknown:
        return _fail(f"unknown sweep keys: {sorted(unknown)}")
    param = spec.get("parameter")
    if param not in _SWEEP_PARAMS:
        return _fail(f"sweep parameter must be one of {_SWEEP_PARAMS}, "
                     f"got {param!r}")
    values = spec.get("values")
    if not isinstance(values, list):
        return _fail("sweep 'values' must be a list")
    base_dir = spec_path.resolve().parent
    if ("base" in spec) == ("base_path" in spec):
        return _fail("sweep needs exactly one of 'base' or 'base_path'")
    if "base" in spec:
        base = spec["base"]
    else:
        bp = _resolve(spec["base_path"], base_dir)
        try:
            base = json.loads(bp.read_text())
        except OSError as e:
            return _fail(str(e))
        except json.JSONDecodeError as e:
            return _fail(f"{bp}:{e.lineno}:{e.colno}: {e.msg}")

    out_dir = _resolve(spec.get("output_dir", spec_path.stem + "_runs"),
                       base_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = _resolve(spec.get("csv", spec_path.stem + ".csv"), base_dir)

    jobs = []
    for v in values:
        doc = json.loads(json.dumps(base))
        doc[param] = v
        try:
            tag = f"{float(v):g}"
        except (TypeError, ValueError):
            tag = str(v)
        jobs.append((param, v, doc, out_dir / f"{param}={tag}.jsonl",
                     base_dir))
    workers = os.cpu_count() or 1
    try:
        workers = min(workers, int(os.environ["LTNE_THREADS"]))
    except (KeyError, ValueError):
        pass
    workers = max(1, min(workers, max(1, len(jobs))))
    if jobs:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(lambda j: _sweep_child(*j), jobs))
    else:
        rows = []
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=_SWEEP_COLS)
        w.writeheader()
        for row in rows:
            w.writerow(row)
    bad = [r for r in rows if str(r["status"]) != "ok"]
    print(f"sweep {param} over {len(rows)} values -> {csv_path}")
    for r in bad:
        print(f"  {param}={r['value']}: {r['status']}")
    return EXIT_OK


def cmd_linearize(args) -> int:
    cfg_path = Path(args.config)
    try:
        rc = load_config(cfg_path)
    except ConfigError as e:
        return _fail(str(e))
    L = assemble_linear(rc.p, rc.dom)
    try:
        absc = spectral_abscissa(L)
    except ValueError as e:
        return _fail(str(e))
    eigs = L.block_eigenvalues()
    mu = eigenvalue_grid(rc.dom)
    out = Path(args.out) if args.out else cfg_path.with_suffix(".spectrum.csv")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("m", "n", "mu", "psi_eig", "block_eig1_re",
                    "block_eig1_im", "block_eig2_re", "block_eig2_im"))
        for i in range(rc.dom.Nx):
            for j in range(rc.dom.Nz):
                e1, e2 = eigs[i, j]
                w.writerow((i + 1, j + 1, repr(float(mu[i, j])),
                            repr(float(L.lpsi[i, j])),
                            repr(float(e1.real)), repr(float(e1.imag)),
                            repr(float(e2.real)), repr(float(e2.imag))))
    print(f"linearize {cfg_path.name}: {rc.dom.Nx}x{rc.dom.Nz} modes "
          f"-> {out}")
    print(f"  spectral abscissa: {absc:.12g}")
    if rc.dom.Nx <= 8 and rc.dom.Nz <= 8:
        dense = np.linalg.eigvals(L.dense())
        union = np.concatenate([L.lpsi.ravel().astype(complex),
                                eigs.ravel()])
        d1 = max(np.min(np.abs(dense - u)) for u in union)
        d2 = max(np.min(np.abs(union - d)) for d in dense)
        print(f"  dense cross-check ({3 * rc.dom.Nx * rc.dom.Nz} modes): "
              f"max eigenvalue mismatch {max(d1, d2):.3e}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ltne",
        description="Sine-Galerkin simulator for couple-stress two-"
                    "temperature porous convection with runtime certificate "
                    "checking.")
    sub = parser.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("run", help="integrate a config, certify on the fly")
    pr.add_argument("config", help="JSON run configuration")
    pr.set_defaults(func=cmd_run)
    pc = sub.add_parser("certify",
                        help="re-evaluate certificates from a JSONL stream")
    pc.add_argument("timeseries", help="JSONL file written by 'run'")
    pc.add_argument("--mso", type=float, default=None,
                    help="override the Sobolev embedding constant M_so")
    pc.set_defaults(func=cmd_certify)
    ps = sub.add_parser("sweep", help="run a one-parameter family, emit CSV")
    ps.add_argument("spec", help="JSON sweep specification")
    ps.set_defaults(func=cmd_sweep)
    pl = sub.add_parser("linearize",
                        help="per-mode spectrum of the linear operator")
    pl.add_argument("config", help="JSON run configuration")
    pl.add_argument("--out", default=None, help="output CSV path")
    pl.set_defaults(func=cmd_linearize)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
