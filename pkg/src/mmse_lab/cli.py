"""Command-line entry point: rate sweeps, figure datasets and verification suites.

Exit codes: 0 success, 1 failed verification, 2 bad flags or config,
3 clustered correlation eigenvalues without ``--fallback``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import asymptotics as asy
from . import closedform as cf
from . import figures, verify
from .channels import build_model
from .matkit import RepeatedEigenvalues
from .montecarlo import mc_estimate

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_REPEATED = 0, 1, 2, 3
HEADER_TAIL = ("stderr", "method", "model")


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[float]:
    """``start:step:stop`` (inclusive), or a single value, in dB."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad range {text!r}") from None
    if len(vals) == 1:
        return vals
    if len(vals) != 3:
        raise UsageError(f"range must be start:step:stop, got {text!r}")
    start, step, stop = vals
    if step <= 0 or stop < start:
        raise UsageError(f"range {text!r} must have step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _add_channel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=("iid", "separable", "rician"), default="iid")
    p.add_argument("--nr", type=int, default=2)
    p.add_argument("--nt", type=int, default=2)
    p.add_argument("--rho-r", type=float, default=0.0, help="exponential receive correlation")
    p.add_argument("--rho-t", type=float, default=0.0, help="exponential transmit correlation")
    p.add_argument("--k", type=float, default=0.0, help="Rician K-factor")
    p.add_argument("--theta-r", type=float, default=0.0)
    p.add_argument("--theta-t", type=float, default=0.0)
    p.add_argument("--config", help="JSON channel description (overrides the flags above)")


def _model_from_args(args):
    if args.config:
        try:
            with open(args.config) as fh:
                desc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    else:
        desc = {"model": args.model, "nr": args.nr, "nt": args.nt, "rho_r": args.rho_r,
                "rho_t": args.rho_t, "k_factor": args.k, "theta_r": args.theta_r,
                "theta_t": args.theta_t}
    try:
        return build_model(desc)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmse-lab",
                                     description="MIMO MMSE receiver sum-rate toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    rate = sub.add_parser("rate", help="sweep a rate over snr or Eb/N0")
    _add_channel_args(rate)
    axis = rate.add_mutually_exclusive_group()
    axis.add_argument("--snr-db", default="0:5:30")
    axis.add_argument("--ebno-db")
    rate.add_argument("--method", default="closed",
                      choices=("closed", "mc", "decomposition", "affine", "wideband"))
    rate.add_argument("--receiver", choices=asy.RECEIVERS, default="mmse")
    rate.add_argument("--samples", type=int, default=100_000)
    rate.add_argument("--seed", type=int, default=1)
    rate.add_argument("--fallback", choices=("mc", "quad"))
    rate.add_argument("--output")

    fig = sub.add_parser("figure", help="emit a figure dataset")
    fig.add_argument("--id", type=int, required=True, choices=sorted(figures.PRESETS))
    fig.add_argument("--samples", type=int, default=100_000)
    fig.add_argument("--seed", type=int, default=1)
    fig.add_argument("--output")

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("--suite", required=True,
                     choices=("identity", "specfun", "closed-vs-mc", "asymptote"))
    _add_channel_args(ver)
    ver.add_argument("--trials", type=int, default=1000)
    ver.add_argument("--samples", type=int, default=100_000)
    ver.add_argument("--seed", type=int, default=1)
    ver.add_argument("--snr-db", default="0:10:30")
    ver.add_argument("--output")
    return parser


# --- output ---------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v + 0.0)  # no "-0.0" in output
    return str(v)


def render_csv(rows, x_name: str = "snr_db", value_name: str = "value_bits") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((x_name, value_name) + HEADER_TAIL)
    for row in rows:
        w.writerow([_fmt(float(v)) if isinstance(v, (np.floating, np.integer)) else _fmt(v)
                    for v in row])
    return buf.getvalue()


def emit(text: str, path: str | None) -> None:
    """Write to stdout, or atomically to ``path`` (temp file then rename)."""
    if not path:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mmse-lab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- commands ---------------------------------------------------------------------

def _exact_value(model, snr: float, receiver: str, fallback: str | None, args):
    """Exact rate, or the requested fallback path. Returns (value, stderr, method)."""
    try:
        if receiver == "mmse":
            return cf.mmse_sum_rate(model, snr), None, "closed"
        return cf.opt_mi(model, snr), None, "closed"
    except (RepeatedEigenvalues, cf.ClosedFormUnavailable) as exc:
        if fallback is None:
            raise exc
    if fallback == "mc":
        metric = "mmse_rate" if receiver == "mmse" else "opt_mi"
        est = mc_estimate(model, snr, metric, args.samples, args.seed)
        return est.mean, est.stderr, "mc"
    ev = verify.quad_mi_evaluator(model)
    if receiver == "mmse":
        return cf.theorem1_compose(model, snr, ev), None, "quad"
    return ev(snr, None), None, "quad"


def run_sweep(args) -> int:
    model = _model_from_args(args)
    if args.samples < 100:
        raise UsageError("--samples must be >= 100")
    desc = model.describe()
    rows = []
    if args.ebno_db is not None:
        x_name = "ebno_db"
        lo = asy.low_snr_params(model, args.receiver)
        for db in parse_range(args.ebno_db):
            ebno = 10.0 ** (db / 10.0)
            if args.method == "wideband":
                rows.append((db, asy.wideband_rate(lo, ebno), None, "wideband", desc))
                continue
            if args.method not in ("closed", "mc"):
                raise UsageError("an Eb/N0 axis supports --method closed, mc or wideband")
            if args.method == "mc":
                metric = "mmse_rate" if args.receiver == "mmse" else "opt_mi"
                fn = verify.mc_rate_fn(model, metric, args.samples, args.seed)
                method = "mc"
            else:
                fallback = args.fallback

                def fn(s, fallback=fallback):
                    return _exact_value(model, s, args.receiver, fallback, args)[0]
                method = "closed"
            try:
                snr = asy.ebno_to_snr(fn, ebno)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            rows.append((db, snr / ebno, None, method, desc))
        emit(render_csv(rows, x_name), args.output)
        return EXIT_OK

    grid = parse_range(args.snr_db)
    if args.method == "wideband":
        raise UsageError("--method wideband needs --ebno-db")
    hi = asy.high_snr_params(model, args.receiver) if args.method == "affine" else None
    for db in grid:
        snr = 10.0 ** (db / 10.0)
        if args.method == "closed":
            v, se, method = _exact_value(model, snr, args.receiver, args.fallback, args)
        elif args.method == "mc":
            metric = "mmse_rate" if args.receiver == "mmse" else "opt_mi"
            est = mc_estimate(model, snr, metric, args.samples, args.seed)
            v, se, method = est.mean, est.stderr, "mc"
        elif args.method == "decomposition":
            if args.receiver != "mmse":
                raise UsageError("--method decomposition applies to the mmse receiver")
            est = cf.theorem1_compose(model, snr,
                                      verify.mc_mi_evaluator(model, args.samples, args.seed))
            v, se, method = est.mean, est.stderr, "decomposition"
        else:
            v, se, method = asy.affine_rate(hi, snr), None, "affine"
        rows.append((db, v, se, method, desc))
    emit(render_csv(rows), args.output)
    return EXIT_OK


def run_figure(args) -> int:
    rows, x_name, value_name = figures.build_rows(args.id, args.samples, args.seed)
    emit(render_csv(rows, x_name, value_name), args.output)
    return EXIT_OK


def run_verify(args) -> int:
    if args.suite == "identity":
        report = verify.suite_identity(args.trials, args.seed)
    elif args.suite == "specfun":
        report = verify.suite_specfun()
    elif args.suite == "closed-vs-mc":
        model = _model_from_args(args)
        report = verify.suite_closed_vs_mc(model, parse_range(args.snr_db), args.samples,
                                           args.seed)
    else:
        report = verify.suite_asymptote(_model_from_args(args), args.samples, args.seed)
    emit(json.dumps(report, indent=2, default=float) + "\n", args.output)
    return EXIT_OK if report["pass"] else EXIT_VERIFY


_RANGE_FLAGS = ("--snr-db", "--ebno-db")


def _glue_negative_ranges(argv: list[str]) -> list[str]:
    # argparse reads "-6:2:4" as an option; fold it into "--ebno-db=-6:2:4"
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _RANGE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negative_ranges(list(sys.argv[1:] if argv is None else argv))
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    handlers = {"rate": run_sweep, "figure": run_figure, "verify": run_verify}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"mmse-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RepeatedEigenvalues as exc:
        print(f"mmse-lab: {exc}; rerun with --fallback mc|quad", file=sys.stderr)
        return EXIT_REPEATED
    except cf.ClosedFormUnavailable as exc:
        print(f"mmse-lab: error: {exc}; use --method mc or --fallback mc", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"mmse-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
