"""Command line front end.

Exit codes: 0 success, 1 usage/input/validation failure, 2 fixed-point
divergence (partial estimate still written, plus a .diverged marker),
3 Monte-Carlo budget too small for the requested false-alarm rate.
Human diagnostics go to standard error; results go to files or stdout.
"""

import argparse
import json
import logging
import re
import sys
import time

import numpy as np

from .detectors import (
    DetectionReport,
    glr_cg,
    matched_filter,
    nmf,
    nmf_phi,
    threshold_from_pfa,
)
from .errors import CollinearSaturation, EscovError, InsufficientTrials, NoConvergence
from .estimators import IterationControl, cg_cov, m_cov, m_exp_cov, scm, tyler_fixed_point
from .fileio import read_matrix, read_samples, write_matrix
from .linalg import HermitianPD, Normalization, as_matrix, hermitianize, normalize
from .scores import named_score
from .simulate import (
    SCENARIO_ADAPTIVE,
    SCENARIO_KNOWN,
    ScenarioConfig,
    TextureSpec,
    run_scenario,
    write_curves_csv,
)
from .toeplitz import burg_tyler

_NORM_MODES = {
    "det": Normalization.UNIT_DET,
    "trace": Normalization.UNIT_TRACE_MEAN,
    "none": Normalization.NONE,
}


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # negative grid values like -6,-2,0 or -4:2:0.5 are flag values
        # here, not options; the stock matcher only accepts bare numbers
        self._negative_number_matcher = re.compile(r"^-\d[\d.,:eE+-]*$")

    # argparse exits 2 on usage errors; 2 is reserved for divergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _err(message):
    print(f"escov: {message}", file=sys.stderr)


# ---------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------

def _run_estimator(method, X, ctrl):
    # returns (covariance matrix, iterations, residual)
    if method == "scm":
        return as_matrix(scm(X)), 0, 0.0
    if method == "tyler":
        fit, info = tyler_fixed_point(X, ctrl, normalization=Normalization.UNIT_TRACE_MEAN,
                                      return_info=True)
        return as_matrix(fit), info.iterations, info.residual
    if method == "burg-tyler":
        fit, info = burg_tyler(X, ctrl, return_info=True)
        # the estimator outputs the inverse covariance; files carry the
        # covariance so estimates chain into --cov directly
        return hermitianize(np.linalg.inv(as_matrix(fit))), info.iterations, info.residual
    if method == "cg":
        fit, info = cg_cov(X, ctrl, return_info=True)
        return as_matrix(fit), info.iterations, info.residual
    if method.startswith("m:"):
        score = named_score(method[2:], X.dim, X.c_k)
        est = m_cov if score.nonneg_derivative else m_exp_cov
        fit, info = est(score, X, ctrl, return_info=True)
        return as_matrix(fit), info.iterations, info.residual
    raise ValueError(f"unknown method {method!r}")


def cmd_estimate(args) -> int:
    X = read_samples(args.input)
    ctrl = IterationControl(eps=args.eps, max_iter=args.max_iter)
    mode = _NORM_MODES[args.normalize] if args.normalize else None
    t0 = time.perf_counter()
    converged = True
    message = None
    try:
        C, iterations, residual = _run_estimator(args.method, X, ctrl)
    except NoConvergence as exc:
        if exc.estimate is None:
            raise
        converged = False
        message = str(exc)
        C = as_matrix(exc.estimate)
        if args.method == "burg-tyler":
            C = hermitianize(np.linalg.inv(C))
        iterations = exc.iterations
        residual = exc.residual
    wall = time.perf_counter() - t0

    if mode is not None and mode is not Normalization.NONE:
        C = as_matrix(normalize(C, mode))
    write_matrix(args.output, C)
    sidecar = {
        "command": "estimate",
        "method": args.method,
        "input": args.input,
        "output": args.output,
        "normalize": args.normalize or ("trace" if args.method == "tyler" else "none"),
        "eps": args.eps,
        "max_iter": args.max_iter,
        "field": X.field.value,
        "d": X.dim,
        "n": X.count,
        "matrix": "covariance",
        "iterations": iterations,
        "residual": residual,
        "converged": converged,
        "wall_time_s": wall,
    }
    if message:
        sidecar["error"] = message
    with open(f"{args.output}.json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    if not converged:
        with open(f"{args.output}.diverged", "w") as fh:
            fh.write(message + "\n")
        _err(message)
        _err(f"partial estimate written to {args.output}")
        return 2
    print(
        f"{args.method}: wrote {args.output} "
        f"(d={X.dim}, N={X.count}, {iterations} iterations, residual {residual:.3e})"
    )
    return 0


# ---------------------------------------------------------------------
# detect
# ---------------------------------------------------------------------

def _single_sample(path):
    X = read_samples(path)
    if X.count != 1:
        raise EscovError(f"{path}: expected exactly one sample row, found {X.count}")
    return X.columns[:, 0]


def cmd_detect(args) -> int:
    x = _single_sample(args.signal)
    s = _single_sample(args.steering)
    R = HermitianPD(read_matrix(args.cov))
    d = R.dim
    if args.threshold is not None:
        threshold = args.threshold
    else:
        threshold = threshold_from_pfa(args.detector, args.pfa, [d])
    fns = {"nmf": nmf, "nmf-phi": nmf_phi, "glr-cg": glr_cg, "mf": matched_filter}
    saturated = False
    try:
        statistic = fns[args.detector](x, s, R)
    except CollinearSaturation as exc:
        statistic = exc.statistic
        saturated = True
    report = DetectionReport.from_statistic(statistic, threshold, saturated=saturated)
    payload = {
        "detector": args.detector,
        "statistic": report.statistic,
        "threshold": report.threshold,
        "detected": report.detected,
        "saturated": report.saturated,
        "per_channel": report.per_channel,
        "pfa": args.pfa,
    }
    print(json.dumps(payload, indent=2))
    return 0


# ---------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------

def _parse_snr(text):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"snr range must be start:stop:step, got {text!r}")
        a, b, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("snr step must be positive")
        return tuple(np.arange(a, b + step * 1e-9, step))
    return tuple(float(p) for p in text.split(","))


def cmd_simulate(args) -> int:
    texture = None if args.texture.lower() == "none" else TextureSpec.parse(args.texture)
    detectors = tuple(args.detectors.split(",")) if args.detectors else None
    cfg = ScenarioConfig(
        scenario=args.scenario,
        snr_grid_db=_parse_snr(args.snr),
        trials=args.trials,
        seed=args.seed,
        channel_dims=tuple(int(v) for v in args.dims.split(",")),
        d=args.d,
        n_train=args.n_train,
        pfa=args.pfa,
        texture=texture,
        correlation=args.correlation,
        detectors=detectors,
        eps=args.fit_eps,
        max_iter=args.fit_max_iter,
        max_h0_trials=args.max_h0_trials,
        chunk=args.chunk,
    )
    result = run_scenario(cfg)
    write_curves_csv(result, args.out)
    for curve in result.curves:
        pds = [pt.pd for pt in curve.points]
        span = f"Pd {pds[0]:.3f} -> {pds[-1]:.3f}" if pds else "no points"
        note = f", {len(curve.aborted)} aborted" if curve.aborted else ""
        print(
            f"{curve.detector}: threshold {curve.threshold:.6g} "
            f"(pfa {curve.pfa_achieved:g}), {span} over {len(curve.points)} points{note}"
        )
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="escov", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    est = sub.add_parser("estimate",
                         help="fit a covariance/scatter matrix from samples")
    est.add_argument("--method", required=True,
                     help="scm | tyler | burg-tyler | cg | m:<score> (m:gaussian, m:t3, m:cg)")
    est.add_argument("--input", required=True, help="sample file")
    est.add_argument("--output", required=True, help="matrix file to write")
    est.add_argument("--normalize", choices=sorted(_NORM_MODES),
                     help="normalization of the written matrix (default: trace for tyler, none otherwise)")
    est.add_argument("--eps", type=float, default=1e-10, help="fixed-point residual tolerance")
    est.add_argument("--max-iter", type=int, default=100, help="iteration budget")
    est.set_defaults(func=cmd_estimate)

    det = sub.add_parser("detect",
                         help="run one detection test, JSON report on stdout")
    det.add_argument("--detector", required=True, choices=["nmf", "nmf-phi", "glr-cg", "mf"])
    det.add_argument("--signal", required=True, help="sample file with the test vector (one row)")
    det.add_argument("--steering", required=True, help="sample file with the steering vector (one row)")
    det.add_argument("--cov", required=True, help="matrix file with the known covariance")
    thr = det.add_mutually_exclusive_group(required=True)
    thr.add_argument("--pfa", type=float, help="false-alarm rate for threshold calibration")
    thr.add_argument("--threshold", type=float, help="explicit threshold")
    det.set_defaults(func=cmd_detect)

    sim = sub.add_parser("simulate",
                         help="Monte-Carlo detection-probability curves to CSV")
    sim.add_argument("--scenario", required=True, choices=[SCENARIO_KNOWN, SCENARIO_ADAPTIVE])
    sim.add_argument("--snr", required=True,
                     help="SNR grid in dB: start:stop:step or comma list")
    sim.add_argument("--trials", type=int, default=200000, help="H1 trials per grid point")
    sim.add_argument("--seed", type=int, required=True, help="stream seed; same seed, same CSV")
    sim.add_argument("--out", required=True, help="CSV path")
    sim.add_argument("--dims", default="2,4,8,16", help="channel dimensions (known-cov scenario)")
    sim.add_argument("--d", type=int, default=8, help="dimension (adaptive scenario)")
    sim.add_argument("--n-train", type=int, default=22, help="training samples per trial (adaptive)")
    sim.add_argument("--pfa", type=float, default=1e-3,
                     help="false-alarm rate (desk default 1e-3; 1e-4 costs ~10x the null trials)")
    sim.add_argument("--texture", default="none",
                     help="none | inverse-gamma:<shape> | gamma:<shape>")
    sim.add_argument("--correlation", default="identity",
                     help="identity | ar:<mu1> | custom:<matrix file>")
    sim.add_argument("--detectors", help="comma list overriding the scenario default set")
    sim.add_argument("--fit-eps", type=float, default=1e-8, help="estimator tolerance inside trials")
    sim.add_argument("--fit-max-iter", type=int, default=100)
    sim.add_argument("--max-h0-trials", type=int, default=10**7,
                     help="budget cap for null-hypothesis calibration")
    sim.add_argument("--chunk", type=int, default=8192, help="trials per processing block")
    sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InsufficientTrials as exc:
        _err(str(exc))
        return 3
    except NoConvergence as exc:
        _err(str(exc))
        return 2
    except (EscovError, OSError, ValueError) as exc:
        _err(str(exc))
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
