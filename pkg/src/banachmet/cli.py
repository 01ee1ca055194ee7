"""Command-line front end: experiments, invariant suites and reports.

Every command writes ``report.json`` (sorted keys, no timestamps, so equal
config and seed give byte-identical files) into the output directory, plus
``ledger.csv`` and/or ``cauchy.csv`` when it produces per-step data.

Exit codes: 0 when every certificate passes, 2 for configuration errors,
3 when a certificate fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, ambient, config, met, spectral, suites, volume
from .ambient import Subspace
from .cocycles import CocycleConfigError, analytic_exponent_list, describe_kinds, stream

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATE = 3


class _ConfigArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors map to the config-error exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def jsonable(x):
    """Plain JSON types; non-finite floats become the strings inf, -inf, nan."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v + 0.0  # folds -0.0 into 0.0
    return x


def dumps_report(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"


def _write_csv(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def certificate(name: str, statement: str, passed: bool, **values) -> dict:
    return {"name": name, "statement": statement, "passed": bool(passed), **values}


# ---------------------------------------------------------------------------
# Commands: each returns (results, certificates, csv tables)
# ---------------------------------------------------------------------------

def _q_max(cfg, d):
    return min(cfg.get("q_max", min(d, volume.Q_MAX)), d, volume.Q_MAX)


def _oracle_certificate(spec, K: dict, tol: float):
    oracle = analytic_exponent_list(spec)
    if oracle is None:
        return None
    errs = []
    for q, k in K.items():
        want = oracle[q - 1]
        if want == -math.inf or k == -math.inf:
            errs.append(0.0 if want == k else math.inf)
        else:
            errs.append(abs(k - want))
    worst = max(errs) if errs else 0.0
    return certificate("analytic_exponent_agreement",
                       "each increment K_q is within tol of the q-th analytic exponent",
                       worst <= tol, worst_error=worst, tol=tol, analytic=oracle[:len(K)])


def cmd_exponents(cfg):
    spec = config.cocycle(cfg)
    N = int(cfg["N"])
    traj = stream(spec, N)
    q_max = _q_max(cfg, spec.dim)
    ledger = met.growth_rates(traj, q_max, N, n_starts=int(cfg["n_starts"]))
    certs = []
    try:
        report = met.spectrum_from_ledger(ledger)
        certs.append(certificate("growth_ledger_consistency",
                                 "increments K_q are non-increasing up to twice the ledger noise",
                                 True, noise=ledger.noise_level))
    except met.LedgerError as err:
        certs.append(certificate("growth_ledger_consistency",
                                 "increments K_q are non-increasing up to twice the ledger noise",
                                 False, message=str(err), noise=ledger.noise_level))
        return {"cocycle": spec.to_dict(), "ledger": ledger.to_dict()}, certs, \
            {"ledger.csv": ledger.csv_rows()}
    oc = _oracle_certificate(spec, report.K, cfg["tolerances"]["exponent"])
    if oc is not None:
        certs.append(oc)
    results = {"cocycle": spec.to_dict(), "exponents": report.to_dict(), "ledger": ledger.to_dict()}
    return results, certs, {"ledger.csv": ledger.csv_rows()}


def _cauchy_rows(logs):
    yield ["level", "n", "d_H"]
    for i, log in enumerate(logs, start=2):
        for n, v in log:
            yield [i, n, v]


def cmd_filtration(cfg):
    spec = config.cocycle(cfg)
    N = int(cfg["N"])
    traj = stream(spec, N)
    q_max = _q_max(cfg, spec.dim)
    tol = cfg["tolerances"].get("restricted")
    ledger = met.growth_rates(traj, q_max, N)
    tables = {"ledger.csv": ledger.csv_rows()}
    stmt = "growth rates restricted to each level match the shifted ledger rates"
    try:
        filt, report = met.filtration(traj, N, q_max, n_slow=int(cfg["n_slow"]), tol=tol)
    except met.LedgerError as err:
        cert = certificate("restricted_growth_rates", stmt, False, message=str(err))
        return {"cocycle": spec.to_dict(), "ledger": ledger.to_dict()}, [cert], tables
    certs = [certificate("restricted_growth_rates", stmt,
                         all(c["ok"] for c in filt.level_checks), checks=filt.level_checks)]
    slack = cfg["tolerances"]["cauchy_slack"]
    for i, log in enumerate(filt.cauchy_log, start=1):
        upper, lower = report.lam[i - 1], report.lam[i]
        gap = upper - lower
        delta = cfg.get("delta", gap / 10)
        slope = met._fit_slope(log)
        bound = -gap + delta + slack
        certs.append(certificate(
            f"slow_subspace_cauchy_rate_level_{i + 1}",
            "slope of log d_H(F_n, F_{n+1}) <= (lambda_{i+1} - lambda_i) + delta + slack",
            not math.isfinite(slope) or slope <= bound, slope=slope, bound=bound, delta=delta))
    oc = _oracle_certificate(spec, report.K, cfg["tolerances"]["exponent"])
    if oc is not None:
        certs.append(oc)
    results = {"cocycle": spec.to_dict(), "exponents": report.to_dict(),
               "filtration": filt.to_dict(), "ledger": ledger.to_dict()}
    tables["cauchy.csv"] = _cauchy_rows(filt.cauchy_log)
    return results, certs, tables


def _operator(cfg):
    if "operator" in cfg:
        return np.asarray(cfg["operator"], dtype=float)
    if cfg.get("cocycle", {}).get("kind") == "constant":
        return np.asarray(config.cocycle(cfg).params["matrix"], dtype=float)
    raise config.ConfigError("config error: this command needs an operator (or a constant cocycle)")


def cmd_spectral(cfg):
    sp = config.space(cfg)
    A = _operator(cfg)
    rng = np.random.default_rng(int(cfg["seed"]))
    prof = spectral.singular_profile(sp, A, _q_max(cfg, sp.dim), rng)
    certs = []
    for q, r in sorted(prof.ratios().items()):
        c = volume.gelfand_constant(q, sp.norm.is_euclidean)
        ok = not math.isfinite(r) or 1 / c * (1 - 1e-6) <= r <= c * (1 + 1e-6)
        certs.append(certificate(f"gelfand_volume_ratio_q{q}",
                                 "V_q / (c_q V_{q-1}) lies in [1/C'_q, C'_q]", ok,
                                 ratio=r, constant=c))
    if sp.norm.is_euclidean:
        s = np.linalg.svd(A, compute_uv=False)
        for q in sorted(prof.vq):
            want_v, want_c = float(np.prod(s[:q])), float(s[q - 1])
            ok_v = 0.95 * want_v <= prof.vq[q] <= want_v * (1 + 1e-9) if want_v > 0 else prof.vq[q] == 0
            ok_c = abs(prof.cq[q] - want_c) <= 0.05 * want_c if want_c > 0 else prof.cq[q] <= 1e-9
            certs.append(certificate(f"volume_growth_svd_oracle_q{q}",
                                     "V_q within [0.95, 1] x product of the top q singular values",
                                     ok_v, value=prof.vq[q], oracle=want_v))
            certs.append(certificate(f"gelfand_svd_oracle_q{q}",
                                     "c_q within 5% of the q-th singular value",
                                     ok_c, value=prof.cq[q], oracle=want_c))
    tail = [[q, math.log(v) / q if v > 0 else -math.inf] for q, v in sorted(prof.vq.items())]
    results = {"space": sp.to_dict(), "operator": A, "profile": prof.to_dict(), "tail": tail}
    return results, certs, {}


def spectral_table(results: dict) -> str:
    prof = results["profile"]
    lines = [f"{'q':>3} {'V_q':>14} {'c_q':>14} {'ratio':>10}"]
    for q in sorted(prof["vq"], key=int):
        ratio = prof["ratio"].get(q)
        rtxt = "-" if ratio is None else f"{ratio:10.4f}"
        lines.append(f"{int(q):>3} {prof['vq'][q]:14.6g} {prof['cq'][q]:14.6g} {rtxt:>10}")
    return "\n".join(lines)


def cmd_geometry(cfg):
    sp = config.space(cfg)
    subs = cfg.get("subspaces", {})
    if "E" not in subs:
        raise config.ConfigError("config error: geometry needs subspaces.E (basis vectors as columns)")
    rng = np.random.default_rng(int(cfg["seed"]))
    try:
        E = Subspace(np.asarray(subs["E"], dtype=float))
        F = Subspace(np.asarray(subs["F"], dtype=float)) if "F" in subs else None
    except ValueError as err:
        raise config.ConfigError(f"config error in subspaces: {err}") from None
    eps = sp.eps_opt
    results = {"space": sp.to_dict(), "E": E.to_dict()}
    certs = []
    if E.dim < sp.dim:
        split = ambient.auerbach_complement(sp, E, rng)
        bound = math.sqrt(E.dim) + eps
        results["auerbach_complement"] = split.to_dict()
        certs.append(certificate("auerbach_complement_bound",
                                 "|pi_{E||F}| <= sqrt(dim E) + eps_opt for the Auerbach complement",
                                 split.proj_norm <= bound, proj_norm=split.proj_norm, bound=bound))
    if F is not None:
        results["F"] = F.to_dict()
        g_ef, g_fe = ambient.gap(sp, E, F, rng), ambient.gap(sp, F, E, rng)
        results["gap"] = {"E_F": g_ef, "F_E": g_fe}
        if E.dim == F.dim:
            h = ambient.hausdorff(sp, E, F, rng)
            results["hausdorff"] = h
            g = max(g_ef, g_fe)
            certs.append(certificate("gap_hausdorff_sandwich",
                                     "max(gap(E,F), gap(F,E)) <= d_H(E,F) <= 2 max(...) up to 2 eps_opt",
                                     g <= h + 2 * eps and h <= 2 * g + 2 * eps, d_h=h, gap=g))
        if E.dim + F.dim == sp.dim and ambient.numerical_rank(np.hstack([E.basis, F.basis])) == sp.dim:
            a_ef, a_fe = ambient.min_angle(sp, E, F, rng), ambient.min_angle(sp, F, E, rng)
            results["min_angle"] = {"E_F": vars(a_ef), "F_E": vars(a_fe)}
            certs.append(certificate("projection_norm_at_least_one",
                                     "|pi_{E||F}| >= 1 - eps_opt",
                                     a_ef.proj_norm >= 1 - eps, proj_norm=a_ef.proj_norm))
    if "operator" in cfg:
        A = np.asarray(cfg["operator"], dtype=float)
        results["operator_norm"] = ambient.operator_norm(sp, A, rng)
    return results, certs, {}


def cmd_sublevel(cfg):
    spec = config.cocycle(cfg)
    horizon = int(cfg["sublevel"].get("horizon", 60))
    N = max(int(cfg["N"]), horizon + 1)
    traj = stream(spec, N)
    q_max = min(_q_max(cfg, spec.dim), spec.dim)
    report = met.spectrum_from_ledger(met.growth_rates(traj, q_max, N))
    if len(report.lam) < 2 or report.mult[0] >= spec.dim:
        raise config.ConfigError("config error: sublevel needs a cocycle with at least two exponents")
    m = report.mult[0]
    slow = met.slow_subspace(traj, m, min(int(cfg["n_slow"]), N - 1), report=report)
    lam2 = report.lam[1]
    delta = cfg.get("delta", (report.lam[0] - lam2) / 10 if math.isfinite(lam2) else 0.1)
    seq = met.sublevel_convergence(traj, slow.F_hat, lam2, delta, horizon,
                                   burn_in=cfg["sublevel"].get("burn_in"),
                                   n_dirs=int(cfg["sublevel"]["n_dirs"]),
                                   rng=np.random.default_rng(int(cfg["seed"])))
    level = cfg["tolerances"]["sublevel"]
    first = seq.first_below(level)
    certs = [
        certificate("sublevel_monotone", "d_H(S_n, F cap B_1) is non-increasing after burn-in",
                    seq.monotone_after_burn_in, burn_in=seq.burn_in),
        certificate("sublevel_convergence", "d_H(S_n, F cap B_1) falls below the sublevel tolerance",
                    first is not None, first_below=first, level=level, horizon=horizon),
    ]
    results = {"cocycle": spec.to_dict(), "exponents": report.to_dict(),
               "slow_subspace": slow.to_dict(), "delta": delta, "sequence": {**seq.to_dict(), "level": level, "first_below": first}}
    rows = [["n", "d_H"]] + [[n, v] for n, v in seq.values]
    return results, certs, {"cauchy.csv": rows}


def cmd_verify(cfg, suite: str, draws: Optional[int]):
    results = suites.run_suite(suite, draws, int(cfg["seed"]))
    certs = [certificate(f"{r.name}[{r.norm}]", r.statement, r.passed,
                         passes=r.passes, applicable=r.applicable, draws=r.draws,
                         worst_margin=r.worst_margin) for r in results]
    summary = {f"{r.name}[{r.norm}]": f"{r.passes}/{r.applicable}" for r in results}
    return {"suite": suite, "pass_counts": summary,
            "invariants": [r.to_dict() for r in results]}, certs, {}


COMMANDS = {
    "exponents": cmd_exponents,
    "filtration": cmd_filtration,
    "spectral": cmd_spectral,
    "geometry": cmd_geometry,
    "sublevel": cmd_sublevel,
}


# ---------------------------------------------------------------------------
# Argument parsing and orchestration
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration (JSON)")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--suite", default="all", choices=suites.SUITES + ("all",),
                        help="invariant suite for verify")
    common.add_argument("--n", type=int,
                        help="trajectory length N; draws per invariant for verify; horizon for sublevel")
    common.add_argument("--qmax", type=int, help="largest volume dimension q")
    common.add_argument("--tol", type=float,
                        help="primary tolerance of the command (exponent, restricted-rate or sublevel)")

    parser = _ConfigArgumentParser(prog="banachmet",
                                   description="Volume growth, Lyapunov exponents and slow subspaces "
                                               "on finite-dimensional normed spaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ConfigArgumentParser)
    helps = {
        "exponents": "growth rates l_q and the exponent spectrum of a cocycle",
        "filtration": "nested slow subspaces with restricted-rate checks",
        "spectral": "maximal volume growths V_q and Gelfand numbers c_q of an operator",
        "geometry": "angles, gaps and complements of configured subspaces",
        "verify": "run randomized invariant suites and report pass counts",
        "sublevel": "convergence of sublevel sets to the slow subspace",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    coc = sub.add_parser("cocycles", help="cocycle kinds", description="cocycle kinds")
    coc.add_argument("action", choices=["list"])
    return parser


def _apply_overrides(cfg: dict, args) -> dict:
    if args.seed is not None:
        if args.seed < 0:
            raise config.ConfigError("config error: --seed must be nonnegative")
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out"] = args.out
    if args.n is not None and args.n < 1:
        raise config.ConfigError("config error: --n must be positive")
    if args.qmax is not None:
        if not 1 <= args.qmax <= volume.Q_MAX:
            raise config.ConfigError(f"config error: --qmax must lie in [1, {volume.Q_MAX}]")
        cfg["q_max"] = args.qmax
    if args.tol is not None and not args.tol > 0:
        raise config.ConfigError("config error: --tol must be positive")
    if args.command in ("exponents", "filtration") and args.n is not None:
        cfg["N"] = args.n
    if args.command == "sublevel" and args.n is not None:
        cfg["sublevel"]["horizon"] = args.n
    if args.tol is not None:
        key = {"exponents": "exponent", "filtration": "restricted", "sublevel": "sublevel"}.get(args.command)
        if key:
            cfg["tolerances"][key] = args.tol
    return cfg


def run(args) -> int:
    if args.command == "cocycles":
        for kind, text in describe_kinds().items():
            print(f"{kind:16s} {text}")
        return EXIT_OK
    try:
        cfg = _apply_overrides(config.load_config(args.config), args)
        if args.command == "verify":
            results, certs, tables = cmd_verify(cfg, args.suite, args.n)
        else:
            results, certs, tables = COMMANDS[args.command](cfg)
    except (config.ConfigError, CocycleConfigError) as err:
        print(str(err), file=sys.stderr)
        return EXIT_CONFIG
    passed = all(c["passed"] for c in certs)
    # the output location is not part of the experiment, so it stays out of the report
    echoed = {k: v for k, v in cfg.items() if k != "out"}
    report = {"command": args.command, "version": __version__, "config": echoed,
              "space": config.space(cfg).to_dict(),
              "results": results, "certificates": certs, "passed": passed}
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps_report(report))
    for name, rows in tables.items():
        _write_csv(out / name, rows)
    if args.command == "spectral":
        print(spectral_table(jsonable(results)))
    if args.command == "verify":
        for c in certs:
            print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['passes']}/{c['applicable']}")
    elif "exponents" in results:
        lam = ", ".join(f"{v:.6g}" if isinstance(v, float) else str(v)
                        for v in results["exponents"]["lambda"])
        print(f"lambda = ({lam})")
    for c in certs:
        if not c["passed"]:
            print(f"certificate failed: {c['name']}: {c['statement']}", file=sys.stderr)
    print(f"report written to {out / 'report.json'}")
    return EXIT_OK if passed else EXIT_CERTIFICATE


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as stop:  # usage errors and --help
        return int(stop.code or 0)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
