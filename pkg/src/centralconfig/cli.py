"""Command line front end.

    centralconfig solve  --masses 1,1,1,1,1 --trials 32 --seed 0 --out ccs.json
    centralconfig verify ccs.json --report report.json
    centralconfig scan   --trials 200 --seed 0 --mass-dist loguniform:0.1:10 --out scan.csv
    centralconfig graph  --dot fractions.dot

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 no converged solve.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import bwc, geometry, solver, williams
from .core import (
    CentralConfiguration,
    ConfigurationError,
    IntegrityError,
    MassVector,
    PlanarConfiguration,
    gradient_residual,
    multiplier,
    normalize,
)

log = logging.getLogger("centralconfig")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3
FIVE_BODY_SHAPES = ("disk", "pentagon", "triangle", "quadrilateral")
SCAN_HEADER = [
    "seed", "trial", "m1", "m2", "m3", "m4", "m5", "hull_class", "lambda",
    "nu1", "nu2", "nu", "min_chain_margin", "max_identity_residual", "pbt_ok", "dst_ok",
]  # fmt: skip
VERIFY_RTOL = 1e-10


class UsageError(Exception):
    pass


# --- campaigns ---------------------------------------------------------------


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def trial_shape(n: int, trial: int) -> str:
    return FIVE_BODY_SHAPES[trial % len(FIVE_BODY_SHAPES)] if n == 5 else "disk"


def solve_trial(args):
    masses, seed, trial, tol = args
    opts = solver.SolveOptions(tolerance=tol, seed=trial_seed(seed, trial))
    return solver.find_cc(MassVector(masses), opts, shape=trial_shape(len(masses), trial))


def sample_masses(seed: int, trial: int, lo: float, hi: float, n: int = 5) -> np.ndarray:
    rng = np.random.default_rng([seed, trial, 1])
    return np.exp(rng.uniform(np.log(lo), np.log(hi), n))


def _workers():
    env = os.environ.get("CC_THREADS")
    try:
        return max(1, int(env)) if env else (os.cpu_count() or 1)
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered map; results come back in input order whatever the scheduling."""
    items = list(items)
    workers = min(_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def solve_campaign(masses, trials, seed, tol):
    """Converged planar solves in trial order; collinear limits are dropped
    (those are the business of the collinear solver)."""
    results = parallel_map(solve_trial, [(masses.values.tolist(), seed, t, tol) for t in range(trials)])
    return [r for r in results if r.converged and r.hull.tag != geometry.HullTag.COLLINEAR]


# --- documents ---------------------------------------------------------------


def document(cc: CentralConfiguration, hull=None) -> dict:
    hull = hull or geometry.classify_hull(cc.configuration)
    return {
        "n": cc.n,
        "masses": cc.masses.values.tolist(),
        "positions": cc.points.tolist(),
        "lambda": float(cc.lam),
        "normalized": bool(cc.normalized),
        "gradient_residual": float(cc.gradient_residual),
        "hull_class": hull.tag.value,
        "spectrum": None,
        "williams": None,
    }


def _num(x):
    return None if x is None or not np.isfinite(x) else float(x)


def read_documents(path):
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError("expected a JSON array of configuration documents")
    out = []
    for doc in data:
        n = int(doc["n"])
        masses = MassVector(doc["masses"])
        config = PlanarConfiguration(doc["positions"])
        if masses.n != n or config.n != n:
            raise ValueError("document arrays do not match n")
        cc = CentralConfiguration(
            masses, config, float(doc["lambda"]), float(doc["gradient_residual"]), bool(doc["normalized"])
        )
        out.append((doc, cc))
    return out


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, allow_nan=False)
        fh.write("\n")


def verify_document(doc: dict, cc: CentralConfiguration) -> dict:
    """Fill the spectrum and williams fields and attach a verdict."""
    doc = dict(doc)
    checks = {}
    lam = multiplier(cc.configuration, cc.masses)
    checks["lambda_consistent"] = bool(abs(lam - cc.lam) <= VERIFY_RTOL * abs(cc.lam))
    work = cc if cc.normalized else normalize(CentralConfiguration(cc.masses, cc.configuration, lam))
    residual = gradient_residual(work.configuration, work.masses)
    checks["equilibrium"] = bool(residual <= VERIFY_RTOL)
    eig = bwc.spectrum(cc.masses, bwc.build_bwc(cc.masses, cc.configuration)).eigenvalues
    spectrum_doc = {"eigenvalues": eig.tolist(), "nu1": None, "nu2": None}
    hull = geometry.classify_hull(work.configuration)
    if cc.n == 5 and hull.tag != geometry.HullTag.COLLINEAR:
        try:
            rep = bwc.spectrum(work.masses, bwc.build_shifted_bwc(work.masses, work.configuration))
            spectrum_doc["nu1"], spectrum_doc["nu2"] = rep.nu1, rep.nu2
        except IntegrityError:
            checks["spectral_integrity"] = False
        cert = williams.certify(work, hull)
        doc["williams"] = {
            "nu": _num(cert.nu_spectral),
            "max_identity_residual": _num(cert.max_identity_residual),
            "verdict": cert.verdict,
        }
        checks["williams"] = cert.verdict
    doc["spectrum"] = spectrum_doc
    checks["pbt"] = geometry.pbt_all_pairs(work.configuration)
    checks["dst"] = geometry.dst_all(work) if hull.tag != geometry.HullTag.COLLINEAR else True
    doc["checks"] = checks
    doc["verdict"] = all(checks.values())
    return doc


# --- scan rows -----------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def scan_trial(args):
    """One CSV row (list of strings) or None when the solve did not give a
    planar non-collinear configuration."""
    seed, trial, lo, hi = args
    masses = MassVector(sample_masses(seed, trial, lo, hi))
    res = solve_trial((masses.values.tolist(), seed, trial, 1e-12))
    if not res.converged or res.hull.tag == geometry.HullTag.COLLINEAR:
        return None
    cc = res.cc
    cert = williams.certify(cc, res.hull)
    rep = cert.report
    row = [seed, trial, *cc.masses.values.tolist(), res.hull.tag.value, cc.lam,
           rep.nu1, rep.nu2, cert.nu_spectral, cert.min_chain_margin, cert.max_identity_residual,
           geometry.pbt_all_pairs(cc.configuration), geometry.dst_all(cc)]  # fmt: skip
    return [_fmt(v) for v in row]


def parse_mass_dist(text: str):
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "loguniform":
        raise UsageError(f"mass distribution must look like loguniform:LO:HI, got {text!r}")
    try:
        lo, hi = float(parts[1]), float(parts[2])
    except ValueError:
        raise UsageError(f"bad bounds in {text!r}") from None
    if not (0 < lo < hi and np.isfinite(hi)):
        raise UsageError("loguniform bounds need 0 < LO < HI")
    return lo, hi


def parse_masses(text: str) -> MassVector:
    try:
        vals = [float(v) for v in text.split(",")]
        return MassVector(vals)
    except (ValueError, ConfigurationError) as exc:
        raise UsageError(f"bad --masses {text!r}: {exc}") from None


# --- commands --------------------------------------------------------------------


def cmd_solve(args) -> int:
    masses = parse_masses(args.masses)
    if masses.n < 3:
        raise UsageError("solve needs at least three masses")
    if args.trials < 1 or not args.tol > 0:
        raise UsageError("--trials must be >= 1 and --tol > 0")
    found = solver.dedup(solve_campaign(masses, args.trials, args.seed, args.tol))
    write_json(args.out, [document(r.cc, r.hull) for r in found])
    log.info("%d distinct configurations from %d trials", len(found), args.trials)
    return EXIT_OK if found else EXIT_NOCONV


def cmd_verify(args) -> int:
    try:
        docs = read_documents(args.input)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    report = [verify_document(doc, cc) for doc, cc in docs]
    write_json(args.report, report)
    return EXIT_OK if all(d["verdict"] for d in report) else EXIT_FAIL


def cmd_scan(args) -> int:
    lo, hi = parse_mass_dist(args.mass_dist)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    rows = parallel_map(scan_trial, [(args.seed, t, lo, hi) for t in range(args.trials)])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    w.writerows(r for r in rows if r is not None)
    with open(args.out, "w", newline="") as fh:
        fh.write(buf.getvalue())
    return EXIT_OK


def cmd_graph(args) -> int:
    text = williams.build_fraction_graph().to_dot()
    try:
        with open(args.dot, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {args.dot}: {exc}") from None
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="centralconfig", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="search for central configurations")
    s.add_argument("--masses", required=True)
    s.add_argument("--trials", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check configuration documents")
    v.add_argument("input")
    v.add_argument("--report", required=True)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("scan", help="random-mass campaign to CSV")
    c.add_argument("--trials", type=int, default=200)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--mass-dist", default="loguniform:0.1:10")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_scan)

    g = sub.add_parser("graph", help="export the fraction graph as DOT")
    g.add_argument("--dot", required=True)
    g.set_defaults(func=cmd_graph)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"centralconfig: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
