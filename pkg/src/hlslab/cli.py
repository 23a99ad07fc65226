"""Batch front-end: quotient towers, gap profiles, amenability checks and
the tau contrast, all emitted as deterministic CSV reports.

Exit codes: 0 all checks passed, 1 a check failed, 2 input error,
3 resource error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import groupoid as gpd
from .config import ExperimentConfig, build_config
from .errors import InputError, ResourceError
from .quotients import ApproximatedGroup, kernel_refines
from .words import GroupAlgebraElement, Word, ball, ball_size

SNAPSHOT_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_RESOURCE_ERROR = 3


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _write_report(config: ExperimentConfig, command: str,
                  fieldnames: list[str], rows: list[dict],
                  summary: dict) -> None:
    buf = io.StringIO()
    buf.write(f"# hlslab report: {command}\n")
    for k, v in config.header_items():
        buf.write(f"# config {k}={v}\n")
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    for k in sorted(summary):
        buf.write(f"# result {k}={_fmt(summary[k])}\n")
    text = buf.getvalue()
    if config.out:
        Path(config.out).parent.mkdir(parents=True, exist_ok=True)
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_element(config: ExperimentConfig,
                  default: GroupAlgebraElement | None = None
                  ) -> GroupAlgebraElement:
    if config.element is None:
        if default is not None:
            return default
        raise InputError("an element is required (--element)")
    text = config.element.strip()
    if not text.startswith("["):
        try:
            text = Path(config.element).read_text()
        except OSError as e:
            raise InputError(f"cannot read element file: {e}") from e
    return GroupAlgebraElement.from_json(text, rank=config.rank)


def _base(config: ExperimentConfig) -> ApproximatedGroup:
    return ApproximatedGroup(config.family, cache_dir=config.cache_dir,
                             fiber_cap=config.fiber_cap,
                             hom_level_cap=config.hom_level_cap)


def _parallel_levels(levels, fn, jobs: int):
    if jobs <= 1:
        return [fn(n) for n in levels]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, levels))


# -- subcommands --------------------------------------------------------------

def cmd_quotients(config: ExperimentConfig) -> int:
    base = _base(config)
    quotients = [base.quotient(n) for n in range(1, config.n_max + 1)]
    rows = []
    failed = False
    for n, q in enumerate(quotients, start=1):
        t0 = time.monotonic()
        ss_ok = q.verify_schreier_sims()
        nest_ok = (kernel_refines(quotients[n], q)
                   if n < config.n_max else True)
        sep_radius = 0
        r = 1
        while r <= config.radius and ball_size(r, base.rank) <= 20_000:
            if not base.check_separation(r, n).all_separated:
                break
            sep_radius = r
            r += 1
        if not (ss_ok and nest_ok):
            failed = True
            print(f"check failed at level {n} (schreier_sims_ok={ss_ok}, "
                  f"nesting_ok={nest_ok})", file=sys.stderr)
        row = {"level": n, "order": q.order, "degree": q.degree,
               "schreier_sims_ok": ss_ok, "nesting_ok": nest_ok,
               "separation_radius": sep_radius}
        if config.timings:
            row["wall_ms"] = int((time.monotonic() - t0) * 1000)
        rows.append(row)
    fields = ["level", "order", "degree", "schreier_sims_ok", "nesting_ok",
              "separation_radius"]
    if config.timings:
        fields.append("wall_ms")
    _write_report(config, "quotients", fields, rows,
                  {"all_checks_passed": not failed})
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _bracket_row(level, order, bracket, wall_ms, config):
    row = {"level": level, "order": order,
           "lower": bracket.lower, "upper": bracket.upper,
           "provenance": f"{bracket.lower_provenance}|{bracket.upper_provenance}"}
    if config.timings:
        row["wall_ms"] = wall_ms
    return row


def cmd_gap(config: ExperimentConfig) -> int:
    if config.rank >= 2:
        default = GroupAlgebraElement.generator_sum(config.rank)
    else:
        default = GroupAlgebraElement.from_pairs([("a", 1), ("A", 1)], rank=1)
    x = _load_element(config, default=default)
    if not x.is_self_adjoint(tol=1e-12):
        raise InputError("gap experiment element must be self-adjoint")
    base = _base(config)
    for n in range(1, config.n_max + 1):  # build sequentially, compute in parallel
        base.quotient(n)
    G = gpd.HLSGroupoid(base)
    t0 = time.monotonic()
    report = gpd.fd_norm_profile(x, G, config.n_max, radius=config.radius,
                                 margin=config.margin,
                                 infinity_ceiling=config.infinity_ceiling,
                                 ball_cap=config.ball_cap)
    wall = int((time.monotonic() - t0) * 1000)
    rows = [_bracket_row(r.level, r.order, r.bracket, wall, config)
            for r in report.rows]
    rows.append(_bracket_row("inf", "inf", report.infinity, wall, config))
    fields = ["level", "order", "lower", "upper", "provenance"]
    if config.timings:
        fields.append("wall_ms")
    summary = {
        "sup_finite_lower": report.sup_finite.lower,
        "sup_finite_upper": report.sup_finite.upper,
        "infinity_lower": report.infinity.lower,
        "infinity_upper": report.infinity.upper,
        "infinity_ceiling_used": report.infinity_ceiling_used,
        "trivial_representation_lower": report.trivial_lower,
        "l1_upper": report.l1_upper,
        "monotone_ok": report.monotone_ok,
        "gap_margin": report.gap_margin,
        "gap_flagged": report.gap_flagged,
    }
    _write_report(config, "gap", fields, rows, summary)
    return EXIT_OK if report.monotone_ok else EXIT_CHECK_FAILED


def _parse_kset(config: ExperimentConfig) -> list:
    if config.kset is None:
        letters = "ab"[: config.rank]
        return [("inf", Word.parse(c, config.rank)) for c in letters]
    try:
        raw = json.loads(config.kset)
    except json.JSONDecodeError as e:
        raise InputError(f"bad K set JSON: {e}") from e
    out = []
    for level, word_s in raw:
        w = Word.parse(word_s, config.rank)
        out.append(("inf" if level == "inf" else int(level), w))
    return out


def cmd_amen(config: ExperimentConfig) -> int:
    xi = _load_element(config)
    kset = _parse_kset(config)
    G = gpd.HLSGroupoid(_base(config))
    cert = gpd.certificate_from_folner(xi, G, kset, config.epsilon)
    gpd.folner_from_certificate(cert)  # rejects degenerate certificates
    report = gpd.check_certificate(cert)
    rows = []
    for row in report.rows:
        level, g = row.element
        rows.append({"element_level": level,
                     "element": str(g),
                     "normalization_defect": float(row.normalization_defect),
                     "translation_defect": float(row.translation_defect)})
    summary = {
        "epsilon": config.epsilon,
        "worst_normalization_defect": float(report.worst_normalization),
        "worst_translation_defect": float(report.worst_translation),
        "passed": report.passed,
    }
    _write_report(config, "amen",
                  ["element_level", "element", "normalization_defect",
                   "translation_defect"], rows, summary)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _snapshot_path(config: ExperimentConfig) -> Path:
    return Path(config.cache_dir) / "snapshots" / "tau-congruence.json"


def cmd_tau(config: ExperimentConfig) -> int:
    if config.rank < 2:
        raise InputError("the tau contrast needs a rank-2 family")
    fd = ApproximatedGroup("fd", cache_dir=config.cache_dir,
                           fiber_cap=config.fiber_cap,
                           hom_level_cap=config.hom_level_cap)
    cong = ApproximatedGroup("congruence", cache_dir=config.cache_dir,
                             fiber_cap=config.fiber_cap)
    levels = list(range(2, config.n_max + 1))
    for n in levels:
        fd.quotient(n)
        cong.quotient(n)
    fd_vals = _parallel_levels(levels, lambda n: gpd.tau_spectral_gap(fd, n),
                               config.jobs)
    cong_vals = _parallel_levels(levels,
                                 lambda n: gpd.tau_spectral_gap(cong, n),
                                 config.jobs)
    rows = [{"level": n, "fd_second_eigenvalue": fv,
             "congruence_second_eigenvalue": cv}
            for n, fv, cv in zip(levels, fd_vals, cong_vals)]
    snap_path = _snapshot_path(config)
    snapshot_ok = True
    recorded = {}
    if snap_path.exists() and not config.update_snapshots:
        data = json.loads(snap_path.read_text())
        if data.get("format_version") != SNAPSHOT_FORMAT_VERSION:
            raise InputError("unsupported tau snapshot format version")
        recorded = data.get("values", {})
        for n, cv in zip(levels, cong_vals):
            old = recorded.get(str(n))
            if old is not None and abs(old - cv) > 1e-6:
                snapshot_ok = False
                print(f"tau snapshot mismatch at level {n}: "
                      f"recorded {old}, computed {cv}", file=sys.stderr)
    new_values = dict(recorded)
    new_values.update({str(n): cv for n, cv in zip(levels, cong_vals)})
    if config.update_snapshots or not snap_path.exists():
        snap_path.parent.mkdir(parents=True, exist_ok=True)
        snap_path.write_text(json.dumps(
            {"format_version": SNAPSHOT_FORMAT_VERSION, "values": new_values},
            sort_keys=True))
    _write_report(config, "tau",
                  ["level", "fd_second_eigenvalue",
                   "congruence_second_eigenvalue"],
                  rows, {"snapshot_ok": snapshot_ok})
    return EXIT_OK if snapshot_ok else EXIT_CHECK_FAILED


def cmd_convolve_check(config: ExperimentConfig) -> int:
    """Randomized *-algebra property suite in exact rational arithmetic."""
    base = _base(config)
    G = gpd.HLSGroupoid(base)
    rng = random.Random(2024)
    levels = [1, 2] if config.family == "fd" else [1, 2, 3]
    words = ball(2, config.rank)
    failures = []
    n_cases = 60

    def random_element():
        return GroupAlgebraElement.from_pairs(
            [(rng.choice(words), Fraction(rng.randint(-3, 3), rng.randint(1, 4)))
             for _ in range(3)], rank=config.rank)

    def random_fibered():
        tail = random_element() if rng.random() < 0.7 else \
            GroupAlgebraElement.zero(config.rank)
        top = rng.choice(levels) + 1
        overrides = {}
        for n in range(1, top):
            if rng.random() < 0.6:
                q = base.quotient(n)
                overrides[n] = {rng.randrange(q.order):
                                Fraction(rng.randint(-2, 2), rng.randint(1, 3))
                                for _ in range(2)}
        return gpd.FiberedFunction(G, tail, top, overrides)

    for i in range(n_cases):
        f, g, h = random_fibered(), random_fibered(), random_fibered()
        lhs = gpd.convolve_fibered(gpd.convolve_fibered(f, g), h)
        rhs = gpd.convolve_fibered(f, gpd.convolve_fibered(g, h))
        if not lhs.same_function(rhs):
            failures.append(f"associativity case {i}")
        star = gpd.adjoint_fibered(gpd.convolve_fibered(f, g))
        split = gpd.convolve_fibered(gpd.adjoint_fibered(g),
                                     gpd.adjoint_fibered(f))
        if not star.same_function(split):
            failures.append(f"involution case {i}")
    rows = [{"check": "associativity", "cases": n_cases,
             "passed": not any("assoc" in f for f in failures)},
            {"check": "involution", "cases": n_cases,
             "passed": not any("invol" in f for f in failures)}]
    for f in failures:
        print(f"FAILED: {f}", file=sys.stderr)
    _write_report(config, "convolve-check", ["check", "cases", "passed"],
                  rows, {"all_checks_passed": not failures})
    return EXIT_OK if not failures else EXIT_CHECK_FAILED


# -- argument parsing ----------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=["fd", "congruence", "cyclic"],
                   help="approximating sequence family")
    p.add_argument("--n-max", type=int, dest="n_max",
                   help="deepest quotient level")
    p.add_argument("--radius", type=int, help="truncation / separation radius")
    p.add_argument("--margin", type=float, help="gap flag margin")
    p.add_argument("--jobs", type=int, help="worker threads for per-level work")
    p.add_argument("--cache-dir", dest="cache_dir",
                   help="quotient cache directory (env HLSLAB_CACHE)")
    p.add_argument("--out", help="write the CSV report here (default stdout)")
    p.add_argument("--element",
                   help="group algebra element: inline JSON or a file path")
    p.add_argument("--epsilon", type=float, help="certificate tolerance")
    p.add_argument("--kset",
                   help='compact set for amen: JSON like [["inf","a"],[3,"b"]]')
    p.add_argument("--fiber-cap", type=int, dest="fiber_cap",
                   help="max quotient order")
    p.add_argument("--ball-cap", type=int, dest="ball_cap",
                   help="max ball element count")
    p.add_argument("--hom-level-cap", type=int, dest="hom_level_cap",
                   help="max level for kernel enumeration")
    p.add_argument("--infinity-ceiling", type=float, dest="infinity_ceiling",
                   help="external analytic upper bound for the infinity fiber")
    p.add_argument("--update-snapshots", action="store_true", default=None,
                   dest="update_snapshots",
                   help="regenerate recorded tau snapshots")
    p.add_argument("--timings", action="store_true", default=None,
                   help="include wall_ms columns (breaks byte-stability)")
    p.add_argument("--config", dest="config_path",
                   help="JSON config file (flags override it)")


COMMANDS = {
    "quotients": cmd_quotients,
    "gap": cmd_gap,
    "amen": cmd_amen,
    "tau": cmd_tau,
    "convolve-check": cmd_convolve_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hlslab",
        description="HLS groupoids at desk scale: quotient towers, norm "
                    "brackets, amenability certificates.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        _add_common(p)
    args = parser.parse_args(argv)
    values = {k: v for k, v in vars(args).items()
              if k not in ("command", "config_path")}
    try:
        config = build_config(values, args.config_path)
        return COMMANDS[args.command](config)
    except InputError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except ResourceError as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
