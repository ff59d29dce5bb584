"""
Command-line front end.

Every subcommand prints exactly one report document.  Exit status:
0 Holds, 1 Fails, 2 Inconclusive, 3 usage or parse error, 4 numeric error.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError
from scipy.special import gammaln

from dckit.analysis import convention_report, inclusion_relation, is_weakly_log_convex
from dckit.config import override_settings, settings
from dckit.constructions import (compose_weights, increasing_minorant, log_convex_minorant,
                                 majorant_construction)
from dckit.errors import DCKitError, InvalidParameter, UnknownSection
from dckit.expr import parse_expr, render as render_expr
from dckit.jetnorms import (Grid, counterexample_54, evaluation_divergence, explaw_verify,
                            general_weight_norm, sample_jet, seminorm_from_samples,
                            verify_taylor_remainder_bound, whitney_report)
from dckit.jets import (FormalJet, TestSequence, classify_membership, compose_jets,
                        radius_test, read_jet_csv, verify_composition_bound, witness_jet)
from dckit.schemas import (ClassificationReport, ComposedWeightReport, CookbookSummary,
                           InclusionReport, JetReport, MembershipReport, Status,
                           WhitneyReport)
from dckit.seq_core import (ConstantSequence, GevreySequence, WeightSequence,
                            parse_sequence_spec)

logger = logging.getLogger(__name__)

EXIT_CODES = {Status.holds: 0, Status.fails: 1, Status.inconclusive: 2}
EXIT_USAGE = 3
EXIT_NUMERIC = 4

# CLI flag -> settings field
TOLERANCE_FLAGS = {
    "tol_convexity": "convexity_tol",
    "tol_stabilization": "stabilization_tol",
    "decay_ratio": "decay_ratio",
    "qa_margin": "qa_margin",
}


class RunConfig(BaseModel):
    command: str
    options: Dict[str, Any] = {}
    format: str = Field(default="json", pattern="^(json|csv|human)$")
    output: Optional[str] = None
    overrides: Dict[str, float] = {}
    threads: Optional[int] = Field(default=None, ge=0)
    verbose: bool = False

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        values = vars(ns).copy()
        common = {key: values.pop(key) for key in ("command", "format", "output", "threads", "verbose")}
        overrides = {}
        for flag, field in TOLERANCE_FLAGS.items():
            value = values.pop(flag)
            if value is not None:
                overrides[field] = value
        return cls(options=values, overrides=overrides, **common)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidParameter(f"{self.prog}: {message}")


# Input helpers


def _seq(spec: str) -> WeightSequence:
    return parse_sequence_spec(spec)


def _clamp(M: WeightSequence, kmax: int) -> int:
    hint = M.kmax_hint
    if hint is not None and kmax > hint:
        logger.warning("kmax=%d exceeds the data of %s; clamped to %d", kmax, M.render(), hint)
        return hint
    return kmax


def _jet(path: Optional[str], spec: Optional[str], order: int, drop_constant: bool = False) -> FormalJet:
    """A jet from a CSV file, or the witness jet k! M_k of a sequence spec."""
    if path:
        return read_jet_csv(path)
    if not spec:
        raise InvalidParameter("give a jet file or a sequence spec")
    jet = witness_jet(_seq(spec), order)
    if drop_constant:
        jet = FormalJet((0,) + jet.signs[1:], (-math.inf,) + jet.logmags[1:])
    return jet


def _grids(texts: List[str]) -> List[Grid]:
    return [Grid.parse(t) for t in texts]


# Subcommands


def run_classify(o):
    M = _seq(o["seq"])
    return convention_report(M, _clamp(M, o["kmax"]))


def run_compare(o):
    M, N = _seq(o["m"]), _seq(o["n"])
    return inclusion_relation(M, N, _clamp(N, _clamp(M, o["kmax"])))


def run_minorant(o):
    M = _seq(o["seq"])
    build = increasing_minorant if o["kind"] == "increasing" else log_convex_minorant
    return build(M, _clamp(M, o["kmax"])).report(M)


def run_majorant(o):
    M = _seq(o["seq"])
    f = _jet(o["jet"], o["jet_seq"], o["order"])
    return majorant_construction(M, f, check_log_convex=not o["no_check"]).report


def run_compose_weights(o):
    M, L = _seq(o["m"]), _seq(o["l"])
    kmax = _clamp(L, _clamp(M, o["kmax"]))
    composed = compose_weights(M, L, kmax)
    return ComposedWeightReport(m=M.render(), l=L.render(), kmax=kmax,
                                log_values=list(composed.log_values))


def run_jet_classify(o):
    return classify_membership(_jet(o["jet"], o["jet_seq"], o["order"]), _seq(o["seq"]))


def run_jet_compose(o):
    f = _jet(o["f"], o["f_seq"], o["order"])
    g = _jet(o["g"], o["g_seq"], o["order"], drop_constant=True)
    return compose_jets(f, g).report()


def run_jet_bound(o):
    f = _jet(o["f"], o["f_seq"], o["order"])
    g = _jet(o["g"], o["g_seq"], o["order"], drop_constant=True)
    return verify_composition_bound(f, g, _seq(o["m"]), _seq(o["l"]),
                                    o["rho_f"], o["c_f"], o["rho_g"], o["c_g"])


def run_radius_test(o):
    a = _jet(o["jet"], o["jet_seq"], o["order"])
    r = TestSequence.build(_seq(o["r"]), o["kmax"])
    return radius_test(a, r, o["delta"], o["variant"])


def run_norms(o):
    sj = sample_jet(parse_expr(o["expr"]), _grids(o["grid"]), o["order"])
    M = _seq(o["seq"])
    report = seminorm_from_samples(sj, M, o["rho"])
    if o["r"]:
        r = TestSequence.build(_seq(o["r"]), max(o["order"], 8))
        report.general_norm = general_weight_norm(sj, M, r)
    return report


def run_whitney(o):
    sj = sample_jet(parse_expr(o["expr"]), _grids(o["grid"]), o["order"])
    return whitney_report(sj, o["n"], o["k"], _seq(o["seq"]), o["rho"])


def run_explaw(o):
    return explaw_verify(parse_expr(o["expr"]), Grid.parse(o["grid1"]), Grid.parse(o["grid2"]),
                         _seq(o["seq"]), o["sigma"], o["rho1"], o["rho2"], o["order"])


def run_counterexample54(o):
    return counterexample_54(o["q"], o["nmax"], o["rho1"])


def run_cookbook(o):
    return cookbook(o["section"], Path(o["dir"]) if o["dir"] else None)


HANDLERS: Dict[str, Callable[[Dict[str, Any]], BaseModel]] = {
    "classify": run_classify,
    "compare": run_compare,
    "minorant": run_minorant,
    "majorant": run_majorant,
    "compose-weights": run_compose_weights,
    "jet-classify": run_jet_classify,
    "jet-compose": run_jet_compose,
    "jet-bound": run_jet_bound,
    "radius-test": run_radius_test,
    "norms": run_norms,
    "whitney": run_whitney,
    "explaw": run_explaw,
    "counterexample54": run_counterexample54,
    "cookbook": run_cookbook,
}


# Cookbook


def _identity_check(values, expected, tol=1e-9) -> bool:
    return bool(np.allclose(values, expected, rtol=tol, atol=tol))


def _section_thm22():
    M = parse_sequence_spec("explicit:[1,4,1,2.6666666666666665]")
    lc = log_convex_minorant(M, 3)
    inc = increasing_minorant(ConstantSequence(1.0), 64)
    checks = {
        "envelope_matches_hand_computation": _identity_check(
            lc.log_values, [0.0, 0.5 * math.log(2.0), math.log(2.0), math.log(16.0)]),
        "increasing_minorant_nondecreasing": bool(np.all(np.diff(inc.log_values) >= -1e-15)),
    }
    inputs = {"log_convex": M.render(), "increasing": "const:1", "kmax": [3, 64]}
    return inputs, {"log_convex": lc.report(M), "increasing": inc.report(ConstantSequence(1.0))}, checks


def _section_thm24():
    M = ConstantSequence(1.0)
    f = witness_jet(GevreySequence(1.0), 200)
    majorant = majorant_construction(M, f)
    ks = np.arange(1, f.order + 1)
    ratios = majorant.phi(ks) / ks
    checks = {
        "witness_identity": majorant.report.witness_verified,
        "phi_convex": majorant.phi.is_convex(),
        "phi_over_k_nondecreasing": bool(np.all(np.diff(ratios) >= -1e-12)),
        "weakly_log_convex": is_weakly_log_convex(majorant.L, f.order).status == Status.holds,
    }
    inputs = {"seq": "const:1", "jet": "(k!)^2", "order": 200}
    return inputs, {"majorant": majorant.report}, checks


def _section_lemma25():
    K = 15
    one = ConstantSequence(1.0)
    f = witness_jet(one, K)
    g = FormalJet.from_logs([-math.inf] + [float(gammaln(k + 1)) for k in range(1, K + 1)])
    report = verify_composition_bound(f, g, one, one, 1.0, 1.0, 1.0, 1.0)
    h = compose_jets(f, g)
    expected = [0.0] + [(k - 1) * math.log(2.0) + float(gammaln(k + 1)) for k in range(1, K + 1)]
    checks = {
        "bound_holds": report.verdict.status == Status.holds,
        "closed_form": _identity_check(h.logmags, expected, 1e-10),
    }
    inputs = {"f": "j!", "g": "k! (g_0 = 0)", "order": K, "constants": 1.0}
    return inputs, {"bound": report, "composition": h.report()}, checks


def _section_sec31():
    one = ConstantSequence(1.0)
    runs = {
        "exp": (parse_expr("exp(x)"), Grid(0.0, 1.0, 64)),
        "sin": (parse_expr("sin(x)"), Grid(0.0, math.pi, 65)),
    }
    reports, checks = {}, {}
    for name, (e, grid) in runs.items():
        report = verify_taylor_remainder_bound(sample_jet(e, [grid], 10), one, 1.0)
        reports[name] = report
        checks[f"{name}_bound_holds"] = report.verdict.status == Status.holds
    inputs = {name: {"expr": render_expr(e), "grid": grid.render(), "order": 10}
              for name, (e, grid) in runs.items()}
    return inputs, reports, checks


def _section_sec46():
    report = evaluation_divergence(ConstantSequence(1.0), 1.0, 64)
    checks = {"rows_grow_like_2_to_k": report.verdict.status == Status.holds}
    return {"seq": "const:1", "rho": 1.0, "kmax": 64}, {"divergence": report}, checks


def _section_sec52():
    e = parse_expr("exp(x+y)")
    grid = Grid(0.0, 1.0, 9)
    reports, checks = {}, {}
    for name, M, sigma in (("const", ConstantSequence(1.0), 1.0),
                           ("gevrey", GevreySequence(1.0), 2.0)):
        report = explaw_verify(e, grid, grid, M, sigma, 1.0, 1.0, 8)
        reports[name] = report
        checks[f"{name}_holds"] = report.verdict.status == Status.holds
        checks[f"{name}_exact_direction"] = report.violations_lower == 0
        checks[f"{name}_slack_nonnegative"] = report.min_slack_upper >= 0
    inputs = {"expr": "exp(x+y)", "grid": grid.render(), "order": 8,
              "sequences": {"const": "const:1", "gevrey": "gevrey:s=1"}}
    return inputs, reports, checks


def _section_sec54():
    report = counterexample_54(2.0, 8, 1.0)
    checks = {
        "holds": report.verdict.status == Status.holds,
        "strictly_increasing": report.strictly_increasing,
        "row_8_at_least_8_to_the_8": report.rows[-1].log_term >= 8 * math.log(8.0),
        "series_stabilize": all(s.stabilized for s in report.series),
    }
    return {"q": 2.0, "n_max": 8, "rho1": 1.0}, {"counterexample": report}, checks


SECTIONS = {
    "thm2.2": _section_thm22,
    "thm2.4": _section_thm24,
    "lemma2.5": _section_lemma25,
    "sec3.1": _section_sec31,
    "sec4.6": _section_sec46,
    "sec5.2": _section_sec52,
    "sec5.4": _section_sec54,
}


def cookbook(section: str, directory: Optional[Path] = None) -> CookbookSummary:
    """Run a pinned configuration and write inputs, reports and a summary."""
    if section not in SECTIONS:
        raise UnknownSection(f"unknown section {section!r}; known: {', '.join(SECTIONS)}")
    inputs, reports, checks = SECTIONS[section]()
    passed = all(checks.values())
    directory = directory or Path("cookbook-out") / section
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "inputs.json").write_text(
        json.dumps(dict(inputs, thresholds=settings.thresholds()), indent=2, sort_keys=True) + "\n")
    (directory / "report.json").write_text(
        json.dumps({name: r.model_dump(mode="json") for name, r in reports.items()}, indent=2) + "\n")
    lines = [f"{section}: {'pass' if passed else 'FAIL'}"]
    lines += [f"  {name}: {'pass' if ok else 'FAIL'}" for name, ok in checks.items()]
    (directory / "summary.txt").write_text("\n".join(lines) + "\n")
    logger.info("cookbook %s written to %s", section, directory)
    return CookbookSummary(section=section, passed=passed, directory=str(directory), checks=checks)


# Output


def top_status(report: BaseModel) -> Status:
    """The status that decides the exit code."""
    if isinstance(report, (InclusionReport, ClassificationReport)):
        return report.status
    if isinstance(report, MembershipReport):
        return report.roumieu.status
    if isinstance(report, WhitneyReport):
        return report.bound.verdict.status
    if isinstance(report, CookbookSummary):
        return Status.holds if report.passed else Status.fails
    verdict = getattr(report, "verdict", None)
    return verdict.status if verdict is not None else Status.holds


def _table(report: BaseModel):
    if isinstance(report, WhitneyReport):
        report = report.bound
    for name in ("rows", "nodes"):
        rows = getattr(report, name, None)
        if rows:
            return [r.model_dump(mode="json") for r in rows]
    values = getattr(report, "log_values", None)
    if values:
        offset = getattr(report, "offset", 0)
        return [{"k": k + offset, "log_value": v} for k, v in enumerate(values)]
    raise InvalidParameter(f"{type(report).__name__} has no tabular form; use --format json")


def to_csv(report: BaseModel) -> str:
    out = io.StringIO()
    if isinstance(report, JetReport):
        for c in report.coefficients:
            log10 = -math.inf if c.logmag is None else c.logmag / math.log(10.0)
            out.write(f"{c.k},{c.sign},{log10!r}\n")
        return out.getvalue()
    rows = _table(report)
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in row.items()})
    return out.getvalue()


def to_human(report: BaseModel) -> str:
    lines = []
    for name, value in report:
        if hasattr(value, "status") and hasattr(value, "property"):
            stat = "" if value.statistic is None else f" (statistic {value.statistic:.6g})"
            lines.append(f"{name}: {value.status.value}{stat}")
        elif isinstance(value, BaseModel):
            lines.append(f"{name}: {top_status(value).value}")
        elif isinstance(value, list):
            lines.append(f"{name}: {len(value)} entries")
        else:
            lines.append(f"{name}: {value}")
    lines.append(f"status: {top_status(report).value}")
    return "\n".join(lines) + "\n"


def render(report: BaseModel, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(report)
    if fmt == "human":
        return to_human(report)
    return report.model_dump_json(indent=2) + "\n"


def dispatch(config: RunConfig):
    """Run one subcommand; returns (exit code, rendered report)."""
    overrides = dict(config.overrides)
    if config.threads is not None:
        overrides["threads"] = config.threads
    with override_settings(**overrides):
        report = HANDLERS[config.command](config.options)
        text = render(report, config.format)
    return EXIT_CODES[top_status(report)], text


# Parser


def _add_jet(p, name="jet", order_default=64):
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument(f"--{name}", default=None, metavar="PATH",
                       help="CSV with rows k,value or k,sign,log10magnitude")
    group.add_argument(f"--{name}-seq", default=None, metavar="SPEC",
                       help="use the jet k! M_k of a sequence spec")
    if not any(a.dest == "order" for a in p._actions):
        p.add_argument("--order", type=int, default=order_default,
                       help="truncation order for --*-seq jets")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dckit", description="Denjoy-Carleman class toolkit")
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "human"], default="json")
    common.add_argument("--output", default=None, metavar="PATH")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (0 = one per CPU); overrides DCKIT_THREADS")
    common.add_argument("--verbose", "-v", action="store_true")
    common.add_argument("--tol-convexity", type=float, default=None)
    common.add_argument("--tol-stabilization", type=float, default=None)
    common.add_argument("--decay-ratio", type=float, default=None)
    common.add_argument("--qa-margin", type=float, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="standing conditions of one sequence")
    p.add_argument("--seq", required=True)
    p.add_argument("--kmax", type=int, default=settings.kmax)

    p = sub.add_parser("compare", parents=[common], help="inclusions between two classes")
    p.add_argument("--m", required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--kmax", type=int, default=settings.kmax)

    p = sub.add_parser("minorant", parents=[common], help="increasing or log-convex minorant")
    p.add_argument("--seq", required=True)
    p.add_argument("--kind", choices=["increasing", "log_convex"], default="log_convex")
    p.add_argument("--kmax", type=int, default=settings.kmax)

    p = sub.add_parser("majorant", parents=[common], help="majorant L with a witness jet")
    p.add_argument("--seq", required=True)
    _add_jet(p, order_default=200)
    p.add_argument("--no-check", action="store_true", help="skip the weak log-convexity check")

    p = sub.add_parser("compose-weights", parents=[common], help="composed weight (M∘L)")
    p.add_argument("--m", required=True)
    p.add_argument("--l", required=True)
    p.add_argument("--kmax", type=int, default=64)

    p = sub.add_parser("jet-classify", parents=[common], help="Roumieu/Beurling membership of a jet")
    _add_jet(p)
    p.add_argument("--seq", default="const:1")

    for name, help_text in (("jet-compose", "Faà di Bruno composition f∘g"),
                            ("jet-bound", "composition bound with certified constants")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--order", type=int, default=12)
        _add_jet(p, "f")
        _add_jet(p, "g")
        if name == "jet-bound":
            p.add_argument("--m", default="const:1")
            p.add_argument("--l", default="const:1")
            for flag in ("--rho-f", "--c-f", "--rho-g", "--c-g"):
                p.add_argument(flag, type=float, default=1.0)

    p = sub.add_parser("radius-test", parents=[common], help="boundedness against a test sequence")
    _add_jet(p)
    p.add_argument("--r", required=True, help="test sequence spec")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--variant", choices=["beurling", "roumieu"], default="beurling")
    p.add_argument("--kmax", type=int, default=settings.kmax)

    p = sub.add_parser("norms", parents=[common], help="seminorm of an expression on a grid")
    p.add_argument("--expr", required=True)
    p.add_argument("--grid", action="append", required=True, help="a,b,n per axis")
    p.add_argument("--seq", default="const:1")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--order", type=int, default=settings.order)
    p.add_argument("--r", default=None, help="general weight spec r_k")

    p = sub.add_parser("whitney", parents=[common], help="Whitney remainder seminorm and bound")
    p.add_argument("--expr", required=True)
    p.add_argument("--grid", action="append", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--seq", default="const:1")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--order", type=int, default=settings.order)

    p = sub.add_parser("explaw", parents=[common], help="mixed versus joint derivative weights")
    p.add_argument("--expr", required=True)
    p.add_argument("--grid1", required=True)
    p.add_argument("--grid2", required=True)
    p.add_argument("--seq", default="const:1")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--rho1", type=float, default=1.0)
    p.add_argument("--rho2", type=float, default=1.0)
    p.add_argument("--order", type=int, default=8)

    p = sub.add_parser("counterexample54", parents=[common], help="divergence table for q^(k^2)")
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--nmax", type=int, default=8)
    p.add_argument("--rho1", type=float, default=1.0)

    p = sub.add_parser("cookbook", parents=[common], help="pinned reproduction runs")
    p.add_argument("section", help=", ".join(SECTIONS))
    p.add_argument("--dir", default=None, help="bundle directory")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        config = RunConfig.from_namespace(ns)
    except (DCKitError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    level = logging.DEBUG if config.verbose else getattr(logging, settings.log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, force=True,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code, text = dispatch(config)
    except DCKitError as exc:
        logger.debug("%s failed", config.command, exc_info=True)
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_USAGE if exc.usage else EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if config.output:
        Path(config.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
