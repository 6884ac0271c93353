"""Command-line front end.

Exit status: 0 on success (a vacuous bound is still a success), 1 on usage
or precondition errors, 2 when an inequality that must hold for every n is
violated.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from kbv import __version__
from kbv.apps import (
    ERDOS_KAC_COLUMNS,
    CertificationError,
    erdos_kac_experiment,
    indicator_process,
    poisson_marginal_tv,
    poisson_process_bound,
)
from kbv.bounds import (
    BoundParams,
    lemma_bonf_bound,
    lemma_high_bound,
    lemma_many_bound,
    rough_bound,
    theorem1_bound,
    truncation_remainder_bound,
)
from kbv.config import LIMITS
from kbv.errors import KbvError
from kbv.exact import exact_tv, exact_tv_float
from kbv.experiments import bonferroni_scan, default_gamma, hard_failures, partition_report, theorem1_row
from kbv.laws import LawSpec, certify_ht, load_custom_csv, make_law
from kbv.primes import GammaSet, gamma_beta, gamma_first_k, gamma_from_primes, gamma_window
from kbv.reports import Report, TvReport

COMMANDS = ("tv-exact", "certify-ht", "bound", "partition", "bonferroni", "erdos-kac", "poisson", "sweep")
EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


@dataclass
class ExperimentConfig:
    command: str
    law: str = "uniform"
    s: str | None = None
    upsilon: str | None = None
    law_csv: str | None = None
    n: int | None = None
    n_grid: list[int] = field(default_factory=list)
    gamma_primes: list[int] | None = None
    gamma_window: list[float] | None = None
    gamma_beta: float | None = None
    gamma_size: int | None = None
    t: float = 1.0
    kappa: float | None = None
    epsilon: float = 1.0
    delta: float | None = None
    C: float | None = None
    a_n: list[float] = field(default_factory=list)
    max_m: int = 6
    mode: str = "exact"
    output: str = "json"
    seed: int | None = None  # reserved for the float mode's summation order
    jobs: int = 1
    max_gamma: int = 16
    max_n: int = 10_000_000

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(float(x)) for x in text.replace(" ", "").split(",") if x]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kbv", description="Prime multiplicities versus independent geometrics.")
    parser.add_argument("--version", action="version", version=f"kbv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--law", default="uniform", choices=["uniform", "pareto", "density", "custom"])
        p.add_argument("--s", help="Pareto exponent, e.g. 1/2")
        p.add_argument("--upsilon", help="density weights as polynomial coefficients c0,c1,... in k")
        p.add_argument("--law-csv", help="custom law file with lines k,numerator,denominator")
        p.add_argument("--n", type=lambda x: int(float(x)))
        p.add_argument("--n-grid", type=_int_list, default=[])
        p.add_argument("--gamma-primes", type=_int_list)
        p.add_argument("--gamma-window", type=float, nargs=2, metavar=("LO", "HI"))
        p.add_argument("--gamma-beta", type=float, help="use the primes up to n**(1/beta)")
        p.add_argument("--gamma-size", type=int, help="use the first K primes")
        p.add_argument("--t", type=float, default=1.0)
        p.add_argument("--kappa", type=float)
        p.add_argument("--epsilon", type=float, default=1.0)
        p.add_argument("--delta", type=float)
        p.add_argument("--C", type=float)
        p.add_argument("--a-n", type=_float_list, default=[])
        p.add_argument("--max-m", type=int, default=6)
        p.add_argument("--mode", choices=["exact", "float"], default="exact")
        p.add_argument("--output", choices=["json", "csv"], default="json")
        p.add_argument("--out", help="report path (default: $KBV_REPORT_DIR/<command>.<ext>, else stdout)")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--max-gamma", type=int, default=16)
        p.add_argument("--max-n", type=lambda x: int(float(x)), default=10_000_000)
    return parser


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        command=ns.command, law=ns.law, s=ns.s, upsilon=ns.upsilon, law_csv=ns.law_csv, n=ns.n,
        n_grid=list(ns.n_grid), gamma_primes=ns.gamma_primes,
        gamma_window=list(ns.gamma_window) if ns.gamma_window else None, gamma_beta=ns.gamma_beta,
        gamma_size=ns.gamma_size, t=ns.t, kappa=ns.kappa, epsilon=ns.epsilon, delta=ns.delta, C=ns.C,
        a_n=list(ns.a_n), max_m=ns.max_m, mode=ns.mode, output=ns.output, jobs=ns.jobs,
        max_gamma=ns.max_gamma, max_n=ns.max_n,
    )


class UsageError(KbvError):
    pass


def _polynomial(coeffs: str):
    cs = [Fraction(c) for c in coeffs.split(",")]

    def upsilon(k: int) -> Fraction:
        return sum((c * k**i for i, c in enumerate(cs)), Fraction(0))

    upsilon.label = f"poly({coeffs})"
    return upsilon


def make_law_from_config(cfg: ExperimentConfig, n: int) -> LawSpec:
    if cfg.law == "custom":
        if not cfg.law_csv:
            raise UsageError("--law custom needs --law-csv", module="cli")
        return load_custom_csv(cfg.law_csv, n)
    if cfg.law == "density":
        if not cfg.upsilon:
            raise UsageError("--law density needs --upsilon", module="cli")
        return make_law("density", n, upsilon=_polynomial(cfg.upsilon))
    return make_law(cfg.law, n, s=cfg.s)


def gamma_from_config(cfg: ExperimentConfig, n: int) -> GammaSet:
    # explicit list wins, then window, then beta, then first-K
    if cfg.gamma_primes is not None:
        return gamma_from_primes(n, cfg.gamma_primes)
    if cfg.gamma_window:
        lo, hi = cfg.gamma_window
        return gamma_window(n, lo, min(hi, n))
    if cfg.gamma_beta is not None:
        return gamma_beta(n, cfg.gamma_beta)
    if cfg.gamma_size is not None:
        return gamma_first_k(n, cfg.gamma_size)
    return default_gamma(n)


def _need_n(cfg: ExperimentConfig) -> int:
    if cfg.n is None:
        raise UsageError(f"{cfg.command} needs --n", module="cli")
    return cfg.n


def _grid(cfg: ExperimentConfig) -> list[int]:
    if cfg.n_grid:
        return list(cfg.n_grid)
    if cfg.n is not None:
        return [cfg.n]
    raise UsageError(f"{cfg.command} needs --n or --n-grid", module="cli")


def _params(cfg: ExperimentConfig, n: int, gamma: GammaSet) -> BoundParams:
    return BoundParams(cfg.t, 1.0 if cfg.kappa is None else cfg.kappa, cfg.epsilon, n, gamma, cfg.delta)


def cmd_tv_exact(cfg: ExperimentConfig) -> tuple[Report, bool]:
    rows = []
    for n in _grid(cfg):
        law = make_law_from_config(cfg, n)
        gamma = gamma_from_config(cfg, n)
        if cfg.mode == "float":
            value = exact_tv_float(law, gamma)
            rows.append({"n": n, "law": law.describe(), "gamma": gamma.describe(), "tv_decimal": value})
        else:
            tv = exact_tv(law, gamma, jobs=cfg.jobs)
            rows.append(TvReport(n, law.describe(), gamma.describe(), tv).to_dict())
    return Report(cfg.command, cfg.mode, asdict(cfg), rows), False


def cmd_certify(cfg: ExperimentConfig) -> tuple[Report, bool]:
    rows = []
    for n in _grid(cfg):
        law = make_law_from_config(cfg, n)
        rows.append({"law": law.describe(), **certify_ht(law, cfg.t, cfg.kappa).to_dict()})
    return Report(cfg.command, cfg.mode, asdict(cfg), rows), False


def cmd_bound(cfg: ExperimentConfig) -> tuple[Report, bool]:
    n = _need_n(cfg)
    gamma = gamma_from_config(cfg, n)
    params = _params(cfg, n, gamma)
    main = theorem1_bound(params)
    rho = gamma.rho
    row = {
        "n": n,
        "gamma": gamma.describe(),
        "gamma_size": len(gamma),
        "tau": float(gamma.tau_float),
        "rho": rho,
        "t": params.t,
        "kappa": params.kappa,
        "epsilon": params.epsilon,
        "delta": params.delta,
        "theorem1": main.value,
        "theorem1_c": main.c,
        "theorem1_branch": main.branch,
        "theorem1_vacuous": main.vacuous,
        "cardinality_ok": main.cardinality_ok,
        "warnings": list(main.warnings),
    }
    if rho > 1:
        high = lemma_high_bound(params.delta, params.epsilon, params.kappa, rho)
        row.update(
            lemma_many=lemma_many_bound(params.delta, params.epsilon, params.kappa, rho),
            lemma_high=high.value, alpha=high.alpha, beta=high.beta,
        )
        bonf = lemma_bonf_bound(params)
        row.update(lemma_bonf=bonf.value, lemma_bonf_c=bonf.c, gamma_n=bonf.gamma_n)
        if bonf.gamma_n is not None:
            tr = truncation_remainder_bound(bonf.gamma_n, params)
            row.update(truncation_as_displayed=tr.as_displayed, truncation_as_derived=tr.as_derived,
                       truncation_case=tr.case)
    if cfg.C is not None:
        row["rough"] = rough_bound(n, len(gamma), cfg.C)
    return Report(cfg.command, cfg.mode, asdict(cfg), [row]), False


def cmd_partition(cfg: ExperimentConfig) -> tuple[Report, bool]:
    rows, bad = [], False
    for n in _grid(cfg):
        law = make_law_from_config(cfg, n)
        gamma = gamma_from_config(cfg, n)
        rep = partition_report(law, _params(cfg, n, gamma), jobs=cfg.jobs)
        failures = hard_failures(rep)
        bad |= bool(failures)
        rows.append({**rep.to_dict(), "hard_failures": failures})
    return Report(cfg.command, cfg.mode, asdict(cfg), rows), bad


def cmd_bonferroni(cfg: ExperimentConfig) -> tuple[Report, bool]:
    rows, bad = [], False
    for n in _grid(cfg):
        law = make_law_from_config(cfg, n)
        gamma = gamma_from_config(cfg, n)
        scan = bonferroni_scan(law, gamma, cfg.max_m)
        bad |= not scan.ok
        rows.append({"n": n, "law": law.describe(), "gamma": gamma.describe(), **scan.to_dict()})
    return Report(cfg.command, cfg.mode, asdict(cfg), rows), bad


def cmd_erdos_kac(cfg: ExperimentConfig) -> tuple[Report, bool]:
    kappa = cfg.kappa if cfg.kappa is not None else 1.0
    rows = erdos_kac_experiment(cfg.law, _grid(cfg), s=cfg.s, t=cfg.t, kappa=kappa, jobs=cfg.jobs)
    table = [{k: getattr(r, k) for k in ERDOS_KAC_COLUMNS} for r in rows]
    w = [r.w1 for r in rows]
    steps = sum(1 for a, b in zip(w, w[1:]) if b < a)
    ratios = [r.ratio for r in rows if r.ratio is not None]
    summary = {"decreasing_steps": steps, "steps": max(len(w) - 1, 0)}
    if ratios:
        summary["ratio_band"] = max(ratios) / min(ratios)
    return Report(cfg.command, cfg.mode, asdict(cfg), table, summary), False


def cmd_poisson(cfg: ExperimentConfig) -> tuple[Report, bool]:
    if not cfg.a_n:
        raise UsageError("poisson needs --a-n", module="cli")
    rows, bad = [], False
    for a in cfg.a_n:
        spec = indicator_process(a, n=cfg.n, max_atoms=cfg.max_gamma)
        marg = poisson_marginal_tv(spec, 1.0, max_atoms=cfg.max_gamma)
        bad |= not marg.holds
        row = {"a_n": a, "window_truncated": spec.truncated, **marg.to_dict()}
        if cfg.n is not None:
            law = make_law_from_config(cfg, cfg.n)
            proc = poisson_process_bound(spec, law, max_gamma=cfg.max_gamma, jobs=cfg.jobs)
            row["process"] = proc.to_dict()
        rows.append(row)
    return Report(cfg.command, cfg.mode, asdict(cfg), rows), bad


def cmd_sweep(cfg: ExperimentConfig) -> tuple[Report, bool]:
    kappa = 1.0 if cfg.kappa is None else cfg.kappa
    rows = []
    for n in _grid(cfg):
        law = make_law_from_config(cfg, n)
        gamma = gamma_from_config(cfg, n)
        rows.append(theorem1_row(law, gamma, t=cfg.t, kappa=kappa, epsilon=cfg.epsilon, delta=cfg.delta,
                                 jobs=cfg.jobs).to_dict())
    bad = not all(r["accept"] for r in rows)
    crossover = next((r["n"] for r in rows if r["bound"] is not None and r["bound"] <= 1), None)
    return Report(cfg.command, cfg.mode, asdict(cfg), rows, {"first_non_vacuous_n": crossover}), bad


HANDLERS = {
    "tv-exact": cmd_tv_exact,
    "certify-ht": cmd_certify,
    "bound": cmd_bound,
    "partition": cmd_partition,
    "bonferroni": cmd_bonferroni,
    "erdos-kac": cmd_erdos_kac,
    "poisson": cmd_poisson,
    "sweep": cmd_sweep,
}


def run(cfg: ExperimentConfig, out: str | None = None) -> int:
    LIMITS.max_gamma = cfg.max_gamma
    LIMITS.max_n = cfg.max_n
    try:
        report, violated = HANDLERS[cfg.command](cfg)
    except CertificationError as exc:
        sys.stderr.write(exc.describe() + "\n")
        sys.stderr.write(json.dumps(exc.certificate.to_dict(), sort_keys=True) + "\n")
        return EXIT_USAGE
    except KbvError as exc:
        sys.stderr.write(exc.describe() + "\n")
        return EXIT_USAGE
    text = report.render(cfg.output)
    target = out
    if target is None and os.environ.get("KBV_REPORT_DIR"):
        target = str(Path(os.environ["KBV_REPORT_DIR"]) / f"{cfg.command}.{cfg.output}")
    if target:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_text(text)
    else:
        sys.stdout.write(text)
    if violated:
        sys.stderr.write("hard inequality violated\n")
        return EXIT_VIOLATION
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    limits = (LIMITS.max_gamma, LIMITS.max_n)
    try:
        return run(config_from_args(ns), ns.out)
    finally:
        LIMITS.max_gamma, LIMITS.max_n = limits


if __name__ == "__main__":
    sys.exit(main())
