"""Command-line entry point ``exal``.

    exal list-problems
    exal solve --problem p1_eq --c0 1 --phi linear --tol 1e-8 --out r.json
    exal sweep --problem p2_ineq --c-list 0.01,0.1,1,10,100 --format csv
    exal check-grad --problem p2_ineq --psi poly:1,2 --samples 100
    exal regularity --problem p1_eq --x 0.5,0.5
    exal verify --problem p1_eq --suite lemmas --seed 7

Exit status: 0 on success, 1 when a check reports violations or the output
cannot be written, 2 on usage errors (bad flags, unknown problem).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from ..alf import AlfConfig
from ..errors import ContractViolation, ExalError, UnknownProblem
from ..problem import PrimalDual
from ..registry import problem_names, registry_lookup
from ..regularity import regularity_report
from ..shaping import parse_phi, parse_psi
from .. import solver as _solver
from .serialize import dumps, serialize_report
from .verify import SUITES, run_suite

COMMANDS = ("solve", "sweep", "check-grad", "regularity", "verify", "list-problems")

log = logging.getLogger("exal")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Parsed command line; ``to_argv`` gives flags that parse back to an equal config."""

    command: str
    problem: Optional[str] = None
    phi: str = "linear"
    psi: str = "const:1"
    c0: float = 1.0
    c: Optional[float] = None
    c_list: Optional[list] = None
    x: Optional[list] = None
    lam: Optional[list] = None
    mu: Optional[list] = None
    seed: int = 0
    tol: float = 1e-8
    c_max: float = 1e8
    max_outer: int = 20
    max_inner: int = 5000
    inner: str = "quasi-newton-secant"
    starts: int = 3
    samples: Optional[int] = None
    rtol: float = 1e-5
    suite: str = "all"
    out: Optional[str] = None
    format: Optional[str] = None
    extra: dict = field(default_factory=dict, compare=False)

    def to_argv(self) -> list:
        argv = [self.command]
        defaults = RunConfig(self.command)
        for f in fields(self):
            if f.name in ("command", "extra"):
                continue
            v = getattr(self, f.name)
            if v == getattr(defaults, f.name):
                continue
            flag = "--" + {"lam": "lambda"}.get(f.name, f.name).replace("_", "-")
            if isinstance(v, list):
                v = ",".join(repr(float(t)) for t in v)
            elif isinstance(v, float):
                v = repr(v)
            argv += [flag, str(v)]
        return argv


def _vector(text: str) -> list:
    text = text.strip()
    if text == "":
        return []
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}") from None


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="file of 'key = value' lines; flags take precedence")
    common.add_argument("--problem", help="registry name, see list-problems")
    common.add_argument("--phi", default="linear", help="linear | barrier:ALPHA | exp")
    common.add_argument("--psi", default="const:1", help="const:BETA | poly:BETA,S")
    common.add_argument("--c0", type=_positive, default=1.0, help="initial penalty for adaptive solves")
    common.add_argument("--c", type=_positive, default=None, help="fixed penalty")
    common.add_argument("--c-list", dest="c_list", type=_vector, default=None, help="penalties for sweeps")
    common.add_argument("--x", type=_vector, default=None, help="primal point, e.g. 0.5,0.5")
    common.add_argument("--lambda", dest="lam", type=_vector, default=None)
    common.add_argument("--mu", type=_vector, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=_positive, default=1e-8, help="gradient and KKT tolerance")
    common.add_argument("--c-max", dest="c_max", type=_positive, default=1e8)
    common.add_argument("--max-outer", dest="max_outer", type=int, default=20)
    common.add_argument("--max-inner", dest="max_inner", type=int, default=5000)
    common.add_argument("--inner", default="quasi-newton-secant", choices=["quasi-newton-secant", "steepest-descent"])
    common.add_argument("--starts", type=int, default=3, help="number of sweep starts")
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--rtol", type=_positive, default=1e-5)
    common.add_argument("--suite", default="all", choices=list(SUITES))
    common.add_argument("--out", default=None, help="output path (default: standard output)")
    common.add_argument("--format", default=None, choices=["json", "csv"])
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="exal", description="Exact augmented Lagrangian experiments.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "solve": "minimise with penalty adaptation (or at fixed --c)",
        "sweep": "exactness sweep over --c-list",
        "check-grad": "compare analytic and finite-difference gradients",
        "regularity": "constraint regularity report at --x",
        "verify": "run the property suite",
        "list-problems": "print registry names",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
    return parser


def _read_config(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip().replace("_", "-")] = value.strip()
    return out


def parse_args(argv: Sequence[str]) -> RunConfig:
    parser = build_parser()
    argv = list(argv)
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        raise UsageError("a command is required")
    if ns.config:
        try:
            cfg = _read_config(ns.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        # config lines become flags placed before the real ones, so flags win
        pre = []
        for key, value in cfg.items():
            if key in ("config", "command"):
                raise UsageError(f"config key {key!r} is not allowed")
            pre += [f"--{key}", value]
        ns = parser.parse_args([argv[0]] + pre + argv[1:])
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    kw = {f.name: getattr(ns, f.name) for f in fields(RunConfig) if f.name not in ("extra",)}
    return RunConfig(**kw)


def _problem(rc: RunConfig):
    if not rc.problem:
        raise UsageError("--problem is required")
    return registry_lookup(rc.problem)


def _alf_config(rc: RunConfig, p, c: float) -> AlfConfig:
    return AlfConfig(c, parse_phi(rc.phi), parse_psi(rc.psi, m=p.m))


def _start(rc: RunConfig, p) -> PrimalDual:
    base = p.start()
    pick = lambda given, default: default if given is None else np.asarray(given, dtype=float)
    xi = PrimalDual(pick(rc.x, base.x), pick(rc.lam, base.lam), pick(rc.mu, base.mu))
    p.check(xi)
    return xi


def _solver_config(rc: RunConfig) -> _solver.SolverConfig:
    return _solver.SolverConfig(
        c0=rc.c0,
        c_max=rc.c_max,
        grad_tol=rc.tol,
        kkt_tol=rc.tol,
        max_outer=rc.max_outer,
        max_inner=rc.max_inner,
        inner_method=rc.inner,
        seed=rc.seed,
    )


def _emit(rc: RunConfig, data: bytes) -> int:
    if rc.out is None:
        sys.stdout.write(data.decode("utf-8"))
        sys.stdout.flush()
        return 0
    try:
        with open(rc.out, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        print(f"exal: cannot write {rc.out}: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_list(rc):
    text = "".join(f"{name}\t{registry_lookup(name).description}\n" for name in problem_names())
    return _emit(rc, text.encode("utf-8"))


def _cmd_solve(rc):
    p = _problem(rc)
    start = _start(rc, p)
    sc = _solver_config(rc)
    if rc.c is not None:
        rep = _solver.minimize_fixed_c(p, _alf_config(rc, p, rc.c), start, sc)
    else:
        rep = _solver.solve_adaptive(p, _alf_config(rc, p, rc.c0), start, sc)
    if rep.diagnostic:
        log.info("%s: %s", p.name, rep.diagnostic)
    return _emit(rc, serialize_report(rep, "json"))


def _cmd_sweep(rc):
    p = _problem(rc)
    if p.known_solution is None:
        raise UsageError(f"{p.name} has no known solution to sweep against")
    c_list = rc.c_list or [0.01, 0.1, 1.0, 10.0, 100.0]
    starts = [_start(rc, p)] + _solver.random_starts(p, max(rc.starts - 1, 0), seed=rc.seed, scale=0.5)
    tab = _solver.exactness_sweep(p, c_list, starts, _solver_config(rc), _alf_config(rc, p, 1.0))
    return _emit(rc, serialize_report(tab, rc.format or "csv"))


def _cmd_check_grad(rc):
    p = _problem(rc)
    c = rc.c if rc.c is not None else rc.c0
    rep = _solver.gradient_check(p, _alf_config(rc, p, c), samples=rc.samples or 100, seed=rc.seed, rtol=rc.rtol)
    data = {
        "problem": p.name,
        "c": c,
        "samples": rep.samples,
        "rtol": rep.rtol,
        "passed": rep.passed,
        "failures": rep.failures,
        "max_rel_err": rep.max_rel_err,
        "worst_point": rep.worst_point,
    }
    code = _emit(rc, dumps(data).encode("utf-8"))
    return code or (0 if rep.passed else 1)


def _cmd_regularity(rc):
    p = _problem(rc)
    x = _start(rc, p).x if rc.x is not None else (
        p.known_solution.x if p.known_solution is not None else p.start().x
    )
    return _emit(rc, serialize_report(regularity_report(p, x), "json"))


def _cmd_verify(rc):
    names = [rc.problem] if rc.problem else problem_names()
    results = []
    for name in names:
        p = registry_lookup(name)
        for r in run_suite(p, rc.suite, seed=rc.seed, samples=rc.samples):
            if not rc.problem:
                r.check_name = f"{name}:{r.check_name}"
            results.append(r)
    code = _emit(rc, serialize_report(results, "json"))
    bad = sum(r.violations for r in results)
    if bad:
        print(f"exal: {bad} violation(s) in {sum(1 for r in results if r.violations)} check(s)", file=sys.stderr)
    return code or (1 if bad else 0)


_DISPATCH = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "check-grad": _cmd_check_grad,
    "regularity": _cmd_regularity,
    "verify": _cmd_verify,
    "list-problems": _cmd_list,
}


def run_command(argv: Sequence[str]) -> int:
    try:
        rc = parse_args(argv)
        if rc.format == "csv" and rc.command != "sweep":
            raise UsageError("--format csv is only available for sweep")
        return _DISPATCH[rc.command](rc)
    except UsageError as exc:
        print(f"exal: error: {exc}", file=sys.stderr)
        return 2
    except UnknownProblem as exc:
        print(f"exal: error: {exc}; choose from {', '.join(problem_names())}", file=sys.stderr)
        return 2
    except ContractViolation as exc:
        print(f"exal: error: {exc}", file=sys.stderr)
        return 2
    except ExalError as exc:
        print(f"exal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
