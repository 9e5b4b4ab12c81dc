"""Command-line entry point ``cdrum``.

Every subcommand writes one JSON document to stdout and diagnostics to
stderr.  Exit status: 0 success (holds / feasible), 1 the data fails the
requested property, 2 bad input.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import __version__, lattice
from ._accel import backend_name, set_threads
from .errors import (
    CdrumError,
    DomainIncomplete,
    MarginalityViolated,
    NotCdrum,
    ParseError,
    PositivityViolated,
    SolverStalled,
    UniverseTooLarge,
    ValidationError,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Fail(Exception):
    """Property failure carrying the JSON payload to print."""

    def __init__(self, payload: dict):
        super().__init__("property fails")
        self.payload = payload


def _emit(obj: Any, pretty: bool) -> None:
    from .io import _default

    if pretty:
        text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, default=_default)
    else:
        text = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=_default)
    sys.stdout.write(text + "\n")


def _load(args):
    from .io import load_dataset, load_domain

    if not args.input:
        raise ParseError("--input is required")
    p = load_dataset(args.input, args.numeric, args.tolerance)
    if getattr(args, "limited", None):
        p = p.restrict(load_domain(args.limited, p.universe, p.periods))
    return p


def _cell(u, menus, choices) -> dict:
    return {"menus": [u.menu_labels(m) for m in menus], "choices": [u.alternatives[c] for c in choices]}


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> dict:
    p = _load(args)
    return {"valid": True, "alternatives": list(p.universe.alternatives), "periods": p.periods,
            "numeric_mode": p.numeric, "observed_sequences": len(p.domain), "full_domain": p.is_full,
            "max_deviation": p.max_deviation}


def cmd_mobius(args) -> dict:
    from .mobius import truncated_mobius

    p = _load(args)
    depth = args.depth or p.periods
    if not 1 <= depth <= p.periods:
        raise ParseError(f"--depth must lie in 1..{p.periods}", field="depth")
    q = truncated_mobius(p, depth)
    u, n = p.universe, p.n
    cells = []
    for menus in lattice.canonical_sequences(n, depth):
        for choices in itertools.product(*(lattice.members(m) for m in menus)):
            cell = _cell(u, menus, choices)
            cell["q"] = q.value[menus + choices]
            cells.append(cell)
    return {"alternatives": list(u.alternatives), "depth": depth, "numeric_mode": p.numeric,
            "min_q": q.min_cell(), "cells": cells}


def cmd_check(args) -> dict:
    from .axioms import check_all

    p = _load(args)
    reports = check_all(p, args.tolerance)
    wanted = ["marginality"]
    if p.is_full:
        wanted.insert(0, "complete_monotonicity")
    if args.model == "si-cdrum":
        wanted.append("choice_set_independence")
    holds = all(reports[k].holds for k in wanted)
    out = {"model": args.model, "holds": holds, "full_domain": p.is_full, "decided_by": wanted,
           "reports": {k: r.to_dict() for k, r in reports.items()}}
    if not p.is_full:
        out["note"] = "complete monotonicity needs the full lattice; run the test subcommand"
    if not holds:
        raise _Fail(out)
    return out


def cmd_recover(args) -> dict:
    from .recovery import recover_representation, verify_representation

    p = _load(args)
    rep = recover_representation(p, args.tolerance)
    gap = verify_representation(rep, p)
    return {"representation": rep.to_dict(), "verification_gap": gap}


def _omega(args):
    if not args.omega:
        return None
    try:
        return json.loads(Path(args.omega).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad weight file {args.omega}: {exc}") from None


def cmd_test(args) -> dict:
    from .lptest import test_cdrum_facet, test_cdrum_vertex

    p = _load(args)
    start = time.perf_counter()
    exact = True if args.exact else None
    if args.form == "vertex":
        res = test_cdrum_vertex(p, omega=_omega(args), convention=args.convention, exact=exact,
                                threshold=args.threshold)
    else:
        res = test_cdrum_facet(p, omega=_omega(args), variant=args.variant, exact=exact,
                               threshold=args.threshold)
    out = res.to_dict()
    out["verdict"] = "consistent" if res.feasible else "inconsistent"
    if args.timing:
        out["seconds"] = time.perf_counter() - start
        out["backend"] = backend_name()
    if not res.feasible:
        raise _Fail(out)
    return out


def cmd_sizes(args) -> dict:
    from .lptest import matrix_sizes

    if args.n < 1:
        raise ParseError("--n must be positive", field="n")
    e, f = matrix_sizes(args.n)
    return {"E_rows": e, "F_rows": f}


def _load_ccs(args):
    from .core import to_conditional

    return to_conditional(_load(args), args.tolerance)


def cmd_fit(args) -> dict:
    from .parametric import identify_habit_logit, identify_learning_logit

    if not args.outside:
        raise ParseError("--outside is required", field="outside")
    ccs = _load_ccs(args)
    if args.model == "habit":
        params = identify_habit_logit(ccs, args.outside)
    else:
        params = identify_learning_logit(ccs, args.outside)
    return {"params": params.to_dict()}


def _read_params(path):
    from .parametric import HabitLogitParams

    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad parameter file {path}: {exc}") from None
    obj = obj.get("params", obj)
    if obj.get("model", "habit") != "habit":
        raise ParseError("long-run prediction needs habit-logit parameters", field="model")
    try:
        return HabitLogitParams.from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad parameter file {path}: {exc}") from None


def cmd_predict_longrun(args) -> dict:
    from .parametric import identify_habit_logit, stationary_distribution

    if args.params:
        params = _read_params(args.params)
    else:
        if not args.outside:
            raise ParseError("--outside is required when fitting from --input", field="outside")
        params = identify_habit_logit(_load_ccs(args), args.outside)
    pred = stationary_distribution(params, menu=args.menu.split(",") if args.menu else None)
    out = pred.to_dict()
    out["params"] = params.to_dict()
    return out


def cmd_classify(args) -> dict:
    from .parametric import check_parametric_axioms, classify

    p = _load(args)
    flags = classify(p, args.tolerance)
    reports = check_parametric_axioms(p, args.tolerance)
    return {"classification": flags, "reports": {k: r.to_dict() for k, r in reports.items()}}


def _simulate_source(args):
    from .parametric import HabitLogitParams, LearningLogitParams
    from .recovery import CdrumRepresentation

    try:
        obj = json.loads(Path(args.params).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad source file {args.params}: {exc}") from None
    obj = obj.get("representation", obj.get("params", obj))
    try:
        if "nu" in obj:
            return CdrumRepresentation.from_dict(obj)
        if obj.get("model") == "learning":
            return LearningLogitParams.from_dict(obj)
        return HabitLogitParams.from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad source file {args.params}: {exc}") from None


def cmd_simulate(args) -> dict:
    from .core import FLOAT, ObservationDomain, Universe, from_conditional
    from .io import dataset_to_dict, load_domain
    from .parametric import _evaluate
    from .recovery import CdrumRepresentation, evaluate_representation
    from .simulate import perturb, random_mixture, sample_choices

    numeric = args.numeric or ("float" if args.params else "rational")
    if args.params:
        src = _simulate_source(args)
        u = src.universe
        T = src.periods if isinstance(src, CdrumRepresentation) else args.periods
        domain = load_domain(args.limited, u, T) if args.limited else ObservationDomain.full(u.size, T)
        if args.agents:
            p = sample_choices(src, domain, args.agents, args.seed, numeric, periods=T)
        elif isinstance(src, CdrumRepresentation):
            p = evaluate_representation(src, domain)
        else:
            p = from_conditional(_evaluate(src, u, T, domain), domain)
    else:
        labels = [a for a in (args.alternatives or "a,b,c").split(",") if a]
        u = Universe(tuple(labels))
        p, _ = random_mixture(u, args.periods, args.components, args.seed, numeric)
        if args.epsilon:
            p = perturb(p, args.epsilon, args.seed)
        if args.limited:
            p = p.restrict(load_domain(args.limited, u, args.periods))
        if args.agents:
            raise ParseError("--agents needs --params", field="agents")
    if p.numeric != numeric and numeric == FLOAT:
        p = p.to_float()
    data = dataset_to_dict(p)
    if args.output:
        from .io import save_dataset

        save_dataset(p, args.output)
    return data


def cmd_oracle(args) -> dict:
    from .lptest import oracle_agreement

    out = oracle_agreement(args.trials, args.seed, epsilon=args.epsilon or 0.2)
    if not out["all_agree"]:
        raise _Fail(out)
    return out


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    g = p.add_argument_group("common")
    if data:
        g.add_argument("--input", help="dataset JSON")
        g.add_argument("--numeric", choices=("rational", "float"), help="number mode for loading")
        g.add_argument("--tolerance", type=float, help="axiom and validation tolerance")
        g.add_argument("--limited", help="domain file listing observed menu sequences")
    g.add_argument("--threads", type=int, help="numba worker threads")
    g.add_argument("--pretty", action="store_true", help="indent the JSON output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdrum", description="Consumption-dependent random utility toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    s = sub.add_parser("validate", help="load and validate a dataset")
    _common(s)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("mobius", help="Möbius inverse of a full-lattice dataset")
    _common(s)
    s.add_argument("--depth", type=int, help="truncation depth (default: all periods)")
    s.set_defaults(func=cmd_mobius)

    s = sub.add_parser("check", help="run the axiom suite")
    _common(s)
    s.add_argument("--model", choices=("cdrum", "si-cdrum"), default="cdrum")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("recover", help="recover a representation")
    _common(s)
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("test", help="quadratic feasibility test")
    _common(s)
    s.add_argument("--form", choices=("vertex", "facet"), default="facet")
    s.add_argument("--convention", choices=("extreme", "per-choice"), default="extreme",
                   help="extreme-point enumeration for the vertex form")
    s.add_argument("--variant", choices=("limited", "full"), default="limited",
                   help="flow constraints on the unobserved part only, or everywhere")
    s.add_argument("--omega", help="JSON weight vector or matrix")
    s.add_argument("--threshold", type=float, default=1e-8)
    s.add_argument("--exact", action="store_true", help="certify with exact arithmetic")
    s.add_argument("--timing", action="store_true", help="include wall time (output no longer reproducible)")
    s.set_defaults(func=cmd_test)

    s = sub.add_parser("sizes", help="row counts of the vertex and facet matrices")
    _common(s, data=False)
    s.add_argument("--n", type=int, required=True, help="number of alternatives")
    s.set_defaults(func=cmd_sizes)

    s = sub.add_parser("fit", help="identify logit parameters")
    _common(s)
    s.add_argument("--model", choices=("habit", "learning"), default="habit")
    s.add_argument("--outside", help="normalised outside option label")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("predict-longrun", help="stationary shares of a habit logit")
    _common(s)
    s.add_argument("--params", help="habit-logit parameter JSON (else fit from --input)")
    s.add_argument("--outside", help="outside option when fitting")
    s.add_argument("--menu", help="comma-separated menu (default: all alternatives)")
    s.set_defaults(func=cmd_predict_longrun)

    s = sub.add_parser("classify", help="two-period logit model membership")
    _common(s)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("simulate", help="generate a dataset")
    _common(s, data=False)
    s.add_argument("--params", help="representation or logit parameter JSON")
    s.add_argument("--alternatives", help="comma-separated labels for a random mixture")
    s.add_argument("--periods", type=int, default=2)
    s.add_argument("--components", type=int, default=3)
    s.add_argument("--epsilon", type=float, default=0.0, help="perturbation size")
    s.add_argument("--agents", type=int, help="sample this many agents per menu sequence")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--numeric", choices=("rational", "float"))
    s.add_argument("--limited", help="domain file listing observed menu sequences")
    s.add_argument("--output", help="also write the dataset here")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("oracle", help="agreement study of the tests and the axioms")
    _common(s, data=False)
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--epsilon", type=float, default=0.2)
    s.set_defaults(func=cmd_oracle)
    return parser


_INPUT_ERRORS = (ParseError, ValidationError, DomainIncomplete, UniverseTooLarge)
_FAIL_ERRORS = (MarginalityViolated, NotCdrum, PositivityViolated, SolverStalled)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    set_threads(getattr(args, "threads", None))
    pretty = getattr(args, "pretty", False)
    try:
        payload = args.func(args)
    except _Fail as fail:
        _emit(fail.payload, pretty)
        return EXIT_FAIL
    except _FAIL_ERRORS as exc:
        print(f"cdrum {args.command}: {exc}", file=sys.stderr)
        body = {"error": type(exc).__name__, "message": str(exc)}
        report = getattr(exc, "report", None) or getattr(exc, "verdict", None)
        if report is not None and hasattr(report, "to_dict"):
            body["report"] = report.to_dict()
        _emit(body, pretty)
        return EXIT_FAIL
    except (*_INPUT_ERRORS, CdrumError, ValueError) as exc:
        print(f"cdrum {args.command}: {exc}", file=sys.stderr)
        _emit({"error": type(exc).__name__, "message": str(exc)}, pretty)
        return EXIT_INPUT
    _emit(payload, pretty)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
