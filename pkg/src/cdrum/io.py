"""JSON (de)serialization of datasets and representations.

Dataset layout::

    {"alternatives": [...], "periods": T, "numeric_mode": "rational" | "float",
     "domain": [[menu, ...], ...],            # optional
     "observations": [{"menus": [menu, ...],
                       "probs": [{"choices": [...], "p": "1/4"}, ...]}]}

Menus are label lists.  Probabilities are strings.  Unlisted cells are zero.
A ``domain`` entry lists menu sequences that must each have an observation.
Output is canonical: sorted keys, canonical menu order, zero cells omitted.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from . import lattice
from .core import (
    FLOAT,
    RATIONAL,
    RandomJointChoiceRule,
    Universe,
    format_number,
    rule_from_array,
    to_number,
    zeros,
)
from .errors import CdrumError, ParseError, ValidationError


def _line_of(text: str, needle: str) -> int | None:
    pos = text.find(needle)
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def _menu_list(universe: Universe, mask: int) -> list[str]:
    return universe.menu_labels(mask)


def dataset_to_dict(p: RandomJointChoiceRule) -> dict[str, Any]:
    u = p.universe
    observations = []
    for menus in p.domain.observed:
        probs = []
        for choices in _product(menus):
            v = p.table[menus + choices]
            if v != 0:
                probs.append({"choices": [u.alternatives[c] for c in choices], "p": format_number(v)})
        observations.append({"menus": [_menu_list(u, m) for m in menus], "probs": probs})
    return {
        "alternatives": list(u.alternatives),
        "periods": p.periods,
        "numeric_mode": p.numeric,
        "observations": observations,
    }


def _product(menus):
    import itertools

    return itertools.product(*(lattice.members(m) for m in menus))


def dumps_dataset(p: RandomJointChoiceRule) -> str:
    return json.dumps(dataset_to_dict(p), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_dataset(p: RandomJointChoiceRule, path) -> None:
    Path(path).write_text(dumps_dataset(p), encoding="utf-8")


def _require(obj: dict, key: str, kind, text: str, ctx: str = ""):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"missing key {key!r}{ctx}", field=key, line=_line_of(text, f'"{key}"'))
    val = obj[key]
    if not isinstance(val, kind):
        raise ParseError(f"key {key!r} has the wrong type{ctx}", field=key, line=_line_of(text, f'"{key}"'))
    return val


def dataset_from_dict(obj: dict, text: str = "", numeric: str | None = None,
                      tolerance: float | None = None) -> RandomJointChoiceRule:
    alts = _require(obj, "alternatives", list, text)
    periods = _require(obj, "periods", int, text)
    if periods < 1:
        raise ParseError("periods must be at least 1", field="periods", line=_line_of(text, '"periods"'))
    mode = numeric or obj.get("numeric_mode", RATIONAL)
    if mode not in (RATIONAL, FLOAT):
        raise ParseError(f"unknown numeric mode {mode!r}", field="numeric_mode",
                         line=_line_of(text, '"numeric_mode"'))
    try:
        universe = Universe(tuple(alts))
    except ValidationError as exc:
        raise ParseError(str(exc), field="alternatives", line=_line_of(text, '"alternatives"')) from None
    obs = _require(obj, "observations", list, text)
    n = universe.size
    shape = (1 << n,) * periods + (n,) * periods
    table = zeros(shape, mode)
    observed = np.zeros(shape[:periods], dtype=bool)
    for i, entry in enumerate(obs):
        ctx = f" in observations[{i}]"
        menus_raw = _require(entry, "menus", list, text, ctx)
        probs = _require(entry, "probs", list, text, ctx)
        try:
            menus = tuple(universe.menu(m) for m in menus_raw)
        except ValidationError as exc:
            raise ParseError(f"{exc}{ctx}", field=f"observations[{i}].menus",
                             line=_line_of(text, json.dumps(menus_raw[0]) if menus_raw else "menus")) from None
        if len(menus) != periods:
            raise ParseError(f"expected {periods} menus{ctx}", field=f"observations[{i}].menus")
        if observed[menus]:
            raise ParseError(f"menu sequence listed twice{ctx}", field=f"observations[{i}].menus")
        observed[menus] = True
        for j, cell in enumerate(probs):
            cctx = f"{ctx}.probs[{j}]"
            choices = _require(cell, "choices", list, text, cctx)
            raw = _require(cell, "p", (str, int, float), text, cctx)
            try:
                idx = tuple(universe.index(c) for c in choices)
                value = to_number(raw, mode)
            except (ValidationError, ValueError, ZeroDivisionError) as exc:
                raise ParseError(f"{exc}{cctx}", field=f"observations[{i}].probs[{j}]",
                                 line=_line_of(text, f'"{raw}"') if isinstance(raw, str) else None) from None
            if len(idx) != periods:
                raise ParseError(f"expected {periods} choices{cctx}", field=f"observations[{i}].probs[{j}]")
            if table[menus + idx] != 0:
                raise ParseError(f"cell listed twice{cctx}", field=f"observations[{i}].probs[{j}]")
            table[menus + idx] = value
    if "domain" in obj:
        dom = _require(obj, "domain", list, text)
        for k, seq in enumerate(dom):
            try:
                key = tuple(universe.menu(m) for m in seq)
            except (ValidationError, TypeError) as exc:
                raise ParseError(str(exc), field=f"domain[{k}]", line=_line_of(text, '"domain"')) from None
            if len(key) != periods or not observed[key]:
                raise ParseError(f"domain lists menu sequence {seq} with no observation",
                                 field=f"domain[{k}]", line=_line_of(text, '"domain"'))
    if not observed.any():
        raise ParseError("no observations", field="observations", line=_line_of(text, '"observations"'))
    return rule_from_array(universe, periods, table, observed, mode, tolerance)


def loads_dataset(text: str, numeric: str | None = None, tolerance: float | None = None) -> RandomJointChoiceRule:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("top level must be an object", line=1)
    return dataset_from_dict(obj, text, numeric, tolerance)


def load_dataset(path, numeric: str | None = None, tolerance: float | None = None) -> RandomJointChoiceRule:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return loads_dataset(text, numeric, tolerance)


def load_domain(path, universe: Universe, periods: int):
    """Read ``{"periods": T, "observed": [[menu, ...], ...]}`` (or a bare list) into a domain."""
    from .core import ObservationDomain

    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        seqs = obj["observed"] if isinstance(obj, dict) else obj
        if isinstance(obj, dict) and int(obj.get("periods", periods)) != periods:
            raise ParseError(f"domain file {path} has {obj['periods']} periods, data has {periods}",
                             field="periods")
        keys = [tuple(universe.menu(m) for m in s) for s in seqs]
        if any(len(k) != periods for k in keys):
            raise ParseError(f"domain file {path} lists a sequence of the wrong length", field="observed")
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, CdrumError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"bad domain file {path}: {exc}") from None
    return ObservationDomain.from_sequences(universe.size, periods, keys)


def dumps_domain(domain, universe: Universe) -> str:
    obj = {"periods": domain.periods,
           "observed": [[universe.menu_labels(m) for m in s] for s in domain.observed]}
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def dumps(obj: Any) -> str:
    """Canonical JSON used for every CLI payload."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, default=_default)


def _default(o):
    from fractions import Fraction

    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
