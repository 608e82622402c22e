"""Reader and writer for the line-oriented ``.deal`` format.

Example::

    # three-tranche sequential CMO
    [pool]
    balance=1000
    wac=0.08
    wam=360

    [tranches]
    A 500
    B 300
    C 200

    [model]
    rho=0.15
    default_rate=0.05
    cir.sigma=0.1

    [simulation]
    iterations=10000
    seed=42

Every key is optional except the tranche table; omitted keys take the
defaults of :mod:`cmosim.types`.
"""
from __future__ import annotations

import re
from dataclasses import fields
from typing import Iterable, Optional

from .types import (
    CirParams,
    CreditModel,
    DealSpec,
    DefaultRateConvention,
    InterestRule,
    ModelParams,
    PrepayModel,
    PriceConvention,
    PrincipalRule,
    RichardRollParams,
    SimulationConfig,
    TrancheSpec,
    Violation,
    validate,
)

SECTIONS = ("pool", "tranches", "model", "simulation")

_RR_FIELDS = {f.name for f in fields(RichardRollParams)}
_RR_INT_FIELDS = {"seasoning_months", "mm_offset"}

KNOWN_KEYS = {
    "pool": {"balance", "wac", "wam", "principal_rule", "interest_rule"},
    "model": {
        "rho",
        "default_rate",
        "default_rate_convention",
        "confidence",
        "cir.a",
        "cir.b",
        "cir.sigma",
        "cir.r0",
        "cir.T",
        "price_convention",
        "recovery",
        "prepay",
        "psa_multiple",
        "persistent_factor",
    }
    | {f"rr.{name}" for name in _RR_FIELDS},
    "simulation": {"iterations", "seed", "credit_model", "copula_loans", "crn"},
}

_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


class DealSpecError(ValueError):
    """Raised for malformed or invalid deal files."""

    def __init__(self, message: str, line: Optional[int] = None, violations=()):
        self.line = line
        self.violations = list(violations)
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class _Raw:
    """Section -> key -> (value, line) mapping plus the ordered tranche table."""

    def __init__(self) -> None:
        self.values: dict[str, dict[str, tuple[str, Optional[int]]]] = {
            s: {} for s in SECTIONS if s != "tranches"
        }
        self.tranches: list[tuple[str, str, Optional[int]]] = []


def _tokenize(text: str) -> _Raw:
    raw = _Raw()
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).lower()
            if section not in SECTIONS:
                raise DealSpecError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            raise DealSpecError("content before the first [section] header", lineno)
        if section == "tranches":
            parts = line.split()
            if len(parts) != 2 or "=" in line:
                raise DealSpecError("expected 'name balance' in [tranches]", lineno)
            if not _NAME_RE.match(parts[0]):
                raise DealSpecError(f"bad tranche name {parts[0]!r}", lineno)
            if any(name == parts[0] for name, _, _ in raw.tranches):
                raise DealSpecError(f"duplicate tranche {parts[0]!r}", lineno)
            raw.tranches.append((parts[0], parts[1], lineno))
            continue
        if "=" not in line:
            raise DealSpecError(f"expected key=value in [{section}]", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS[section]:
            raise DealSpecError(f"unknown key {key!r} in [{section}]", lineno)
        if key in raw.values[section]:
            raise DealSpecError(f"duplicate key {key!r} in [{section}]", lineno)
        raw.values[section][key] = (value, lineno)
    return raw


def _apply_overrides(raw: _Raw, overrides: Iterable[str]) -> None:
    for item in overrides:
        if "=" not in item:
            raise DealSpecError(f"override {item!r} is not of the form section.key=value")
        path, value = (s.strip() for s in item.split("=", 1))
        section, _, key = path.partition(".")
        if section == "tranches" and key:
            for i, (name, _, _) in enumerate(raw.tranches):
                if name == key:
                    raw.tranches[i] = (name, value, None)
                    break
            else:
                raw.tranches.append((key, value, None))
            continue
        if section not in KNOWN_KEYS or key not in KNOWN_KEYS[section]:
            raise DealSpecError(f"override refers to unknown key {path!r}")
        raw.values[section][key] = (value, None)


def _conv(value: str, line: Optional[int], key: str, kind):
    try:
        if kind is bool:
            low = value.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(value)
        if kind is int:
            return int(value, 0)
        if kind is float:
            return float(value)
        if kind == "floats":
            return tuple(float(v) for v in value.split(","))
        return kind(value.lower())
    except ValueError:
        name = kind.__name__ if hasattr(kind, "__name__") else kind
        raise DealSpecError(f"{key}: cannot read {value!r} as {name}", line) from None


def _build(raw: _Raw) -> tuple[DealSpec, ModelParams, SimulationConfig]:
    def get(section: str, key: str, kind, default):
        if key not in raw.values[section]:
            return default
        value, line = raw.values[section][key]
        return _conv(value, line, f"{section}.{key}", kind)

    if not raw.tranches:
        raise DealSpecError("deal has no [tranches] entries")
    tranches = tuple(
        TrancheSpec(name, _conv(bal, line, f"tranches.{name}", float))
        for name, bal, line in raw.tranches
    )
    d = DealSpec()
    deal = DealSpec(
        pool_balance=get("pool", "balance", float, d.pool_balance),
        wac=get("pool", "wac", float, d.wac),
        wam=get("pool", "wam", int, d.wam),
        tranches=tranches,
        principal_rule=get("pool", "principal_rule", PrincipalRule, d.principal_rule),
        interest_rule=get("pool", "interest_rule", InterestRule, d.interest_rule),
    )

    c = CirParams()
    cir = CirParams(
        a=get("model", "cir.a", float, c.a),
        b=get("model", "cir.b", float, c.b),
        sigma=get("model", "cir.sigma", float, c.sigma),
        r0=get("model", "cir.r0", float, c.r0),
        horizon_T=get("model", "cir.T", float, c.horizon_T),
    )
    rr_kwargs = {}
    for name in _RR_FIELDS:
        kind = int if name in _RR_INT_FIELDS else ("floats" if name == "monthly_multiplier" else float)
        key = f"rr.{name}"
        if key in raw.values["model"]:
            value, line = raw.values["model"][key]
            rr_kwargs[name] = _conv(value, line, f"model.{key}", kind)
    m = ModelParams()
    params = ModelParams(
        rho=get("model", "rho", float, m.rho),
        annual_default_rate=get("model", "default_rate", float, m.annual_default_rate),
        default_rate_convention=get(
            "model", "default_rate_convention", DefaultRateConvention, m.default_rate_convention
        ),
        confidence=get("model", "confidence", float, m.confidence),
        cir=cir,
        rr=RichardRollParams(**rr_kwargs),
        price_convention=get("model", "price_convention", PriceConvention, m.price_convention),
        recovery_rate=get("model", "recovery", float, m.recovery_rate),
        prepay_model=get("model", "prepay", PrepayModel, m.prepay_model),
        psa_multiple=get("model", "psa_multiple", float, m.psa_multiple),
        persistent_factor=get("model", "persistent_factor", bool, m.persistent_factor),
    )

    s = SimulationConfig()
    config = SimulationConfig(
        iterations=get("simulation", "iterations", int, s.iterations),
        seed=get("simulation", "seed", int, s.seed),
        credit_model=get("simulation", "credit_model", CreditModel, s.credit_model),
        copula_loans=get("simulation", "copula_loans", int, s.copula_loans),
        crn=get("simulation", "crn", bool, s.crn),
    )
    return deal, params, config


def read_deal_spec(
    text: str, overrides: Iterable[str] = ()
) -> tuple[DealSpec, ModelParams, SimulationConfig]:
    """Parse without checking invariants (syntax and type errors still raise)."""
    raw = _tokenize(text)
    _apply_overrides(raw, overrides)
    return _build(raw)


def parse_deal_spec(
    text: str, overrides: Iterable[str] = ()
) -> tuple[DealSpec, ModelParams, SimulationConfig]:
    """Parse and validate deal-file text.

    ``overrides`` are ``section.key=value`` strings applied as if the file had
    been edited (``tranches.NAME=balance`` edits or appends a tranche).
    Raises :class:`DealSpecError` on syntax errors (with line number) and on
    any error-severity invariant violation; warnings are not fatal.
    """
    deal, params, config = read_deal_spec(text, overrides)
    errors = [v for v in validate(deal, params, config) if v.severity == "error"]
    if errors:
        raise DealSpecError("; ".join(f"{v.field}: {v.message}" for v in errors), violations=errors)
    return deal, params, config


def load_deal_spec(path, overrides: Iterable[str] = ()):
    with open(path, encoding="utf-8") as fh:
        return parse_deal_spec(fh.read(), overrides)


def serialize_deal_spec(deal: DealSpec, params: ModelParams, config: SimulationConfig) -> str:
    """Write a deal file that parses back to the same three objects."""
    lines = ["[pool]"]
    lines += [
        f"balance={deal.pool_balance!r}",
        f"wac={deal.wac!r}",
        f"wam={deal.wam}",
        f"principal_rule={deal.principal_rule.value}",
        f"interest_rule={deal.interest_rule.value}",
        "",
        "[tranches]",
    ]
    lines += [f"{t.name} {t.balance!r}" for t in deal.tranches]
    cir = params.cir
    lines += [
        "",
        "[model]",
        f"rho={params.rho!r}",
        f"default_rate={params.annual_default_rate!r}",
        f"default_rate_convention={params.default_rate_convention.value}",
        f"confidence={params.confidence!r}",
        f"cir.a={cir.a!r}",
        f"cir.b={cir.b!r}",
        f"cir.sigma={cir.sigma!r}",
        f"cir.r0={cir.r0!r}",
    ]
    if cir.horizon_T is not None:
        lines.append(f"cir.T={cir.horizon_T!r}")
    lines += [
        f"price_convention={params.price_convention.value}",
        f"recovery={params.recovery_rate!r}",
        f"prepay={params.prepay_model.value}",
        f"psa_multiple={params.psa_multiple!r}",
        f"persistent_factor={str(params.persistent_factor).lower()}",
    ]
    for f in fields(RichardRollParams):
        value = getattr(params.rr, f.name)
        if f.name == "monthly_multiplier":
            text = ",".join(repr(float(v)) for v in value)
        else:
            text = repr(value)
        lines.append(f"rr.{f.name}={text}")
    lines += [
        "",
        "[simulation]",
        f"iterations={config.iterations}",
        f"seed={config.seed}",
        f"credit_model={config.credit_model.value}",
        f"copula_loans={config.copula_loans}",
        f"crn={str(config.crn).lower()}",
        "",
    ]
    return "\n".join(lines)


__all__ = [
    "DealSpecError",
    "Violation",
    "load_deal_spec",
    "parse_deal_spec",
    "read_deal_spec",
    "serialize_deal_spec",
]
