from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmosim.dealfile import DealSpecError, parse_deal_spec, read_deal_spec, serialize_deal_spec
from cmosim.types import (
    MONTHLY_MULTIPLIER,
    CirParams,
    CreditModel,
    DealSpec,
    DefaultRateConvention,
    ModelParams,
    PrepayModel,
    PriceConvention,
    PrincipalRule,
    RichardRollParams,
    SimulationConfig,
    TrancheSpec,
    validate,
)

MINIMAL = """
[pool]
balance=1000
[tranches]
A 500
B 300
C 200
"""


def test_defaults_encode_published_values():
    m = ModelParams()
    assert (m.rho, m.annual_default_rate, m.cir.r0, DealSpec().wac) == (0.15, 0.05, 0.05, 0.08)
    assert m.confidence == 0.999
    assert m.recovery_rate == 0.0
    assert DealSpec().wam == 360
    assert SimulationConfig().iterations == 10000
    assert m.default_rate_convention is DefaultRateConvention.ANNUALIZED
    assert m.price_convention is PriceConvention.DISCOUNTED_AT_SHORT_RATE
    assert (m.cir.a, m.cir.b, m.cir.sigma, m.cir.horizon(360)) == (0.2, 0.05, 0.1, 30.0)
    rr = RichardRollParams()
    assert (rr.ri_base, rr.ri_scale, rr.ri_shift, rr.ri_gain) == (0.28, 0.14, -8.571, 430.0)
    assert rr.seasoning_months == 30
    assert (rr.burnout_floor, rr.burnout_slope) == (0.3, 0.7)
    assert (rr.gamma_a_const, rr.ab_exponent) == (0.28, 0.0784)
    assert rr.monthly_multiplier == MONTHLY_MULTIPLIER == (
        0.94, 0.76, 0.74, 0.95, 0.98, 0.92, 0.98, 1.1, 1.18, 1.22, 1.23, 0.98,
    )


def test_three_tranche_deal():
    deal, params, config = parse_deal_spec(MINIMAL)
    assert [t.name for t in deal.tranches] == ["A", "B", "C"]
    assert [t.balance for t in deal.tranches] == [500, 300, 200]
    assert deal.principal_rule is PrincipalRule.SEQUENTIAL_PAY
    assert params == ModelParams()
    assert config == SimulationConfig()


def test_single_tranche_pass_through():
    deal, _, _ = parse_deal_spec("[pool]\nbalance=1000\n[tranches]\nPT 1000\n")
    assert len(deal.tranches) == 1


def test_unbalanced_tranches_rejected():
    with pytest.raises(DealSpecError, match="tranche balances ≠ pool balance"):
        parse_deal_spec(MINIMAL.replace("C 200", "C 199"))


def test_example_file_parses(example_text):
    deal, params, config = parse_deal_spec(example_text)
    assert validate(deal, params, config) == []
    assert config.iterations == 10000
    assert params.rho == 0.15


@pytest.mark.parametrize(
    "text,line",
    [
        ("[pool]\nbalance=1000\n[tranches]\nA\n", 4),
        ("balance=1000\n", 1),
        ("[pool]\nbalance 1000\n", 2),
        ("[pool]\nbalance=abc\n[tranches]\nA 1000\n", 2),
        ("[pool]\nwac=0.08\nwac=0.07\n", 3),
        ("[pool]\nfoo=1\n", 2),
        ("[nope]\n", 1),
        ("[model]\ncredit_model=basel\n", 2),
        ("[tranches]\nA 500\nA 500\n", 3),
        ("[simulation]\ncrn=maybe\n[tranches]\nA 1000\n", 2),
    ],
)
def test_syntax_errors_carry_line_numbers(text, line):
    with pytest.raises(DealSpecError) as exc:
        parse_deal_spec(text)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")


def test_comments_and_blank_lines_ignored():
    text = "# header\n\n" + MINIMAL.replace("[tranches]", "[tranches]\n# senior first")
    deal, _, _ = parse_deal_spec(text)
    assert len(deal.tranches) == 3


def test_all_keys_read():
    text = MINIMAL + """
[model]
rho=0.2
default_rate=0.03
default_rate_convention=monthly
confidence=0.99
cir.a=0.3
cir.b=0.06
cir.sigma=0.05
cir.r0=0.04
cir.T=31
price_convention=undiscounted
recovery=0.4
prepay=psa
psa_multiple=1.5
persistent_factor=true
rr.mm_offset=2
rr.monthly_multiplier=1,1,1,1,1,1,1,1,1,1,1,1
[simulation]
iterations=77
seed=5
credit_model=copula
copula_loans=50
crn=false
"""
    deal, params, config = parse_deal_spec(text)
    assert params.cir == CirParams(0.3, 0.06, 0.05, 0.04, 31.0)
    assert params.default_rate_convention is DefaultRateConvention.MONTHLY
    assert params.price_convention is PriceConvention.UNDISCOUNTED_SUM
    assert params.prepay_model is PrepayModel.PSA
    assert params.recovery_rate == 0.4 and params.psa_multiple == 1.5 and params.persistent_factor
    assert params.rr.mm_offset == 2 and params.rr.monthly_multiplier == (1.0,) * 12
    assert config == SimulationConfig(77, 5, CreditModel.GAUSSIAN_COPULA, 50, False)


def test_overrides_equal_file_edits():
    edited = MINIMAL + "[model]\ndefault_rate=0\ncir.sigma=0.02\n[simulation]\nseed=9\n"
    via_override = parse_deal_spec(MINIMAL, ["model.default_rate=0", "model.cir.sigma=0.02", "simulation.seed=9"])
    assert via_override == parse_deal_spec(edited)


def test_tranche_override():
    deal, _, _ = parse_deal_spec(MINIMAL, ["tranches.C=100", "tranches.D=100"])
    assert [(t.name, t.balance) for t in deal.tranches] == [("A", 500), ("B", 300), ("C", 100), ("D", 100)]


def test_unknown_override_rejected():
    with pytest.raises(DealSpecError, match="unknown key"):
        parse_deal_spec(MINIMAL, ["model.bogus=1"])
    with pytest.raises(DealSpecError):
        parse_deal_spec(MINIMAL, ["nonsense"])


def test_read_without_validation_keeps_bad_values():
    deal, params, _ = read_deal_spec(MINIMAL + "[model]\nrho=1.2\n")
    assert params.rho == 1.2
    assert any(v.field == "model.rho" and "rho out of (0,1)" in v.message for v in validate(deal, params))


# ---------------------------------------------------------------- validate


def test_validate_defaults_clean():
    assert validate(DealSpec(), ModelParams(), SimulationConfig()) == []


@pytest.mark.parametrize(
    "deal,params,field",
    [
        (DealSpec(), ModelParams(rho=1.2), "model.rho"),
        (DealSpec(), ModelParams(annual_default_rate=1.0), "model.default_rate"),
        (DealSpec(), ModelParams(recovery_rate=1.0), "model.recovery"),
        (DealSpec(), ModelParams(confidence=1.0), "model.confidence"),
        (DealSpec(wac=0.0), ModelParams(), "pool.wac"),
        (DealSpec(wam=0), ModelParams(), "pool.wam"),
        (DealSpec(pool_balance=-1.0, tranches=(TrancheSpec("A", -1.0),)), ModelParams(), "pool.balance"),
        (DealSpec(tranches=(TrancheSpec("A", 500), TrancheSpec("A", 500))), ModelParams(), "tranches"),
        (DealSpec(), ModelParams(cir=CirParams(a=0.0)), "model.cir.a"),
        (DealSpec(), ModelParams(cir=CirParams(r0=0.0)), "model.cir.r0"),
        (DealSpec(), ModelParams(cir=CirParams(horizon_T=20.0)), "model.cir.T"),
        (DealSpec(), ModelParams(rr=RichardRollParams(monthly_multiplier=(1.0,) * 11)), "model.rr.monthly_multiplier"),
        (DealSpec(), ModelParams(rr=RichardRollParams(seasoning_months=0)), "model.rr.seasoning_months"),
    ],
)
def test_validate_reports_violation(deal, params, field):
    errors = [v for v in validate(deal, params) if v.severity == "error"]
    assert field in {v.field for v in errors}


def test_feller_breach_is_warning():
    violations = validate(DealSpec(), ModelParams(cir=CirParams(a=0.2, b=0.05, sigma=0.2)))
    assert [(v.severity, v.message) for v in violations] == [("warning", "Feller condition violated (2ab < sigma^2)")]
    parse_deal_spec(MINIMAL + "[model]\ncir.sigma=0.2\n")  # not fatal


def test_config_violations():
    bad = SimulationConfig(iterations=0, copula_loans=0)
    fields = {v.field for v in validate(DealSpec(), ModelParams(), bad)}
    assert {"simulation.iterations", "simulation.copula_loans"} <= fields


# ---------------------------------------------------------------- round trip

rates = st.floats(0.001, 0.5)


@st.composite
def specs(draw):
    n = draw(st.integers(1, 5))
    balances = draw(st.lists(st.integers(1, 10_000), min_size=n, max_size=n))
    tranches = tuple(TrancheSpec(f"T{i}", float(b)) for i, b in enumerate(balances))
    wam = draw(st.integers(1, 480))
    deal = DealSpec(pool_balance=float(sum(balances)), wac=draw(st.floats(0.001, 0.3)), wam=wam, tranches=tranches)
    cir = CirParams(
        a=draw(rates), b=draw(rates), sigma=draw(st.floats(0.0, 0.3)), r0=draw(rates),
        horizon_T=draw(st.one_of(st.none(), st.floats(wam / 12, 60))),
    )
    rr = RichardRollParams(
        ri_gain=draw(st.floats(1.0, 1000.0)),
        monthly_multiplier=tuple(draw(st.lists(st.floats(0.1, 2.0), min_size=12, max_size=12))),
        mm_offset=draw(st.integers(0, 11)),
    )
    params = ModelParams(
        rho=draw(st.floats(0.01, 0.99)),
        annual_default_rate=draw(st.floats(0.0, 0.9)),
        default_rate_convention=draw(st.sampled_from(DefaultRateConvention)),
        confidence=draw(st.floats(0.5, 0.9999)),
        cir=cir,
        rr=rr,
        price_convention=draw(st.sampled_from(PriceConvention)),
        recovery_rate=draw(st.floats(0.0, 0.9)),
        prepay_model=draw(st.sampled_from(PrepayModel)),
        psa_multiple=draw(st.floats(0.0, 5.0)),
        persistent_factor=draw(st.booleans()),
    )
    config = SimulationConfig(
        iterations=draw(st.integers(1, 100_000)),
        seed=draw(st.integers(0, 2**64 - 1)),
        credit_model=draw(st.sampled_from(CreditModel)),
        copula_loans=draw(st.integers(1, 5000)),
        crn=draw(st.booleans()),
    )
    return deal, params, config


@settings(max_examples=75, deadline=None)
@given(specs())
def test_serialize_parse_round_trip(objs):
    text = serialize_deal_spec(*objs)
    assert parse_deal_spec(text) == objs
    assert serialize_deal_spec(*parse_deal_spec(text)) == text


def test_round_trip_of_example(example_text):
    objs = parse_deal_spec(example_text)
    assert parse_deal_spec(serialize_deal_spec(*objs)) == objs
