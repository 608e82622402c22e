"""Monte Carlo pricing of collateralised mortgage obligations."""
from .credit import (
    OneFactorParams,
    basel_capital,
    finite_pool_default_pmf,
    sample_default_fraction,
    simulate_copula_pool,
    vasicek_cdf,
)
from .dealfile import DealSpecError, load_deal_spec, parse_deal_spec, serialize_deal_spec
from .pricer import compare_models, iteration_streams, run_iteration, run_simulation
from .types import (
    CirParams,
    CreditModel,
    DealSpec,
    ModelParams,
    RichardRollParams,
    SimulationConfig,
    TrancheSpec,
    validate,
)

__version__ = "0.1.0"
