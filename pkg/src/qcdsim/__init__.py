"""Numerical stochastic calculus built on the covariation derivative.

Simulation-facing surface: grids, Brownian ensembles, covariation
estimators, Ito/Girsanov machinery, martingale representation, chaos
expansion of the Brownian indicator, and digital-option replication.
"""

from .chaos import (
    ChaosCoefficients,
    iterated_integral_const,
    norm_identity,
    qcd_nth_derivative,
    stroock_coeff,
    stroock_coeff_com,
    stroock_coeff_general,
    truncated_chaos,
    truncated_chaos_ensemble,
)
from .clark_ocone import (
    RepresentationReport,
    default_eps,
    expected_value,
    expected_value_tilde,
    integrand,
    integrand_com,
    reconstruct,
    reconstruct_com,
    verify_ensemble,
)
from .detfuncs import DeterministicFn
from .grid_paths import (
    PathEnsemble,
    SamplePath,
    TimeGrid,
    brownian_path,
    gaussian_increments,
    make_uniform_grid,
    shift_path,
    simulate_brownian,
)
from .heat_kernel import (
    ORDER_CAP,
    density,
    density_dx,
    derivative_chain_residual,
    heat_equation_residual,
    hermite,
    hermite_form,
    normal_cdf,
)
from .hedging import (
    HedgeRun,
    MarketSpec,
    delta_digital,
    hedge_report,
    initial_capital,
    market_price_of_risk,
    run_hedge,
    simulate_stock,
    terminal_errors,
)
from .ito_girsanov import (
    GirsanovSpec,
    IntegrandPath,
    bayes_reweight,
    cond_exp_deriv,
    cond_exp_heat,
    gauss_hermite_expectation,
    ito_integral,
    stochastic_exponential,
)
from .payoffs import PayoffSpec
from .quadratic_covariation import (
    QcdEstimatorConfig,
    QcovPath,
    default_config,
    qcd_profile,
    qcd_smoothed,
    qcd_smoothed_from_qcov,
    qcd_strong,
    qcd_strong_from_qcov,
    qcov,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
