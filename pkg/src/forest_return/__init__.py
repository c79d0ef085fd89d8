"""Return rate on capital for even-aged forest management.

The package computes expected operating profit rate, expected capitalization
and their ratio, the expected return rate, for clearcut rotations with
optional commercial thinnings, and searches for the rotation and thinning
schedule that maximise it.
"""

__version__ = "0.1.0"

from .accounting import (
    AccrualLedger,
    EconParams,
    RotationReport,
    accrual_ledger,
    break_even_rotation,
    capitalization,
    evaluate_plan,
    expected_rates,
    operating_profit_rate,
    rotation_curves,
)
from .errors import (
    DomainError,
    ForestReturnError,
    InfeasibleThinningError,
    NoBreakEvenError,
    ScenarioError,
    SingularParameterError,
)
from .growth import (
    ConstantResponse,
    DecayingResponse,
    ManagementPlan,
    ThinningEvent,
    VolumeTrajectory,
    YieldParams,
    build_trajectory,
    volume,
    volume_derivative,
)
from .optimizer import (
    OptimizationResult,
    StylizedParams,
    optimize_rotation,
    optimize_thinnings,
    sensitivity_sweep,
    stylized_optimal_rotation,
    stylized_return,
    thinning_threshold,
)
from .prices import (
    PriceProcess,
    expected_price,
    price_level,
    verify_return_rate_invariance,
    window_prefactor,
)
from .scenario import Scenario, bundled_scenario, load_scenario, parse_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
