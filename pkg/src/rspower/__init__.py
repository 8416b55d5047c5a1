"""Power allocation for rate-splitting MU-MIMO downlink.

Simulation library for a multiuser MIMO downlink in which every user's
message is split into one shared common stream and per-user private
streams.  The package provides:

- the system / channel model with imperfect transmitter-side CSI
  (:mod:`rspower.model`),
- matched-filter, zero-forcing and regularized (MMSE) private precoders
  plus an SVD-based common precoder (:mod:`rspower.precoders`),
- closed-form mean-square-error objectives, analytic gradients and a
  Monte-Carlo oracle that validates them (:mod:`rspower.objective`),
- gradient-descent power allocators with stability bounds and baseline
  allocations (:mod:`rspower.alloc`),
- SINR / ergodic sum-rate evaluation (:mod:`rspower.rates`),
- an analytic FLOP-count model (:mod:`rspower.complexity`),
- experiment presets and CSV emission (:mod:`rspower.harness`) with a
  CLI front end (:mod:`rspower.cli`).
"""

from rspower.errors import (
    BudgetExceededError,
    ConfigurationError,
    DegenerateGeometryError,
    DivergenceError,
    DomainError,
    SingularChannelError,
    UnstableGeometryWarning,
)
from rspower.model import (
    ChannelRealization,
    StreamMapping,
    SystemConfig,
    TransformMatrix,
    build_transform,
    generate_channel,
    transmit_signal,
)
from rspower.objective import (
    CouplingTable,
    OracleEstimate,
    PowerVector,
    UnconstrainedOptimum,
    build_coupling,
    grad_apa,
    grad_apar,
    mse_apa,
    mse_apar,
    mse_oracle,
    mse_oracle_robust,
    unconstrained_minimizer,
)
from rspower.precoders import PrecoderSet, make_common_precoder, make_private_precoder, make_precoder_set
from rspower.alloc import (
    AllocatorRun,
    StepBounds,
    grid_search_delta,
    grid_search_full,
    random_allocation,
    run_apa,
    run_apar,
    simplex_candidate_count,
    step_bounds,
    uniform_allocation,
)
from rspower.rates import RateReport, ergodic_sum_rate, instantaneous_rates, sinr_common, sinr_private
from rspower.complexity import FlopReport, big_o_table, flop_report, flops_apa, flops_apar

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
