"""Riemann solvers for conservation laws with rough media coefficients.

Four 3x3 models share the machinery: two-phase polymer flooding (plain,
adsorptive, and with gravity) and a second-order traffic model, each over a
piecewise-constant medium coefficient k(x).  The package provides the global
Riemann solvers, the reduced 2x2 solvers they compose, the monotone-envelope
minimum-jump kernel, Lagrangian potential diagnostics, wave-front tracking
for the traffic model, and a vanishing-viscosity reference solver.
"""

from .envelopes import (
    InfeasibleJumpError,
    JumpPath,
    MonotoneEnvelope,
    ScalarFn,
    build_envelope,
    critical_points,
    minimum_jump,
    scalar_riemann,
)
from .fluxes import (
    AdsorptionParams,
    DomainError,
    FluxModel,
    PolymerFluxParams,
    TrafficParams,
    adsorption,
    make_model,
    polymer_flux,
    polymer_flux_dc,
    polymer_flux_ds,
    traffic_flux,
)
from .full3x3 import (
    TraceSet,
    build_I1,
    build_I2,
    c_wave_sign,
    solve_adsorption3,
    solve_gravity3,
    solve_polymer3,
    solve_traffic3,
)
from .lagrangian import (
    DegenerateCoordinateError,
    LagrangianProfile,
    PotentialField,
    initial_curve,
    jacobian_report,
    potential,
    verify_decoupling,
)
from .reduced import (
    solve_adsorption2,
    solve_polymer2,
    solve_sk2,
    solve_traffic2,
)
from .simulate import (
    Front,
    FrontState,
    FrontTrackingRun,
    PiecewiseData,
    ViscousRun,
    front_tracking,
    sample_fan,
    viscous_solve,
)
from .waves import (
    FanError,
    PolymerState,
    TrafficState,
    Wave,
    WaveFan,
    conserved,
    continuity_residuals,
    fan_diagnostics,
    flux_vector,
    rankine_hugoniot_residual,
)

__version__ = "0.1.0"
