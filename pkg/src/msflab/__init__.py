"""Transversal stability of diffusively coupled impact oscillators.

The package estimates the largest transversal Lyapunov exponent of a
network of identical harmonically forced impact oscillators directly from
simulated trajectories: short-segment flow maps are obtained by finite
differences, coupling enters through a matrix-logarithm correction of the
segment propagator, and a direct two-oscillator probe cross-checks the
exponent's sign.
"""

from .config import ConfigError, RunConfig, load_config, load_preset
from .jacobian import (
    GrazingSingularityError,
    JacobiEstimate,
    estimate_jacobian,
    event_window_jacobian,
    oscillator_flow,
)
from .matfuncs import NonInvertibleMatrixError, mat_exp, mat_log
from .msf import (
    MSFQuery,
    SPRING_COUPLING,
    SweepPoint,
    TLEResult,
    TLESettings,
    compute_tle,
    coupled_step_propagator,
    msf_sweep,
    settle_transient,
)
from .network import (
    BifurcationPoint,
    CouplingGraph,
    InvalidGraphError,
    ModeSpectrum,
    ProbeResult,
    ProbeSettings,
    TWO_NODE_GRAPH,
    all_to_all_graph,
    analyze_network,
    bifurcation_scan,
    graph_spectrum,
    load_graph,
    run_probe,
    sync_verdict,
)
from .oscillator import (
    ChatterError,
    DimensionalParams,
    EventRecord,
    ImpactOscillatorParams,
    InvalidParameterError,
    OscState,
    ResonanceError,
    nondimensionalize,
    sample_trajectory,
    simulate,
    steady_state_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "BifurcationPoint",
    "ChatterError",
    "ConfigError",
    "CouplingGraph",
    "DimensionalParams",
    "EventRecord",
    "GrazingSingularityError",
    "ImpactOscillatorParams",
    "InvalidGraphError",
    "InvalidParameterError",
    "JacobiEstimate",
    "MSFQuery",
    "ModeSpectrum",
    "NonInvertibleMatrixError",
    "OscState",
    "ProbeResult",
    "ProbeSettings",
    "ResonanceError",
    "RunConfig",
    "SPRING_COUPLING",
    "SweepPoint",
    "TLEResult",
    "TLESettings",
    "TWO_NODE_GRAPH",
    "all_to_all_graph",
    "analyze_network",
    "bifurcation_scan",
    "compute_tle",
    "coupled_step_propagator",
    "estimate_jacobian",
    "event_window_jacobian",
    "graph_spectrum",
    "load_config",
    "load_graph",
    "load_preset",
    "mat_exp",
    "mat_log",
    "msf_sweep",
    "nondimensionalize",
    "oscillator_flow",
    "run_probe",
    "sample_trajectory",
    "settle_transient",
    "simulate",
    "steady_state_coefficients",
    "sync_verdict",
    "__version__",
]
