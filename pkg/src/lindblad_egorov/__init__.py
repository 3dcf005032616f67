"""Lindblad evolution of quantized observables against its classical Fokker-Planck limit.

The package discretizes phase space on a periodic grid with an exact discrete
Weyl calculus, evolves density matrices under a GKSL generator, evolves
symbols under the matching Fokker-Planck operator, and measures the
Hilbert-Schmidt distance between the two.
"""

__version__ = "0.1.0"

from .phase_space import PhaseSpaceGrid, Symbol, make_grid, sample  # noqa: E402
from .weyl import (OperatorMatrix, coherent_state, hs_norm, moyal_star,  # noqa: E402
                   quantize, weyl_symbol)
from .lindblad import build_lindbladian, evolve  # noqa: E402
from .fokker_planck import build_fp, evolve_fp, flow_jacobian, lyapunov_gamma  # noqa: E402
from .presets import get_preset, instantiate, preset_names  # noqa: E402
from .correspondence import (ExperimentConfig, duhamel_corrector, hs_distance,  # noqa: E402
                             run_experiment, scaling_sweep, theoretical_envelope)

__all__ = [
    "__version__",
    "PhaseSpaceGrid", "Symbol", "make_grid", "sample",
    "OperatorMatrix", "coherent_state", "hs_norm", "moyal_star", "quantize", "weyl_symbol",
    "build_lindbladian", "evolve",
    "build_fp", "evolve_fp", "flow_jacobian", "lyapunov_gamma",
    "get_preset", "instantiate", "preset_names",
    "ExperimentConfig", "duhamel_corrector", "hs_distance", "run_experiment",
    "scaling_sweep", "theoretical_envelope",
]
