"""Boolean (fountain) percolation on bounded-degree graphs.

Simulation of the wet set, analytic subcriticality bounds, the Poisson
point-process exploration coupling and its Galton-Watson domination.
"""

__version__ = "0.1.0"

from .bounds import bounds_report, check_expo, check_subcritical, pc_lower_bound, phi, psi, xi_mean
from .exceptions import BoolPercError, ConfigError, DirectSamplerRequired, GraphError, HorizonError, LawError
from .graph import GraphView, GrowthProfile, build_graph, growth_profile
from .laws import RadiusLaw
from .model import ModelConfig
from .sampler import WetSample, sample_direct

__all__ = [
    "__version__",
    "BoolPercError",
    "ConfigError",
    "DirectSamplerRequired",
    "GraphError",
    "GraphView",
    "GrowthProfile",
    "HorizonError",
    "LawError",
    "ModelConfig",
    "RadiusLaw",
    "WetSample",
    "bounds_report",
    "build_graph",
    "check_expo",
    "check_subcritical",
    "growth_profile",
    "pc_lower_bound",
    "phi",
    "psi",
    "sample_direct",
    "xi_mean",
]
