"""Velocity selection of laser-cooled atoms in a shallow magneto-optical well.

Modules: ``physics`` (constants, units), ``potential`` (slope plus Gaussian
barrier), ``theory`` (closed forms and quadrature), ``ensemble`` (sampling,
classification, integration), ``observables`` (profiles, thermometry,
deconvolution), ``experiments`` (runs, sweeps, presets), ``config`` and
``cli``.
"""

__version__ = "0.1.0"

from .physics import RB85, PhysicalConstants, UnitError, convert, to_si  # noqa: E402
from .potential import PotentialConfig, WellGeometry, find_well_geometry  # noqa: E402
from .theory import CloudSpec, TheoryPrediction, efficiency_quadrature  # noqa: E402
from .experiments import Scenario, ScenarioError, run_selection, sweep_fig3, sweep_fig4  # noqa: E402

__all__ = [
    "RB85", "PhysicalConstants", "UnitError", "convert", "to_si",
    "PotentialConfig", "WellGeometry", "find_well_geometry",
    "CloudSpec", "TheoryPrediction", "efficiency_quadrature",
    "Scenario", "ScenarioError", "run_selection", "sweep_fig3", "sweep_fig4",
]
