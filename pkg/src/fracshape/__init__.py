"""Fractional perimeters, isoperimetry and small-volume minimizers in the plane."""

from .fractional import (
    PerimeterValue,
    QuadratureSpec,
    fractional_mean_curvature,
    fractional_perimeter,
    fractional_perimeter_mc,
    mean_curvature_radial,
)
from .harness import SweepRecord, emit_report, fit_power_law, run_sweep
from .isoperimetry import (
    fraenkel_asymmetry,
    quantitative_check,
    symmetric_rearrangement_check,
    wulff_deficit,
)
from .lemmas import aux_h_identity, comparison_lemma_check, frac_derivative_bound_check
from .potentials import Potential, rescaled_potential
from .shapes import GridSet, IntervalUnion, RadialShape, RescaleMap, load_shape, rasterize, save_shape
from .solver import SolveConfig, calibrate_penalty, lagrange_multiplier, minimize

__version__ = "0.1.0"
