"""Crossing numbers and stress of projected random geometric graphs."""

__version__ = "0.1.0"

from .crossings import (CrossingCount, Drawing2, count_crossings_bruteforce, count_crossings_sweep,
                        crossing_lemma_floor, crossing_number_of_projection)
from .experiments import ExperimentConfig, PlaneMode, ProcessKind, run_experiment
from .geometry import BodyKind, ConvexBody, Plane2, sample_plane_haar, section_volume
from .pointprocess import GeometricGraph, RegimeSchedule, build_rgg, sample_binomial, sample_poisson
from .stats import McEstimate
from .stress import WeightKind, stress_of_projection
from .theory import Constants, MomentPredictions, compute_constants, predict_moments
