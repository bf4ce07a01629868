"""Monte Carlo engine: spectral synthesis, geometric counting and ensembles."""

from .counting import (LevelCurveSample, ZeroCount, cell_windings, count_dislocations,
                       count_joint_zeros, count_specular_2d, count_zeros_1d,
                       sample_level_curve_angles, section_crossings)
from .ensemble import (AngleHistogramTask, DerivativeZeroTask, DislocationCountTask,
                       McEnsemble, SpecularCount1DTask, SpecularCount2DTask, TimeAverage,
                       normality_stats, palm_histogram, replication_seed,
                       row_crossings_per_length, run_ensemble, time_average_level_functional)
from .synthesis import (DirectPlan2D, Field2D, LatticePlan2D, SampledPath1D, SynthesisPlan1D,
                        anisotropic_gaussian_covariance, build_lattice_plan_2d, build_plan_1d,
                        direct_plan_2d, plan_from_nodes_1d, realized_spectrum2d, ring_plan_2d,
                        rotated_anisotropy, synthesize_direct_2d, synthesize_lattice_2d,
                        synthesize_path_1d)

__all__ = [name for name in dir() if not name.startswith("_")]
