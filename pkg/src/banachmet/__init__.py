"""Volume growth, Lyapunov exponents and slow subspaces on finite-dimensional normed spaces."""

__version__ = "0.1.0"

from .ambient import (OperatorMatrix, Splitting, Subspace, auerbach_complement, dist_to_subspace,
                      gap, hausdorff, min_angle, operator_norm, perturbed_splitting,
                      preimage_complement)
from .cocycles import CocycleSpec, Trajectory, analytic_exponents, stream
from .estimators import LyapunovSpectrum, lyapunov_exponents
from .met import (ExponentReport, Filtration, LedgerError, complement_volume_growth, cone_growth,
                  exponent_spectrum, fast_subspace, filtration, growth_rates, projection_decay,
                  slow_subspace, sublevel_convergence)
from .norms import AmbientSpace, NormSpec
from .spectral import gelfand_number, max_volume_growth, singular_profile
from .volume import (VolumeEstimate, block_det_bounds, determinant, john_form,
                     parallelepiped_volume, unit_ball_volume)

__all__ = [
    "AmbientSpace", "CocycleSpec", "ExponentReport", "Filtration", "LedgerError",
    "LyapunovSpectrum", "NormSpec", "OperatorMatrix", "Splitting", "Subspace", "Trajectory",
    "VolumeEstimate", "analytic_exponents", "auerbach_complement", "block_det_bounds",
    "complement_volume_growth", "cone_growth", "determinant", "dist_to_subspace",
    "exponent_spectrum", "fast_subspace", "filtration", "gap", "gelfand_number", "growth_rates",
    "hausdorff", "john_form", "lyapunov_exponents", "max_volume_growth", "min_angle",
    "operator_norm", "parallelepiped_volume", "perturbed_splitting", "preimage_complement",
    "projection_decay", "singular_profile", "slow_subspace", "stream", "sublevel_convergence",
    "unit_ball_volume",
]
