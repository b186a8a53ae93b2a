"""Data-driven reduced order models for active-array wave imaging."""

from .imaging import (Image, image_backprojection, image_ideal, image_norm,
                      image_pixel_scan, image_rtm, range_derivative)
from .internal import (InternalWave, SnapshotBasis, basis_from,
                       build_reference_basis, internal_wave, psf_norm, rom_psf)
from .medium import (ArrayGeometry, ConfigurationError, ImagingGrid, Medium,
                     Reflector, homogeneous_medium, preset_scenario)
from .pulse import Pulse, discrete_sources
from .rom import (BlockMatrix, FactorizationError, add_noise, assemble_mass,
                  assemble_stiffness, block_cholesky, default_lambda_min,
                  regularize_mass, rom_propagator)
from .solver import (DataTensor, ShotRecord, SnapshotFields,
                     compute_data_tensor, simulate_all_shots, simulate_shot,
                     simulate_snapshots)

__version__ = "0.1.0"
