"""Figure rendering for waverom pipeline outputs (file-format consumer)."""

from .figures import (render_gather_triptych, render_image_grid,
                      render_medium_layout, render_sweep_grid)
from .reader import ArtifactError, read_artifact, read_manifest

__version__ = "0.1.0"
