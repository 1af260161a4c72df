"""Node-to-position matching for wireless sensor networks via diffusion maps."""

from .channel import NoiseSpec, PropagationModel, distance_from_rssi, noisy_distance_matrix, rssi_from_distance
from .embedding import Embedding, SpectralDecomposition, embed, kernel_bandwidth, normalized_laplacian, select_eigenvectors, similarity
from .experiments import TrialConfig, accuracy, figure_recipes, run_sweep, run_trial
from .geometry import GroundTruth, PositionSet, generate_layout, load_layout, pairwise_distances, save_layout
from .matching import Assignment, align_with_anchor, cost_matrix, hungarian, match_with_orientation_search

__version__ = "0.1.0"
