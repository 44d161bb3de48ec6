"""Streaming binary sketches: online principal subspace plus a diagonal-uniformizing rotation."""

from .baselines import RotationStrategy, random_orthogonal
from .evaluation import EvalReport, GroundTruth, average_precision, build_ground_truth, evaluate
from .givens import GivensParams, TwoByTwoProblem, apply_right_transpose, apply_two_sided, solve_uniformizing_rotation
from .hashing import BinaryCode, RefreshPolicy, StreamingEncoder, hamming_distance, pack_bits, unpack_bits
from .io import SyntheticSpec, generate_synthetic, read_fvecs, write_fvecs
from .subspace import OpastState, ProjectedCovariance, opast_init, opast_update, projected_cov_update
from .unifdiag import UniformizationResult, refresh_rotation, uniformize_diagonal

__version__ = "0.1.0"
