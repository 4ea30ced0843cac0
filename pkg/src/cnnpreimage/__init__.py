"""Exact geometry of single-channel convolutional ReLU layers.

Dual bases of layer arrangements, exact preimages of outputs, nesting and
contraction diagnostics for circulant layers, and tracing of the
piecewise-affine input manifold that a network maps onto an affine output
manifold.
"""

from .circulant import (ConeDescriptor, ContractionReport, Kernel, NestingReport, check_contraction,
                        check_nesting, check_shift_equivariance, circulant_layer, cone_of, is_circulant,
                        kernel_of)
from .config import Tolerances, get_tolerances, set_tolerances, use_tolerances
from .dual_basis import (DualBasis, PreimageSet, build_dual_basis, preimage, preimage_contains,
                         preimage_contains_batch, sample_preimage)
from .errors import *  # noqa: F401,F403
from .export import GeometryExport, export_json, export_obj, export_svg, load_json
from .geometry import AffineSubspace, Hyperplane, Sign, affine_intersect, intersect_planes, side_of
from .layer import LayerMap, cell_signature, enumerate_cells, forward, output_pattern
from .manifold import (PiecewiseManifold, backtrace_layer, continuity_error, intersect_manifold,
                       pushforward_distance, trace_manifold)
from .network import LayeredPreimage, Network, activations, net_forward, net_preimage
from .polyhedra import AffinePiece
from .scenarios import ScenarioConfig, bundled, bundled_names, run_scenario

__version__ = "0.1.0"
