"""conelab: packings, cone tests and singular-set detectors on exactly
computable model surfaces (convex polyhedra, analytic flat cones, concave
subgraphs)."""

from .metric import (FiniteMetricSpace, MetricError, Packing, GHCertificate,
                     ball, greedy_packing, exact_packing_number,
                     packing_number, induced_subpacking, gh_certificate,
                     exhaustive_gh, cross_section_metric, cone_over,
                     intersection_number)
from .surfaces import (FlatCone, PolySurface, SurfacePoint, SurfaceError,
                       build_convex_surface, intrinsic_distance,
                       intrinsic_distance_ex, sample_net, save_obj, load_obj,
                       meshed_cone, regular_tetrahedron)
from .hosts import BallNet, ConeHost, MeshHost
from .detectors import (splitting_test, strong_singular, weak_singular,
                        symmetric_singular, uniform_symmetry_test, bad_scales,
                        good_scale_search, splitting_map_probe,
                        dimension_reduction_probe, singularity_report)
from .constructions import (SpikeParams, spike_iterate, spike_sphere,
                            concave_profile, sector_decomposition,
                            smooth_convex_glue, convexity_check_1d,
                            ConcaveSubgraphSpec, subgraph_boundary,
                            DoubledSpace, middle_thirds_arcs, fat_cantor_arcs)

__version__ = "0.1.0"
