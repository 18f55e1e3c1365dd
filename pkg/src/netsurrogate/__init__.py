"""Structure-preserving surrogate networks: uniform sampling of edge weights
under vertex-weight and edge-weight interval constraints."""

__version__ = "0.1.0"

from .cycles import (BasisCatalog, CatalogSet, CycleVector, InvariantError, SpanningTree,  # noqa: E402
                     build_catalog, build_catalogs, build_spanning_tree, classify,
                     enumerate_generators, fundamental_cycle, pair_vector)
from .diagnostics import (NormTrace, RangeReport, convergence_point, frobenius_distance,  # noqa: E402
                          range_report, record_trace, start_trace)
from .graph import (DirectedWeightedGraph, EqualityProblem, WeightedGraph,  # noqa: E402
                    connected_components, directed_to_bipartite, incidence_matrix, map_back,
                    to_equality_form, validate, vertex_weight)
from .ingest import ConstraintSpec, IngestionOptions, apply_constraints, parse_edges  # noqa: E402
from .sampler import (ChainState, InfeasibleError, RunSummary, UnboundedError,  # noqa: E402
                      alpha_interval, init_chain, propose_generator, run, step)
