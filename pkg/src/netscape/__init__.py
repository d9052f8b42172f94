"""netscape: deterministic tooling for exploring gene co-expression networks.

Provides the network data model, a 3D force-directed layout, an interaction
scene (picking, filtering, morphing, grab transforms), a frame-budget
benchmark harness, a WebSocket service, and a command line front door.
"""

from netscape.graph import (
    CsvFormatError,
    EdgeRecord,
    ModuleInfo,
    Network,
    NodeRecord,
    apply_edge_threshold,
    build_network,
    generate_synthetic,
    lookup,
    neighbors,
    parse_network,
    subset,
    write_edges_csv,
    write_nodes_csv,
)

__version__ = "0.1.0"

__all__ = [
    "CsvFormatError",
    "EdgeRecord",
    "ModuleInfo",
    "Network",
    "NodeRecord",
    "apply_edge_threshold",
    "build_network",
    "generate_synthetic",
    "lookup",
    "neighbors",
    "parse_network",
    "subset",
    "write_edges_csv",
    "write_nodes_csv",
    "__version__",
]
