"""Virtual CGRA overlay toolchain.

Grid modeling and generation, dataflow task-graph compilation,
configuration bitstream codec, cycle-level simulation, and a Sobel
edge-detection demo, plus the `vcgra` command-line front end.
"""

from .bitstream import (
    VirtualBitstream,
    bitstream_to_bytes,
    decode,
    encode,
    grid_digest,
    parse_bitstream,
)
from .grid import (
    ChannelSpec,
    GridSpec,
    LevelSpec,
    channel_params,
    derive_channels,
    export_netlist,
    generate_rectangular,
    grid_stats,
    grid_to_json,
    parse_grid,
    validate_grid,
)
from .mapping import (
    ChannelConfig,
    GridConfig,
    Opcode,
    PeConfig,
    Placement,
    config_to_json,
    map_graph,
    parse_config,
    place,
    route,
)
from .pgm import Image, load_pgm, save_pgm
from .simulator import PeFsm, RunResult, SimGrid, latency, pe_alu, run, trace_to_csv
from .sobel import (
    SOBEL_GX,
    SOBEL_GY,
    build_sobel_graph,
    run_sobel_on_grid,
    sobel_reference,
)
from .taskgraph import (
    LeveledGraph,
    TaskGraph,
    evaluate,
    graph_width,
    levelize,
    parse_graph,
    strip_levels,
)

__version__ = "0.1.0"
