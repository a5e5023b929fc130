"""Figure rendering for the network pipeline's CSV outputs."""

from .render import (RENDERERS, SchemaError, centrality_scatter,
                     coefficient_heatmap, density_timeseries,
                     network_snapshot, sector_block_heatmap)

__version__ = "0.1.0"

__all__ = [
    "RENDERERS", "SchemaError", "centrality_scatter", "coefficient_heatmap",
    "density_timeseries", "network_snapshot", "sector_block_heatmap",
]
