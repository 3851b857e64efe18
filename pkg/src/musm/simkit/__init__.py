"""Campaign engine, config files, CSV output and the command-line tool."""

from .config import dump_config, load_config, loads_config
from .csvio import HEADER, read_csv, write_csv
from .engine import (
    SYSTEMS,
    BerRecord,
    CellState,
    SimConfig,
    cell_seed,
    run_campaign,
    simulate_cell,
    simulate_symbol,
    simulate_symbols,
    transmit_power,
)
from .overlay import theory_curve, theory_overlay

__all__ = [
    "SYSTEMS",
    "BerRecord",
    "CellState",
    "SimConfig",
    "HEADER",
    "cell_seed",
    "dump_config",
    "load_config",
    "loads_config",
    "read_csv",
    "run_campaign",
    "simulate_cell",
    "simulate_symbol",
    "simulate_symbols",
    "theory_curve",
    "theory_overlay",
    "transmit_power",
    "write_csv",
]
