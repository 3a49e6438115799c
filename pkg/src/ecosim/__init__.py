"""Non-iterative co-simulation over power bonds with energy-based corrections
(NEPCE) and energy-based adaptive macro stepping (ECCO)."""

from .coupling import (
    CouplingGraph,
    InputHistory,
    Port,
    PowerBond,
    SimulatorSlave,
    extrapolate_inputs,
    map_outputs_to_inputs,
    validate_graph,
)
from .ecco import EccoConfig, error_indicator, next_step_size
from .energy import BondEnergyRecord, residual_energy_step, residual_power, transmitted_power, update_metrics
from .master import CosimMaster, CosimResult, MasterPolicy, StepRecord, run_cosimulation
from .nepce import (
    CorrectionMode,
    NepceConfig,
    coupling_defect,
    feedthrough_correction,
    feedthrough_gain,
    plain_correction,
)

__version__ = "0.1.0"

__all__ = [
    "BondEnergyRecord",
    "CorrectionMode",
    "CosimMaster",
    "CosimResult",
    "CouplingGraph",
    "EccoConfig",
    "InputHistory",
    "MasterPolicy",
    "NepceConfig",
    "Port",
    "PowerBond",
    "SimulatorSlave",
    "StepRecord",
    "coupling_defect",
    "error_indicator",
    "extrapolate_inputs",
    "feedthrough_correction",
    "feedthrough_gain",
    "map_outputs_to_inputs",
    "next_step_size",
    "plain_correction",
    "residual_energy_step",
    "residual_power",
    "run_cosimulation",
    "transmitted_power",
    "update_metrics",
    "validate_graph",
]
