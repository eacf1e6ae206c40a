"""Energy-reliability analysis for boolean formulas of unreliable gates."""

from .allocation import (
    Allocation,
    AllocationError,
    ConvergenceError,
    InfeasibleError,
    KKTReport,
    MaxReliabilityResult,
    SymmetricLevels,
    certify_kkt,
    closed_form_symmetric,
    max_reliability_alloc,
    min_energy_alloc,
    oracle_min_energy,
    printed_childsum_alloc,
    symmetric_level_ratio,
    threshold_energy,
)
from .bounds import (
    BoundReport,
    ReliabilityTarget,
    ScalingRow,
    circuit_energy_bound,
    invert_path_budget,
    scaling_table,
    universal_energy_bound,
    universal_energy_bound_printed,
)
from .circuits import (
    CircuitError,
    GateNode,
    GateTree,
    Ref,
    balanced_tree,
    circuit_to_json,
    input_fanout,
    input_path,
    leaf_gate_ids,
    line_circuit,
    maximal_paths,
    parse_circuit,
)
from .energy import (
    EnergyFailureModel,
    ModelError,
    PhysicalValidation,
    model_spec,
    parse_model,
    validate_physical,
)
from .info import binary_entropy, mutual_information
from .reliability import (
    EvalReport,
    InfoAuditRow,
    SdpiCheck,
    error_probability,
    error_probability_bruteforce,
    info_audit,
    output_probability,
    reliability_report,
    sdpi_check,
    true_value,
)

__version__ = "0.1.0"
