"""Complex joint probabilities, ergodic phase randomization and meter-based state preparation."""

from .causality import (
    ActionSchedule,
    DeterminismMatrix,
    action_phase_representation,
    determinism_matrix,
    prep_joint,
    prep_measure_chain,
    reconstruct_state,
    reference_state,
    rerepresent,
    transformed_probability,
)
from .ergodic import (
    DephasingReport,
    PhaseDistribution,
    characteristic_function,
    dephase,
    ergodic_kernel,
    phase_average_channel,
    prepare_state,
)
from .hilbert import (
    BasisSet,
    DensityOperator,
    Observable,
    PureState,
    UnitaryMap,
    build_basis,
    eigendecompose,
    phase_unitary,
    qubit_bases,
)
from .meter import (
    JointState,
    MeterModel,
    interact,
    prepare_by_measurement,
    readout,
    reduce_system,
)
from .quasiprob import (
    ComplexConditional,
    ComplexJointDistribution,
    kd_joint,
    predict_outcome,
    propagate_joint,
    transform_kernel,
    weak_conditional,
)
from .report import RunReport, emit_report
from .scenarios import ScenarioConfig, run_scenario

__version__ = "0.1.0"
