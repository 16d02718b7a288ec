"""Coherence of quantum measurements: monotones, robustness, tomography."""

from .linalg import (
    ValidationError,
    conj_sandwich,
    eig_min,
    hermitian_part,
    is_psd,
)
from .povm import (
    Povm,
    born_distribution,
    dephase_measurement,
    dephase_state,
    is_incoherent,
    povm_from_json,
    povm_to_json,
    random_density_matrix,
    random_povm,
    require_valid,
    validate,
)
from .channels import (
    KrausChannel,
    SioDecomposition,
    amplitude_damping,
    classify_sio,
    dephasing_channel,
    dual_apply_nonselective,
    dual_apply_selective,
    random_sio,
)
from .monotones import (
    CsConfig,
    CsEstimate,
    c_l1,
    c_linf,
    c_s_estimate,
    distance_monotone,
    omega,
    relative_entropy,
    total_variation,
)
from .robustness import (
    RobustnessProblem,
    SdpSolution,
    dual_witness_from_pair,
    qubit_robustness_closed_form,
    robustness,
    sandwich_check,
)
from .tomography import (
    ProbeFamily,
    TomographyRecord,
    build_probe_family,
    coherence_from_counts,
    measure_probe_family,
    reconstruct_direct,
    reconstruct_general,
    sample_record,
)
from .experiment import (
    MeasurementDirection,
    SweepSpec,
    qutrit_dichotomic_povm,
    run_fig2_sweep,
    run_sweep,
    z_theta_phi,
)
from .catalog import builtin_channel, builtin_povm, coherent_block_povm, block_shift_channel

__version__ = "0.1.0"
