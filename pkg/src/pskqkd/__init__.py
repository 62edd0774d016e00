"""Asymptotic key rates of phase-encoded coherent-state QKD over thermal-loss channels."""

from .channel import (
    ChannelParams,
    EveEnsemble,
    db_to_tau,
    epsilon_to_nbar,
    eve_average_state,
    eve_conditional_state,
    eve_state_given_outcome,
    heterodyne_likelihood,
    posterior,
    propagate,
    tau_to_db,
)
from .constellation import (
    INFINITE,
    Constellation,
    average_state,
    build_constellation,
    continuous_limit_state,
    gram_schmidt_coefficients,
    overlap_matrix,
    source_entropy,
)
from .fock import (
    CutoffError,
    DensityMatrix,
    FockCutoff,
    InvalidStateError,
    StateVector,
    beam_splitter_unitary,
    coherent_vector,
    partial_trace,
    tmsv_vector,
    von_neumann_entropy,
)
from .rates import (
    QuadratureGrid,
    RatePoint,
    gaussian_rr_rate,
    holevo_dr,
    holevo_rr,
    make_grid,
    mutual_information,
    rate_dr,
    rate_dr_upper,
    rate_rr,
)

__version__ = "0.1.0"
