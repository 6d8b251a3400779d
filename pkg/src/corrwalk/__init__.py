"""Common/counter-move decomposition of two correlated +-1 random walks."""

from .decomposition import (
    UNREACHED,
    Counters,
    Decomposition,
    HittingTimes,
    classify_step,
    decompose,
    extract_walks,
    hitting_times,
    reconstruct,
    run_counters,
    table1_path,
)
from .models import (
    SHIPPED,
    JointPath,
    ModelError,
    ModelSpec,
    SignPair,
    gaussian_theta,
    parse_model,
    sample_gaussian_pair,
    sample_step,
    simulate,
    simulate_batch,
    step_distribution,
    validate_model,
)

__version__ = "0.1.0"
