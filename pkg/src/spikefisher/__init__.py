"""Spiked Fisher matrices: sampling, spectra, limiting laws and Monte Carlo checks."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (  # noqa: E402
    AssumptionReport,
    EntryDist,
    Regime,
    SpikeModel,
    build_spike_model,
    check_assumptions,
    kappa,
    paper_spike_schedule,
)
from .sampling import (  # noqa: E402
    CovariancePair,
    SampleMatrices,
    draw_samples,
    form_covariances,
    read_matrix,
    replication_seed,
    write_matrix,
)
from .spectra import (  # noqa: E402
    Esd,
    SpectralResult,
    empirical_m_tilde,
    empirical_stieltjes,
    f0_eigenvalues,
    fisher_eigenvalues,
    spectral_result,
)
from .limitlaw import (  # noqa: E402
    MultiSpikeParams,
    ThetaSolution,
    WachterParams,
    classical_limit,
    multi_spike_cov,
    multi_spike_params,
    nu_for,
    sample_block_matrix,
    sample_block_matrices,
    sigma_sq,
    solve_theta,
    wachter_stieltjes,
    wachter_support,
)
from .montecarlo import (  # noqa: E402
    ExperimentConfig,
    ExperimentSummary,
    Mode,
    block_law_check,
    consistency_table,
    run_experiment,
    run_replication,
)
