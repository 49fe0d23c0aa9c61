"""Second-order statistics of MIMO Rayleigh fading channels.

Closed-form correlation coefficients, level crossing rates and fade or
outage durations for unordered eigen-channels and for the instantaneous
mutual information (IMI), together with a correlated-channel simulator
that checks them.
"""

from .channel import (
    ChannelPath,
    MimoConfig,
    ScatteringCluster,
    ScatteringModel,
    corr_coeff_h,
    corr_mag,
    generate_gram_path,
    generate_path,
)
from .config import Scenario, bundled_scenarios, load_scenario, parse_scenario
from .eigenstats import (
    EigenPdfContext,
    eigen_afd,
    eigen_corr,
    eigen_lcr,
    eigen_moments,
    joint_pdf,
    level_stats,
    marginal_pdf,
    phi_lambda,
    unordered_pair_pdf,
    varphi_lambda,
)
from .errors import (
    ConvergenceError,
    DegenerateConfigError,
    DegenerateVarianceError,
    InvalidSpectrumError,
    NoCrossingsError,
    QuadratureBudgetError,
    TruncationError,
)
from .imistats import (
    SnrConfig,
    gaussian_aod,
    gaussian_lcr,
    imi_acf,
    imi_corr,
    imi_corr_maxgap,
    imi_corr_taylor,
    imi_exceed_exact,
    imi_joint_exceed_exact,
    imi_level_stats,
    imi_mean,
    imi_moments,
)
from .montecarlo import (
    TrajectoryBundle,
    ValidationReport,
    eig_hermitian,
    empirical_afd,
    empirical_corr,
    empirical_lcr,
    extract_trajectories,
    run_validation,
)

__version__ = "0.1.0"
