"""Rank-based detection of association driven by a subpopulation.

Two tests share the machinery here: a fast screen built on the
per-observation footrule components (CSF), calibrated against Gaussian
copulas, and an adaptive confirmatory test built on the components of
Kendall's tau (CKT), whose null is the matched Frank copula. The package
also ships the copula samplers, Mallows/multistage ranking models,
calibration tooling, and a reproducible Monte Carlo harness.
"""

from .rankcore import (
    FootruleComponents,
    RankedSample,
    footrule_components,
    kendall_distance,
    kendall_tau,
    per_point_discordance,
    pseudo_observations,
    rank_vector,
    ranked_sample,
)
from .copulas import (
    CopulaSample,
    debye1,
    empirical_copula_distance,
    frank_density,
    phi_from_theta,
    sample_frank_copula,
    sample_gaussian_copula,
    sample_independent,
    sample_log_density,
    tau_from_phi,
    tau_from_theta,
    theta_from_tau,
)
from .mallows import (
    MallowsFit,
    MultistageFit,
    expected_distance,
    log_normalizer,
    mallows_mle,
    multistage_decompose,
    multistage_fit_smooth,
    sample_mallows,
    stage_expected_v,
)
from .csf import (
    CalibrationTable,
    TestReport,
    beta_mle,
    calibrate_beta_curve,
    csf_statistic,
    csf_test,
    load_calibration,
    lookup_beta,
    save_calibration,
)
from .ckt import (
    CktResult,
    NullReference,
    TaupathOrder,
    ckt_llr,
    ckt_null_reference,
    ckt_test,
    taupath_reorder,
)
from .simharness import (
    ExperimentResult,
    ExperimentSpec,
    gen_gaussian_mixture,
    gen_mallows_subpop,
    run_convergence_experiment,
    run_density_distance_experiment,
    run_level_experiment,
    run_power_experiment,
)
from .dataio import Dataset, DataError, load_csv, load_wine
from .pairscan import PairScanReport, scan_pairs, test_pair

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
