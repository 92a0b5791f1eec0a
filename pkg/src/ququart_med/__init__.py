"""Simulation and analysis of a time-multiplexed minimum-error discrimination
receiver for eight single-photon states in polarization x frequency."""

from .calibration import (
    default_calibration,
    evaluate,
    fit_unitary,
    guess_probability,
    optimize_receiver,
    paper_params,
)
from .components import (
    BSParams,
    FrequencyLabel,
    ReceiverParams,
    TimingConfig,
    VBGParams,
    WaveplateSet,
    bs_amplitudes,
    timing_report,
    waveplate_set_unitary,
)
from .discrimination import (
    GuessAssignment,
    PosteriorTable,
    argmax_guess_probability,
    assign_guesses,
    average_guess_probability,
    bayes_posteriors,
    gus_bound,
    srm_oracle,
)
from .montecarlo import MCReport, UncertaintyModel, mc_guess_error, perturb
from .receiver import (
    ProbabilityTable,
    QuquartState,
    StateEnsemble,
    canonical_ensemble,
    collected_fraction,
    condition_on_detection,
    simulate_distribution,
)

__version__ = "0.1.0"
