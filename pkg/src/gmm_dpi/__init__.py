"""When does pre-classification processing help a plug-in Gaussian-mixture classifier?

Closed-form error and efficiency formulas, the mean-preserving projection
``A`` (built or learned), a Monte-Carlo verification protocol, a discrete
Bayes-error oracle and scikit-learn wrappers.
"""

from .closed_form import (EtaMaxResult, TheoryPoint, delta_asymptotic, efficiency_asymptotic,
                          efficiency_theoretical, find_eta_max, n_max_approx, p_hat,
                          p_hat_balanced, p_hat_log_margin)
from .dpi import DiscreteChain, bayes_error_x, bayes_error_z, random_chain, verify_dpi
from .estimators import MeanPreservingProjection, NearestMeanClassifier
from .gmm import GmmModel, LabeledDataset, TrainConfig, make_mu, sample_dataset, \
    sample_test_point, snr
from .processing import ConvergenceError, DirectionEstimate, ProcessingMatrix, apply_processing, \
    construct_processing, empirical_second_moment, learn_direction, power_iteration
from .simulation import AggregateResult, MeanEstimates, TrialResult, estimate_means, \
    exact_conditional_error, plugin_classify, run_experiment, run_trial
from .special_math import normal_pdf, q_function

__version__ = "0.1.0"
