from .abstraction import (INITIAL_STATE, Discretizer, abstract_slate, encode_state,
                          realize_action)
from .maxent import (MaxEntResult, RewardModel, TrainingError, empirical_feature_expectation,
                     factored_features, feature_map, load_model, matching_residual, maxent_irl,
                     onehot_features, save_model, save_trace, survival_weights,
                     trajectory_feature_counts)
from .mdp import (AbstractTrajectory, ConvergenceError, TransitionModel, bellman_residual,
                  estimate_transitions, greedy_policy, policy_evaluation,
                  state_visitation_frequencies,
                  value_iteration)
