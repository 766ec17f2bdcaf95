//! Federated protocol: aggregation rules, participation gating and the round loop.

mod aggregate;
mod protocol;

pub use aggregate::{
    encoding_aware_weights, fairness_weights, fedavg, inverse_variance_weights,
    layerwise_aggregate, masked_aggregate, noise_aware_aggregate, pad_params, softmax_neg,
    sporadic_select, weighted_average, MaskedParams,
};
pub use protocol::{
    mean_std, run_experiment, run_round, summarize, Algorithm, ClientData, ClientProfile,
    ClientRound, DataSetup, ExperimentSpec, Federation, ProtocolConfig, Resolved, RoundRecord,
    SeedRun, ServerState, Strategy, Summary, TauMode, ADAPTIVE_TAU_RANGE,
};
