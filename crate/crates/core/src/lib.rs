//! Multileaving toolkit for comparing personalized rankings online.

pub mod cli;
pub mod error;
pub mod multileaver;
pub mod ranking;
pub mod seed;
pub mod service;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use multileaver::{
    bias_profile, candidate_rankings, gom_multileave, insensitivity, normalized_insensitivity,
    tdm_multileave, GomConfig, Method, MultileaveOutcome, PositionWeight,
};
pub use ranking::{CreditFunction, InputRankingSet, ItemId, Ranking};
pub use simulator::{simulate_accuracy, simulate_round, SimConfig, SimResult, Variant};
pub use stats::{aggregate_click, pairwise_differences, winner_set, ClickEvent, CreditVector};
