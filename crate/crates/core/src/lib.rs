//! Probabilistic analysis of test-time search strategies.
//!
//! The crate covers closed-form correctness bounds for single-path sampling,
//! beam-style width expansion, Best-of-N and the two MCTS envelopes
//! ([`bounds`]); exact discrete checks of the snowball-error and Fano results
//! ([`info`]); Monte Carlo simulation of the strategies themselves
//! ([`sim`]); budget calibration between BoN and tree search
//! ([`calibration`]); Gaussian-kernel HSIC with decay fitting ([`hsic`]);
//! and CSV, SVG and manifest output ([`report`]).

pub mod bounds;
pub mod calibration;
pub mod decay;
pub mod hsic;
pub mod info;
pub mod report;
pub mod rng;
pub mod sim;

pub use bounds::{BoundInput, BoundKind, BoundValue, BoundsError, CostCase, CostEntry};
pub use calibration::{CalibrationError, ExpansionTrace, NRange, TraceStats};
pub use decay::{AnswerModel, DecayError, DecayModel, SelectorModel, WrongModel};
pub use hsic::{FitModel, FitResult, HsicConfig, HsicError, PermutationTest, SampleSet};
pub use info::{ChannelSequence, FanoReport, FiniteJoint, InfoError};
pub use report::{Manifest, PlotSpec, ReportError, Series, Table};
pub use sim::{
    MonteCarloReport, ProcessConfig, SelectionRule, SimError, StrategySpec, TrialResult, Verdict,
};
