//! Benchmark fixtures shared by the criterion targets.

use slowthink_core::hsic::{self, SampleSet};
use slowthink_core::info::{random_sequence, ChannelSequence, FanoSuiteConfig};
use slowthink_core::{DecayModel, ProcessConfig, SelectorModel};

pub fn ideal_process(lambda_tau: f64, path_length: usize) -> ProcessConfig {
    ProcessConfig::new(
        DecayModel::exponential(lambda_tau).expect("positive lambda"),
        SelectorModel::Ideal,
        path_length,
    )
}

pub fn channel_sequence(index: u64) -> ChannelSequence {
    random_sequence(&FanoSuiteConfig::default(), index)
}

pub fn gaussian_pair(n: usize, d: usize, seed: u64) -> (SampleSet, SampleSet) {
    let mut rng = slowthink_core::rng::stream(seed, 0);
    let x = hsic::gaussian_samples(n, d, &mut rng).expect("n >= 2");
    let y = hsic::gaussian_samples(n, d, &mut rng).expect("n >= 2");
    (x, y)
}
