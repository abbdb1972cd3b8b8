use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use super::IngestError;

pub const TRAIN_FRACTION: f64 = 0.2;
pub const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit<R> {
    pub train: Vec<R>,
    pub validation: Vec<R>,
    pub test: Vec<R>,
    pub seed: u64,
}

/// `(train, validation)` sizes for `n` records; test takes the rest.
pub fn split_sizes(n: usize) -> (usize, usize) {
    let train = (n as f64 * TRAIN_FRACTION).round() as usize;
    let validation = (n as f64 * VALIDATION_FRACTION).round() as usize;
    (train, validation)
}

/// Seeded SplitMix64 Fisher-Yates permutation, then a 20/20/60 cut.
pub fn split_dataset<R: Clone>(records: &[R], seed: u64) -> Result<DatasetSplit<R>, IngestError> {
    let n = records.len();
    if n < 5 {
        return Err(IngestError::TooFewRecords { n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SplitMix64::seed_from_u64(seed));
    let (n_train, n_val) = split_sizes(n);
    let pick = |range: &[usize]| {
        range
            .iter()
            .map(|&i| records[i].clone())
            .collect::<Vec<_>>()
    };
    Ok(DatasetSplit {
        train: pick(&order[..n_train]),
        validation: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
        seed,
    })
}
