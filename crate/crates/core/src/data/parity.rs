use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::matrix::Matrix;

/// Index of the pure-noise group in [`gen_parity`] data.
pub const PARITY_NOISE_GROUP: usize = 4;

/// 8-way XOR with a noise pair: columns 0..8 are informative bits, columns
/// 8 and 9 are independent noise bits, and the label is the parity of the
/// informative bits. Groups are the five consecutive column pairs.
pub fn gen_parity(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("parity data needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * 10);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut parity = 0usize;
        for c in 0..10 {
            let bit = rng.gen_range(0..2usize);
            if c < 8 {
                parity ^= bit;
            }
            data.push(bit as f64);
        }
        labels.push(parity);
    }
    let x = Matrix::from_vec(n, 10, data)?;
    let part = GroupPartition::with_names(
        (0..5).map(|g| vec![2 * g, 2 * g + 1]).collect(),
        vec![
            "bits0-1".into(),
            "bits2-3".into(),
            "bits4-5".into(),
            "bits6-7".into(),
            "noise".into(),
        ],
        10,
    )?;
    Dataset::new(x, labels, 2, part)
}
