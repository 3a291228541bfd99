use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Randomly holds out `n_holdout` rows; returns `(rest, holdout)`.
pub fn holdout(ds: &Dataset, n_holdout: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    if n_holdout > ds.n() {
        return Err(Error::invalid(format!(
            "cannot hold out {n_holdout} of {} samples",
            ds.n()
        )));
    }
    let mut idx: Vec<usize> = (0..ds.n()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (held, rest) = idx.split_at(n_holdout);
    let (mut rest, mut held) = (rest.to_vec(), held.to_vec());
    rest.sort_unstable();
    held.sort_unstable();
    Ok((ds.subset(&rest), ds.subset(&held)))
}

/// Draws `per_class[c]` rows of each class without replacement; returns
/// `(sampled, remainder)`.
pub fn balanced_downsample(ds: &Dataset, per_class: &[usize], seed: u64) -> Result<(Dataset, Dataset)> {
    if per_class.len() != ds.num_classes() {
        return Err(Error::invalid(format!(
            "{} per-class counts for {} classes",
            per_class.len(),
            ds.num_classes()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = vec![false; ds.n()];
    for (class, &want) in per_class.iter().enumerate() {
        let mut members: Vec<usize> = (0..ds.n()).filter(|&i| ds.y()[i] == class).collect();
        if members.len() < want {
            return Err(Error::InsufficientSamples {
                class,
                requested: want,
                available: members.len(),
            });
        }
        members.shuffle(&mut rng);
        members[..want].iter().for_each(|&i| picked[i] = true);
    }
    let sampled: Vec<usize> = (0..ds.n()).filter(|&i| picked[i]).collect();
    let rest: Vec<usize> = (0..ds.n()).filter(|&i| !picked[i]).collect();
    Ok((ds.subset(&sampled), ds.subset(&rest)))
}

/// `n` rows drawn with replacement.
pub fn bootstrap(ds: &Dataset, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = (0..ds.n()).map(|_| rng.gen_range(0..ds.n())).collect();
    ds.subset(&idx)
}
