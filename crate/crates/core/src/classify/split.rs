use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Index sets of a train/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draws `per_class` training indices from every class, the rest go to test.
///
/// Both index lists come back sorted so the split depends only on the seed.
pub fn stratified_split(labels: &[usize], class_count: usize, per_class: usize, seed: u64) -> Result<Split> {
    let mut by_class = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        by_class
            .get_mut(l)
            .ok_or_else(|| Error::InvalidConfig(format!("label {l} out of range for {class_count} classes")))?
            .push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.len() <= per_class {
            return Err(Error::TooFewSamples {
                class,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..per_class]);
        test.extend_from_slice(&members[per_class..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
