//! Fold partitioning for cross-fitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fold label per unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    /// Wraps explicit labels; every label must be below `k`.
    pub fn from_labels(fold_of: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
        }
        if let Some(&bad) = fold_of.iter().find(|&&f| f >= k) {
            return Err(Error::InvalidParameter(format!("fold label {bad} out of range for K = {k}")));
        }
        Ok(FoldAssignment { fold_of, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.fold_of
    }

    /// Evaluation indices `I_k`, ascending.
    pub fn fold(&self, k: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.fold_of[i] == k).collect()
    }

    /// Training indices `I_(-k)`, ascending.
    pub fn complement(&self, k: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.fold_of[i] != k).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }

    /// Fails unless every training complement holds at least `min_stratum`
    /// units of each arm.
    pub fn check_min_stratum(&self, a: &[u8], min_stratum: usize) -> Result<()> {
        let mut per_fold = vec![[0usize; 2]; self.k];
        let mut total = [0usize; 2];
        for (i, &f) in self.fold_of.iter().enumerate() {
            per_fold[f][a[i] as usize] += 1;
            total[a[i] as usize] += 1;
        }
        for counts in &per_fold {
            let control = total[0] - counts[0];
            let treated = total[1] - counts[1];
            if control < min_stratum || treated < min_stratum {
                return Err(Error::DegenerateArm { treated, control });
            }
        }
        Ok(())
    }
}

/// Random partition of `0..n` into `k` folds whose sizes differ by at most one.
///
/// With `stratify_on`, each arm is shuffled separately and dealt round-robin,
/// continuing the deal from one arm to the next, so each arm is spread as
/// evenly as possible and the overall sizes still differ by at most one.
pub fn partition_folds(n: usize, k: usize, stratify_on: Option<&[u8]>, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::FoldTooSmall { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = match stratify_on {
        Some(strata) => {
            if strata.len() != n {
                return Err(Error::DimensionMismatch(format!("strata has {} entries, expected {n}", strata.len())));
            }
            let mut treated: Vec<usize> = (0..n).filter(|&i| strata[i] == 1).collect();
            let mut control: Vec<usize> = (0..n).filter(|&i| strata[i] != 1).collect();
            treated.shuffle(&mut rng);
            control.shuffle(&mut rng);
            treated.into_iter().chain(control).collect()
        }
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all
        }
    };
    let mut fold_of = vec![0; n];
    for (j, &i) in order.iter().enumerate() {
        fold_of[i] = j % k;
    }
    Ok(FoldAssignment { fold_of, k })
}

/// Deterministic child seed for stream `stream` of `seed` (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn divisible_case() {
        let f = partition_folds(6, 3, None, 1).unwrap();
        assert_eq!(f.sizes(), vec![2, 2, 2]);
    }

    #[test]
    fn uneven_case() {
        let f = partition_folds(7, 3, None, 1).unwrap();
        let mut s = f.sizes();
        s.sort_unstable();
        assert_eq!(s, vec![2, 2, 3]);
    }

    #[test]
    fn deterministic() {
        let a = [1, 0, 1, 0, 0, 1, 0, 0, 1];
        assert_eq!(partition_folds(9, 3, Some(&a), 42).unwrap(), partition_folds(9, 3, Some(&a), 42).unwrap());
        assert_ne!(partition_folds(50, 5, None, 1).unwrap(), partition_folds(50, 5, None, 2).unwrap());
    }

    #[test]
    fn too_many_folds() {
        assert_eq!(partition_folds(3, 4, None, 0), Err(Error::FoldTooSmall { n: 3, k: 4 }));
    }

    #[test]
    fn min_stratum() {
        let a: Vec<u8> = (0..40).map(|i| u8::from(i % 4 == 0)).collect();
        let f = partition_folds(40, 2, Some(&a), 3).unwrap();
        assert!(f.check_min_stratum(&a, 5).is_ok());
        assert!(f.check_min_stratum(&a, 6).is_err());
    }

    proptest! {
        #[test]
        fn labels_cover_and_balance(n in 2usize..200, k in 2usize..12, seed in any::<u64>(), strat in any::<bool>(), bits in any::<u64>()) {
            prop_assume!(k <= n);
            let a: Vec<u8> = (0..n).map(|i| ((bits >> (i % 64)) & 1) as u8).collect();
            let f = partition_folds(n, k, strat.then_some(a.as_slice()), seed).unwrap();
            prop_assert_eq!(f.len(), n);
            let sizes = f.sizes();
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            if strat {
                for arm in 0..2u8 {
                    let mut per = vec![0usize; k];
                    for i in 0..n { if a[i] == arm { per[f.fold_of(i)] += 1; } }
                    prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
                    let size = per.iter().sum::<usize>();
                    if size >= k {
                        for fold in 0..k {
                            prop_assert!(size - per[fold] > 0);
                        }
                    }
                }
            }
        }
    }
}
