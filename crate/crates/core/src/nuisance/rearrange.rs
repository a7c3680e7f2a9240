//! Monotone rearrangement of functions sampled on an increasing grid.

use crate::scalar::Scalar;

/// Grid resolution used when a conditional CDF is tabulated.
pub const GRID_POINTS: usize = 512;

/// Replaces values sampled on an increasing grid by their increasing
/// rearrangement (the sorted values). A no-op on monotone input.
pub fn rearrange<T: Scalar>(values: &mut [T]) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
}

/// Rearranges and clips to `[0, 1]`.
pub fn rearrange_cdf<T: Scalar>(values: &mut [T]) {
    rearrange(values);
    for v in values.iter_mut() {
        *v = v.max(T::zero()).min(T::one());
    }
}
