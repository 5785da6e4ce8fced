//! Exactly-rounded summation and seed derivation.

/// Sum of `values` rounded once from the exact real sum (Shewchuk's
/// partials algorithm, as used by Python's `math.fsum`).
///
/// Training reductions go through this so that duplicating every sample of a
/// batch produces bit-identical means: the exact sum doubles, and doubling
/// commutes with rounding.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for k in 0..partials.len() {
            let mut y = partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }

    // Round the partials (non-overlapping, increasing magnitude) to nearest.
    let Some(mut hi) = partials.pop() else {
        return 0.0;
    };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Half-way correction so the result is correctly rounded.
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

/// Exactly-rounded mean; `None` for an empty input.
pub fn exact_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(exact_sum(values.iter().copied()) / values.len() as f64)
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a decorrelated child seed from a base seed and a path of indices
/// (e.g. `[stream, epoch, sample]`). Stable across platforms and releases.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_sum_beats_naive_cancellation() {
        let v = [1e100, 1.0, -1e100, 1.0];
        assert_eq!(exact_sum(v), 2.0);
        assert_eq!(exact_sum([0.1; 10]), 1.0);
        assert_eq!(exact_sum(Vec::<f64>::new()), 0.0);
    }

    #[test]
    fn derive_seed_depends_on_every_component() {
        let a = derive_seed(7, &[0, 1, 2]);
        assert_ne!(a, derive_seed(7, &[0, 2, 1]));
        assert_ne!(a, derive_seed(8, &[0, 1, 2]));
        assert_eq!(a, derive_seed(7, &[0, 1, 2]));
    }

    proptest! {
        #[test]
        fn duplicated_mean_is_bit_identical(v in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            let mut twice = v.clone();
            twice.extend_from_slice(&v);
            prop_assert_eq!(exact_mean(&v).unwrap().to_bits(), exact_mean(&twice).unwrap().to_bits());
        }

        #[test]
        fn exact_sum_is_order_independent(mut v in proptest::collection::vec(-1e6f64..1e6, 0..40)) {
            let a = exact_sum(v.iter().copied());
            v.reverse();
            prop_assert_eq!(a.to_bits(), exact_sum(v.iter().copied()).to_bits());
        }
    }
}
