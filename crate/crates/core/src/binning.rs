//! Discretization of numeric feature columns into categorical bin labels.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::schema::BinningSpec;

/// Maps every value to a bin label.
///
/// Fixed-width bins are labelled `[lo,hi)`. Quantile bins are labelled `[min,max]`
/// with the smallest and largest member values, so equal values always share a bin
/// and labels are stable for a given multiset of inputs.
pub fn discretize_column(values: &[f64], spec: BinningSpec) -> Result<Vec<String>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("cannot discretize an empty column".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite value {bad} in numeric column")));
    }
    spec.validate()?;
    Ok(match spec {
        BinningSpec::FixedWidth { width } => values
            .iter()
            .map(|&v| {
                let k = (v / width).floor();
                // `+ 0.0` folds negative zero into zero
                format!("[{},{})", k * width + 0.0, (k + 1.0) * width + 0.0)
            })
            .collect(),
        BinningSpec::Quantile { bins } => quantile_labels(values, bins),
    })
}

/// Bin index per value. Values are ranked; a run of equal values takes the bin of its
/// first rank, i.e. `floor(rank * bins / n)`. With distinct values this yields bin sizes
/// in `{floor(n/bins), ceil(n/bins)}`.
pub fn quantile_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0; n];
    let mut rank = 0;
    while rank < n {
        let value = values[order[rank]];
        let bin = rank * bins / n;
        let mut end = rank;
        while end < n && values[order[end]] == value {
            out[order[end]] = bin;
            end += 1;
        }
        rank = end;
    }
    out
}

fn quantile_labels(values: &[f64], bins: usize) -> Vec<String> {
    let assignment = quantile_bins(values, bins);
    let mut bounds: HashMap<usize, (f64, f64)> = HashMap::new();
    for (&v, &b) in values.iter().zip(&assignment) {
        let e = bounds.entry(b).or_insert((v, v));
        e.0 = e.0.min(v);
        e.1 = e.1.max(v);
    }
    assignment
        .iter()
        .map(|b| {
            let (lo, hi) = bounds[b];
            format!("[{lo},{hi}]")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eight_values_into_quartiles() {
        let values: Vec<f64> = (1..=8).map(f64::from).collect();
        let labels = discretize_column(&values, BinningSpec::Quantile { bins: 4 }).unwrap();
        assert_eq!(
            labels,
            ["[1,2]", "[1,2]", "[3,4]", "[3,4]", "[5,6]", "[5,6]", "[7,8]", "[7,8]"]
        );
    }

    #[test]
    fn budgets_fixed_width() {
        let budgets = [2.5e6, 1.0e7, 1.99e7, 2.0e7, 0.0];
        let labels = discretize_column(&budgets, BinningSpec::FixedWidth { width: 1e7 }).unwrap();
        assert_eq!(
            labels,
            [
                "[0,10000000)",
                "[10000000,20000000)",
                "[10000000,20000000)",
                "[20000000,30000000)",
                "[0,10000000)"
            ]
        );
    }

    #[test]
    fn constant_column_is_one_bin() {
        let labels = discretize_column(&[3.0; 10], BinningSpec::Quantile { bins: 4 }).unwrap();
        assert!(labels.iter().all(|l| l == "[3,3]"));
    }

    #[test]
    fn ties_share_a_bin() {
        let values = [1.0, 2.0, 2.0, 2.0, 2.0, 3.0, 4.0, 5.0];
        let bins = quantile_bins(&values, 4);
        assert!(bins[1..5].iter().all(|&b| b == bins[1]));
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(discretize_column(&[], BinningSpec::default()).is_err());
        assert!(discretize_column(&[1.0, f64::NAN], BinningSpec::default()).is_err());
        assert!(discretize_column(&[1.0, f64::INFINITY], BinningSpec::default()).is_err());
    }

    proptest! {
        #[test]
        fn distinct_values_balance_bins(
            values in prop::collection::hash_set(-1_000_000i64..1_000_000, 1..200),
            bins in 1usize..12,
        ) {
            let values: Vec<f64> = values.into_iter().map(|v| v as f64).collect();
            let n = values.len();
            prop_assume!(bins <= n);
            let assignment = quantile_bins(&values, bins);
            let mut sizes = vec![0usize; bins];
            for b in assignment {
                sizes[b] += 1;
            }
            for s in sizes {
                prop_assert!(s == n / bins || s == n.div_ceil(bins), "size {} for n={} bins={}", s, n, bins);
            }
        }

        #[test]
        fn quantile_bins_are_monotone(values in prop::collection::vec(-100.0f64..100.0, 1..100), bins in 1usize..8) {
            let assignment = quantile_bins(&values, bins);
            for i in 0..values.len() {
                for j in 0..values.len() {
                    if values[i] < values[j] {
                        prop_assert!(assignment[i] <= assignment[j]);
                    }
                    if values[i] == values[j] {
                        prop_assert_eq!(assignment[i], assignment[j]);
                    }
                }
            }
        }
    }
}
