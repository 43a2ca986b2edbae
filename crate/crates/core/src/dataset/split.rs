use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::manifest::DatasetManifest;
use crate::error::{Error, Result};
use crate::seed;

/// Shuffles shape indices with `seed` and partitions them by `fractions`.
///
/// Each split gets `floor(fraction * total)` indices; the shortfall up to
/// `floor(sum * total)` goes to the largest split (first by name on ties).
/// Splits are assigned in name order and stored sorted.
pub fn split(manifest: &DatasetManifest, fractions: &BTreeMap<String, f64>, seed: u64) -> Result<DatasetManifest> {
    if fractions.is_empty() {
        return Err(Error::Validation("no split fractions given".into()));
    }
    if let Some((name, f)) = fractions.iter().find(|(_, f)| !(f.is_finite() && **f >= 0.0)) {
        return Err(Error::Validation(format!("fraction for {name} must be >= 0, got {f}")));
    }
    let sum: f64 = fractions.values().sum();
    if sum > 1.0 + 1e-9 {
        return Err(Error::Validation(format!("fractions sum to {sum} > 1")));
    }
    let total = manifest.total_shapes;
    let alloc = |f: f64| ((f * total as f64 + 1e-9).floor() as u64).min(total);
    let mut sizes: BTreeMap<&str, u64> = fractions.iter().map(|(k, &f)| (k.as_str(), alloc(f))).collect();
    let assigned: u64 = sizes.values().sum();
    let target = alloc(sum.min(1.0));
    if target > assigned {
        let largest = fractions
            .iter()
            .fold(None::<(&str, f64)>, |best, (k, &f)| match best {
                Some((_, bf)) if bf >= f => best,
                _ => Some((k.as_str(), f)),
            })
            .unwrap()
            .0;
        *sizes.get_mut(largest).unwrap() += target - assigned;
    }

    let mut order: Vec<u64> = (0..total).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut splits = BTreeMap::new();
    let mut cursor = 0usize;
    for (name, size) in sizes {
        let mut idx = order[cursor..cursor + size as usize].to_vec();
        idx.sort_unstable();
        cursor += size as usize;
        splits.insert(name.to_string(), idx);
    }
    let out = DatasetManifest {
        splits: Some(splits),
        ..manifest.clone()
    };
    out.validate()?;
    Ok(out)
}
