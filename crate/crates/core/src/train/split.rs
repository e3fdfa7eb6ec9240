use serde::{Deserialize, Serialize};

use super::{SpectrumRecord, Split, TrainError};
use crate::hash::{combine, hash_bytes};

/// Fractions of molecules assigned to each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.6, val: 0.2, test: 0.2 }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<(), TrainError> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(TrainError::Config(format!(
                "split ratios {}/{}/{} must be non-negative and sum to 1",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }
}

/// Split of a molecule id: a uniform draw in [0, 1) from a stable hash of
/// the seed and id, bucketed by cumulative ratio.
pub fn split_of(id: &str, ratios: &SplitRatios, seed: u64) -> Split {
    let u = (combine(seed, hash_bytes(id.as_bytes())) >> 11) as f64 / (1u64 << 53) as f64;
    if u < ratios.train {
        Split::Train
    } else if u < ratios.train + ratios.val {
        Split::Val
    } else {
        Split::Test
    }
}

/// Tags every record in place. Records sharing a molecule id always share a
/// split. Only the random molecule-id split is provided; scaffold splits are
/// not implemented.
pub fn split_dataset(records: &mut [SpectrumRecord], ratios: &SplitRatios, seed: u64) -> Result<(), TrainError> {
    ratios.validate()?;
    for r in records {
        r.split = split_of(r.molecule.id(), ratios, seed);
    }
    Ok(())
}
