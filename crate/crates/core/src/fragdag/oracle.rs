use super::build::{component, low_bits};
use super::{FragError, Mask};
use crate::molio::MolGraph;

pub const ORACLE_MAX_ATOMS: usize = 12;

/// Every non-empty atom mask whose induced subgraph is connected, by brute
/// force over all `2^n` masks. Sorted ascending.
pub fn exhaustive_oracle(skeleton: &MolGraph) -> Result<Vec<Mask>, FragError> {
    let n = skeleton.num_atoms();
    if n > ORACLE_MAX_ATOMS {
        return Err(FragError::OracleLimit { atoms: n, limit: ORACLE_MAX_ATOMS });
    }
    let mut out = Vec::new();
    for mask in 1..=low_bits(n) {
        let intact = skeleton
            .bonds()
            .iter()
            .enumerate()
            .filter(|(_, b)| mask & (1 << b.a) != 0 && mask & (1 << b.b) != 0)
            .fold(0, |acc: Mask, (k, _)| acc | (1 << k));
        let start = mask.trailing_zeros() as usize;
        if component(skeleton, start, intact) == mask {
            out.push(mask);
        }
    }
    Ok(out)
}
