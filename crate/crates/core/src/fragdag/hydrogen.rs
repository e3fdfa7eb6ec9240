use super::{FragDag, FragNode};
use crate::molio::{ElementTable, Formula, IonMode};

/// Whether hydrogen offset `i` gives a chemically plausible count for a
/// fragment with `heavy` atoms and `h` attached hydrogens.
pub fn is_valid_offset(h: u32, heavy: u32, i: i32) -> bool {
    let total = h as i64 + i as i64;
    total >= 0 && total <= 2 * heavy as i64 + 2
}

/// Candidate formulae for offsets `-j..=j`, skipping invalid hydrogen counts.
pub fn hydrogen_formulae(node: &FragNode, j: u32) -> Vec<(i32, Formula)> {
    let heavy = node.num_atoms();
    let j = j as i32;
    (-j..=j)
        .filter(|&i| is_valid_offset(node.h_attached, heavy, i))
        .map(|i| (i, node.formula.with_hydrogens((node.h_attached as i32 + i) as u32)))
        .collect()
}

/// Sorted, duplicate-free masses of every valid (node, offset) formula.
pub fn mass_set(dag: &FragDag, j: u32, mode: IonMode, table: &ElementTable) -> Vec<f64> {
    let mut masses: Vec<f64> =
        dag.nodes().iter().flat_map(|n| hydrogen_formulae(n, j)).map(|(_, f)| f.mass(table, mode)).collect();
    masses.sort_by(f64::total_cmp);
    masses.dedup();
    masses
}
