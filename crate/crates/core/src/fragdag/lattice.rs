use std::collections::BTreeMap;

use super::{is_valid_offset, FragDag};
use crate::molio::{ElementTable, Formula, IonMode};

/// One valid (node, hydrogen offset) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub node: usize,
    pub offset: i32,
    /// Position in the `nodes x (2j+1)` logit table.
    pub flat: usize,
    pub formula: usize,
    pub mass: usize,
}

/// The valid cells of a DAG's `(node, offset)` table together with the
/// distinct formulae and masses they map to.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    j: u32,
    num_nodes: usize,
    /// Node-major, offset ascending.
    cells: Vec<Cell>,
    valid: Vec<bool>,
    /// Sorted distinct formulae (with hydrogens).
    formulas: Vec<Formula>,
    formula_mass: Vec<usize>,
    /// Sorted distinct masses.
    masses: Vec<f64>,
}

impl Lattice {
    pub fn new(dag: &FragDag, j: u32, mode: IonMode, table: &ElementTable) -> Self {
        let width = 2 * j as usize + 1;
        let mut raw = Vec::new();
        let mut valid = vec![false; dag.num_nodes() * width];
        let mut formula_ids: BTreeMap<Formula, usize> = BTreeMap::new();
        for (n, node) in dag.nodes().iter().enumerate() {
            for k in 0..width {
                let offset = k as i32 - j as i32;
                if !is_valid_offset(node.h_attached, node.num_atoms(), offset) {
                    continue;
                }
                let f = node.formula.with_hydrogens((node.h_attached as i32 + offset) as u32);
                formula_ids.insert(f, 0);
                valid[n * width + k] = true;
                raw.push((n, offset, n * width + k, f));
            }
        }
        let formulas: Vec<Formula> = formula_ids.keys().copied().collect();
        for (i, v) in formula_ids.values_mut().enumerate() {
            *v = i;
        }
        let fm: Vec<f64> = formulas.iter().map(|f| f.mass(table, mode)).collect();
        let mut masses = fm.clone();
        masses.sort_by(f64::total_cmp);
        masses.dedup();
        let formula_mass =
            fm.iter().map(|m| masses.binary_search_by(|x| x.total_cmp(m)).expect("mass present")).collect::<Vec<_>>();
        let cells = raw
            .into_iter()
            .map(|(node, offset, flat, f)| {
                let fi = formula_ids[&f];
                Cell { node, offset, flat, formula: fi, mass: formula_mass[fi] }
            })
            .collect();
        Lattice { j, num_nodes: dag.num_nodes(), cells, valid, formulas, formula_mass, masses }
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn width(&self) -> usize {
        2 * self.j as usize + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Validity flags over the full `nodes x (2j+1)` table.
    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn formula_index(&self, f: &Formula) -> Option<usize> {
        self.formulas.binary_search(f).ok()
    }

    /// Mass index of each formula.
    pub fn formula_mass(&self) -> &[usize] {
        &self.formula_mass
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Valid cell count per node.
    pub fn cells_per_node(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_nodes];
        for cell in &self.cells {
            c[cell.node] += 1;
        }
        c
    }

    /// Cell count per formula.
    pub fn cells_per_formula(&self) -> Vec<usize> {
        let mut c = vec![0; self.formulas.len()];
        for cell in &self.cells {
            c[cell.formula] += 1;
        }
        c
    }
}
