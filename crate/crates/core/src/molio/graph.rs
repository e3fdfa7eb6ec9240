use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use super::element::{Element, ElementTable};
use super::formula::Formula;
use super::MolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub const ALL: [BondOrder; 4] = [BondOrder::Single, BondOrder::Double, BondOrder::Triple, BondOrder::Aromatic];

    /// Bond order in half units (aromatic = 3, i.e. 1.5).
    pub fn half_units(self) -> u32 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BondOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Aromatic => "aromatic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub radicals: u8,
    pub aromatic: bool,
    /// Hydrogens attached to this atom that are not explicit graph nodes.
    pub implicit_h: u32,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom { element, charge: 0, radicals: 0, aromatic: false, implicit_h: 0 }
    }

    pub fn with_h(mut self, h: u32) -> Self {
        self.implicit_h = h;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond { a, b, order }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Labeled undirected molecular graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph {
    id: String,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// `adjacency[a]` lists `(neighbor, bond index)` in bond order.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolGraph {
    /// Builds a graph, rejecting self-loops, duplicate bonds, out-of-range
    /// indices and out-of-range charge or radical values.
    pub fn new(id: impl Into<String>, atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, MolError> {
        let n = atoms.len();
        for (i, atom) in atoms.iter().enumerate() {
            if !(-2..=2).contains(&atom.charge) {
                return Err(MolError::Invalid(format!("atom {i}: formal charge {} outside [-2, 2]", atom.charge)));
            }
            if atom.radicals > 4 {
                return Err(MolError::Invalid(format!("atom {i}: radical count {} outside [0, 4]", atom.radicals)));
            }
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for (k, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n {
                return Err(MolError::Invalid(format!("bond {k} references atom outside 0..{n}")));
            }
            if bond.a == bond.b {
                return Err(MolError::Invalid(format!("bond {k} is a self-loop on atom {}", bond.a)));
            }
            if !seen.insert((bond.a.min(bond.b), bond.a.max(bond.b))) {
                return Err(MolError::Invalid(format!("duplicate bond between {} and {}", bond.a, bond.b)));
            }
            adjacency[bond.a].push((bond.b, k));
            adjacency[bond.b].push((bond.a, k));
        }
        Ok(MolGraph { id: id.into(), atoms, bonds, adjacency })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Bond order sum of an atom in half units.
    pub fn bond_half_units(&self, atom: usize) -> u32 {
        self.adjacency[atom].iter().map(|&(_, b)| self.bonds[b].order.half_units()).sum()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| !a.element.is_hydrogen()).count()
    }

    /// Molecular formula including implicit and explicit hydrogens.
    pub fn formula(&self) -> Formula {
        let mut f = Formula::new();
        for atom in &self.atoms {
            f.add_atoms(atom.element, 1);
            f.add_atoms(Element::H, atom.implicit_h);
        }
        f
    }

    pub fn is_connected(&self) -> bool {
        if self.atoms.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.atoms.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = queue.pop_front() {
            for &(u, _) in &self.adjacency[a] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.atoms.len()
    }

    /// Marks bonds lying on at least one cycle (non-bridges).
    pub fn ring_bonds(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut is_bridge = vec![false; self.bonds.len()];
        let mut timer = 0;
        for start in 0..n {
            if disc[start] != usize::MAX {
                continue;
            }
            // iterative DFS: (atom, bond used to enter, next neighbor cursor)
            let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
            disc[start] = timer;
            low[start] = timer;
            timer += 1;
            while let Some(&mut (v, parent_bond, ref mut cursor)) = stack.last_mut() {
                if *cursor < self.adjacency[v].len() {
                    let (u, b) = self.adjacency[v][*cursor];
                    *cursor += 1;
                    if b == parent_bond {
                        continue;
                    }
                    if disc[u] == usize::MAX {
                        disc[u] = timer;
                        low[u] = timer;
                        timer += 1;
                        stack.push((u, b, 0));
                    } else {
                        low[v] = low[v].min(disc[u]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[v]);
                        if low[v] > disc[p] {
                            is_bridge[parent_bond] = true;
                        }
                    }
                }
            }
        }
        is_bridge.into_iter().map(|b| !b).collect()
    }

    /// Marks atoms that belong to at least one ring.
    pub fn ring_atoms(&self) -> Vec<bool> {
        let ring_bonds = self.ring_bonds();
        let mut out = vec![false; self.atoms.len()];
        for (bond, &in_ring) in self.bonds.iter().zip(&ring_bonds) {
            if in_ring {
                out[bond.a] = true;
                out[bond.b] = true;
            }
        }
        out
    }

    /// Same graph with atoms renumbered: new atom `i` is old atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<MolGraph, MolError> {
        let n = self.atoms.len();
        if perm.len() != n {
            return Err(MolError::Invalid("permutation length mismatch".into()));
        }
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(MolError::Invalid("not a permutation".into()));
            }
            inverse[old] = new;
        }
        let atoms = perm.iter().map(|&old| self.atoms[old]).collect();
        let bonds = self.bonds.iter().map(|b| Bond::new(inverse[b.a], inverse[b.b], b.order)).collect();
        MolGraph::new(self.id.clone(), atoms, bonds)
    }

    /// Unused valence in half bond units; negative when over-bonded.
    pub fn valence_deficit(&self, atom: usize, table: &ElementTable) -> i64 {
        let a = &self.atoms[atom];
        let full = 2 * table.valence(a.element) as i64;
        full - self.bond_half_units(atom) as i64 - 2 * a.implicit_h as i64
    }
}

/// Subgraph induced on the non-hydrogen atoms. Explicit hydrogen neighbors
/// are folded into each heavy atom's `implicit_h`.
pub fn heavy_skeleton(g: &MolGraph) -> Result<MolGraph, MolError> {
    let mut map = vec![usize::MAX; g.num_atoms()];
    let mut atoms = Vec::new();
    for (i, atom) in g.atoms().iter().enumerate() {
        if !atom.element.is_hydrogen() {
            map[i] = atoms.len();
            atoms.push(*atom);
        }
    }
    if atoms.is_empty() {
        return Err(MolError::NoHeavyAtoms(g.id().to_string()));
    }
    let mut bonds = Vec::new();
    for bond in g.bonds() {
        match (map[bond.a], map[bond.b]) {
            (usize::MAX, usize::MAX) => {}
            (usize::MAX, heavy) | (heavy, usize::MAX) => atoms[heavy].implicit_h += 1,
            (a, b) => bonds.push(Bond::new(a, b, bond.order)),
        }
    }
    let skeleton = MolGraph::new(g.id().to_string(), atoms, bonds)?;
    if !skeleton.is_connected() {
        return Err(MolError::Disconnected(g.id().to_string()));
    }
    Ok(skeleton)
}

#[derive(Debug, Serialize, Deserialize)]
struct AtomRecord {
    el: String,
    #[serde(default)]
    chg: i8,
    #[serde(default)]
    rad: u8,
    #[serde(default)]
    arom: bool,
    #[serde(default)]
    h: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct MolRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    smiles: Option<String>,
    atoms: Vec<AtomRecord>,
    bonds: Vec<(usize, usize, BondOrder)>,
}

impl MolGraph {
    /// One JSON object on a single line.
    pub fn to_json_line(&self, smiles: Option<&str>) -> String {
        let rec = MolRecord {
            id: self.id.clone(),
            smiles: smiles.map(str::to_string),
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomRecord {
                    el: a.element.symbol().to_string(),
                    chg: a.charge,
                    rad: a.radicals,
                    arom: a.aromatic,
                    h: a.implicit_h,
                })
                .collect(),
            bonds: self.bonds.iter().map(|b| (b.a, b.b, b.order)).collect(),
        };
        serde_json::to_string(&rec).expect("molecule record serializes")
    }

    pub fn from_json_line(line: &str) -> Result<MolGraph, MolError> {
        let rec: MolRecord = serde_json::from_str(line).map_err(|e| MolError::Json(e.to_string()))?;
        let atoms = rec
            .atoms
            .iter()
            .map(|a| {
                Ok(Atom { element: a.el.parse()?, charge: a.chg, radicals: a.rad, aromatic: a.arom, implicit_h: a.h })
            })
            .collect::<Result<Vec<_>, MolError>>()?;
        let bonds = rec.bonds.iter().map(|&(a, b, o)| Bond::new(a, b, o)).collect();
        MolGraph::new(rec.id, atoms, bonds)
    }
}

/// Reads molecule JSONL, skipping blank lines.
pub fn read_molecules<R: BufRead>(reader: R) -> Result<Vec<MolGraph>, MolError> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| MolError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mol = MolGraph::from_json_line(&line).map_err(|e| MolError::Line(lineno + 1, Box::new(e)))?;
        out.push(mol);
    }
    Ok(out)
}

pub fn write_molecules<W: Write>(mut writer: W, mols: &[MolGraph], with_smiles: bool) -> std::io::Result<()> {
    for mol in mols {
        let smiles = if with_smiles { super::smiles::to_smiles(mol).ok() } else { None };
        writeln!(writer, "{}", mol.to_json_line(smiles.as_deref()))?;
    }
    Ok(())
}
