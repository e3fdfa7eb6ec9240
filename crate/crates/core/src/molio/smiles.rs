//! Restricted SMILES reader and writer.
//!
//! Supported: organic-subset atoms from the element table, bracket atoms with
//! explicit hydrogen count and charge, bonds `-`, `=`, `#`, branches and ring
//! closure digits 1-9. Lowercase aromatic atoms and `:` bonds are accepted only
//! when [`SmilesOptions::allow_aromatic`] is set. No stereo, isotopes, `%nn`
//! closures or disconnected components.

use super::element::{Element, ElementTable};
use super::graph::{Atom, Bond, BondOrder, MolGraph};
use super::MolError;

#[derive(Debug, Clone, Copy, Default)]
pub struct SmilesOptions {
    /// Accept lowercase aromatic atoms and `:` bonds.
    pub allow_aromatic: bool,
}

pub fn parse_smiles(text: &str) -> Result<MolGraph, MolError> {
    parse_smiles_with(text, &SmilesOptions::default())
}

pub fn parse_smiles_with(text: &str, opts: &SmilesOptions) -> Result<MolGraph, MolError> {
    parse_smiles_table(text, opts, ElementTable::bundled())
}

struct PendingAtom {
    atom: Atom,
    /// Bracket atoms carry an explicit hydrogen count.
    bracket: bool,
}

pub fn parse_smiles_table(text: &str, opts: &SmilesOptions, table: &ElementTable) -> Result<MolGraph, MolError> {
    let bytes = text.as_bytes();
    let mut atoms: Vec<PendingAtom> = Vec::new();
    // (a, b, explicit order)
    let mut bonds: Vec<(usize, usize, Option<BondOrder>)> = Vec::new();
    let mut branch_stack: Vec<(usize, usize)> = Vec::new();
    let mut ring_open: [Option<(usize, Option<BondOrder>, usize)>; 10] = [None; 10];
    let mut prev: Option<usize> = None;
    let mut pending_bond: Option<(BondOrder, usize)> = None;
    let mut i = 0;

    let unsupported = |offset: usize| MolError::Parse {
        offset,
        message: format!("unsupported token `{}`", text[offset..].chars().next().unwrap_or('?')),
    };

    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'-' | b'=' | b'#' | b':' => {
                if pending_bond.is_some() || prev.is_none() {
                    return Err(MolError::Parse { offset: i, message: "misplaced bond symbol".into() });
                }
                let order = match c {
                    b'-' => BondOrder::Single,
                    b'=' => BondOrder::Double,
                    b'#' => BondOrder::Triple,
                    _ if opts.allow_aromatic => BondOrder::Aromatic,
                    _ => return Err(unsupported(i)),
                };
                pending_bond = Some((order, i));
                i += 1;
            }
            b'(' => {
                let p = prev.ok_or(MolError::Parse { offset: i, message: "branch before any atom".into() })?;
                if pending_bond.is_some() {
                    return Err(MolError::Parse { offset: i, message: "bond symbol before branch".into() });
                }
                branch_stack.push((p, i));
                i += 1;
            }
            b')' => {
                let (p, _) =
                    branch_stack.pop().ok_or(MolError::Parse { offset: i, message: "unmatched `)`".into() })?;
                if pending_bond.is_some() {
                    return Err(MolError::Parse { offset: i, message: "dangling bond before `)`".into() });
                }
                prev = Some(p);
                i += 1;
            }
            b'1'..=b'9' => {
                let p = prev.ok_or(MolError::Parse { offset: i, message: "ring closure before any atom".into() })?;
                let digit = (c - b'0') as usize;
                let order = pending_bond.take().map(|(o, _)| o);
                match ring_open[digit].take() {
                    None => ring_open[digit] = Some((p, order, i)),
                    Some((q, open_order, _)) => {
                        if q == p {
                            return Err(MolError::Parse {
                                offset: i,
                                message: "ring closure onto the same atom".into(),
                            });
                        }
                        let order = match (open_order, order) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(MolError::Parse {
                                    offset: i,
                                    message: "conflicting ring bond orders".into(),
                                })
                            }
                            (a, b) => a.or(b),
                        };
                        bonds.push((q, p, order));
                    }
                }
                i += 1;
            }
            b'[' => {
                let close = text[i..]
                    .find(']')
                    .map(|k| i + k)
                    .ok_or(MolError::Parse { offset: i, message: "unterminated bracket atom".into() })?;
                let atom = parse_bracket(&text[i + 1..close], i + 1, opts)?;
                let idx = atoms.len();
                atoms.push(PendingAtom { atom, bracket: true });
                attach(&mut bonds, &mut prev, &mut pending_bond, idx);
                i = close + 1;
            }
            _ => {
                let (element, aromatic, len) = organic_symbol(bytes, i, opts).ok_or_else(|| unsupported(i))?;
                let mut atom = Atom::new(element);
                atom.aromatic = aromatic;
                let idx = atoms.len();
                atoms.push(PendingAtom { atom, bracket: false });
                attach(&mut bonds, &mut prev, &mut pending_bond, idx);
                i += len;
            }
        }
    }
    if let Some((_, offset)) = pending_bond {
        return Err(MolError::Parse { offset, message: "dangling bond at end of input".into() });
    }
    if let Some(&(_, offset)) = branch_stack.last() {
        return Err(MolError::Parse { offset, message: "unmatched `(`".into() });
    }
    if let Some((_, _, offset)) = ring_open.iter().flatten().next() {
        return Err(MolError::Parse { offset: *offset, message: "unmatched ring closure".into() });
    }
    if atoms.is_empty() {
        return Err(MolError::Parse { offset: 0, message: "empty SMILES".into() });
    }

    let resolved: Vec<Bond> = bonds
        .iter()
        .map(|&(a, b, order)| {
            let order = order.unwrap_or(if atoms[a].atom.aromatic && atoms[b].atom.aromatic {
                BondOrder::Aromatic
            } else {
                BondOrder::Single
            });
            Bond::new(a, b, order)
        })
        .collect();

    let bracket: Vec<bool> = atoms.iter().map(|p| p.bracket).collect();
    let graph = MolGraph::new(text, atoms.into_iter().map(|p| p.atom).collect(), resolved)?;
    assign_hydrogens(graph, &bracket, table)
}

fn attach(
    bonds: &mut Vec<(usize, usize, Option<BondOrder>)>,
    prev: &mut Option<usize>,
    pending: &mut Option<(BondOrder, usize)>,
    idx: usize,
) {
    if let Some(p) = *prev {
        bonds.push((p, idx, pending.take().map(|(o, _)| o)));
    }
    *prev = Some(idx);
}

fn organic_symbol(bytes: &[u8], i: usize, opts: &SmilesOptions) -> Option<(Element, bool, usize)> {
    let two = if i + 1 < bytes.len() { &bytes[i..i + 2] } else { &bytes[i..i + 1] };
    match two {
        b"Cl" => return Some((Element::Cl, false, 2)),
        b"Br" => return Some((Element::Br, false, 2)),
        b"Si" => return Some((Element::Si, false, 2)),
        b"Se" => return Some((Element::Se, false, 2)),
        b"se" if opts.allow_aromatic => return Some((Element::Se, true, 2)),
        _ => {}
    }
    let el = match bytes[i] {
        b'C' => (Element::C, false),
        b'N' => (Element::N, false),
        b'O' => (Element::O, false),
        b'P' => (Element::P, false),
        b'S' => (Element::S, false),
        b'F' => (Element::F, false),
        b'I' => (Element::I, false),
        b'c' if opts.allow_aromatic => (Element::C, true),
        b'n' if opts.allow_aromatic => (Element::N, true),
        b'o' if opts.allow_aromatic => (Element::O, true),
        b'p' if opts.allow_aromatic => (Element::P, true),
        b's' if opts.allow_aromatic => (Element::S, true),
        _ => return None,
    };
    Some((el.0, el.1, 1))
}

fn parse_bracket(body: &str, offset: usize, opts: &SmilesOptions) -> Result<Atom, MolError> {
    let b = body.as_bytes();
    let err = |k: usize, msg: &str| MolError::Parse { offset: offset + k, message: msg.to_string() };
    if b.is_empty() {
        return Err(err(0, "empty bracket atom"));
    }
    if b[0].is_ascii_digit() {
        return Err(err(0, "isotopes are not supported"));
    }
    let mut k = 1;
    if b.len() > 1 && b[1].is_ascii_lowercase() {
        k = 2;
    }
    let (element, aromatic) = match &body[..k] {
        sym if sym.as_bytes()[0].is_ascii_uppercase() => match sym.parse::<Element>() {
            Ok(e) => (e, false),
            // e.g. "Cn" is not an element but "C" followed by nothing valid
            Err(_) if k == 2 => {
                k = 1;
                (body[..1].parse::<Element>().map_err(|_| err(0, "unknown element"))?, false)
            }
            Err(_) => return Err(err(0, "unknown element")),
        },
        sym if opts.allow_aromatic => {
            let up = sym[..1].to_ascii_uppercase() + &sym[1..];
            match up.parse::<Element>() {
                Ok(e) => (e, true),
                Err(_) => return Err(err(0, "unknown aromatic element")),
            }
        }
        _ => return Err(err(0, "aromatic atoms require the aromatic option")),
    };
    let mut atom = Atom::new(element);
    atom.aromatic = aromatic;
    if k < b.len() && b[k] == b'@' {
        return Err(err(k, "stereochemistry is not supported"));
    }
    if k < b.len() && b[k] == b'H' {
        k += 1;
        let start = k;
        while k < b.len() && b[k].is_ascii_digit() {
            k += 1;
        }
        atom.implicit_h = if start == k { 1 } else { body[start..k].parse().map_err(|_| err(start, "bad H count"))? };
    }
    if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
        let sign: i8 = if b[k] == b'+' { 1 } else { -1 };
        let sym = b[k];
        k += 1;
        let mut magnitude: i8 = 1;
        if k < b.len() && b[k].is_ascii_digit() {
            let start = k;
            while k < b.len() && b[k].is_ascii_digit() {
                k += 1;
            }
            magnitude = body[start..k].parse().map_err(|_| err(start, "bad charge"))?;
        } else {
            while k < b.len() && b[k] == sym {
                magnitude += 1;
                k += 1;
            }
        }
        atom.charge = sign * magnitude;
    }
    if k != b.len() {
        return Err(err(k, &format!("unsupported token `{}` in bracket atom", &body[k..k + 1])));
    }
    Ok(atom)
}

/// Default hydrogen count for an unbracketed atom, or `None` when its bond
/// order sum exceeds the default valence.
fn default_hydrogens(g: &MolGraph, atom: usize, table: &ElementTable) -> Option<u32> {
    let a = &g.atoms()[atom];
    let valence = table.valence(a.element) as i64;
    let charge_adj = (a.charge as i64).abs();
    if a.aromatic {
        // each aromatic bond uses one valence unit, plus one shared pi unit
        let used: i64 = g
            .neighbors(atom)
            .iter()
            .map(|&(_, b)| match g.bonds()[b].order {
                BondOrder::Aromatic | BondOrder::Single => 1,
                BondOrder::Double => 2,
                BondOrder::Triple => 3,
            })
            .sum();
        if used > valence {
            return None;
        }
        Some((valence - used - 1 - charge_adj).max(0) as u32)
    } else {
        let half = g.bond_half_units(atom) as i64;
        let free = 2 * valence - half;
        if free < 0 {
            return None;
        }
        Some((free / 2 - charge_adj).max(0) as u32)
    }
}

fn assign_hydrogens(g: MolGraph, bracket: &[bool], table: &ElementTable) -> Result<MolGraph, MolError> {
    let mut atoms = g.atoms().to_vec();
    for (i, atom) in atoms.iter_mut().enumerate() {
        if bracket[i] {
            continue;
        }
        atom.implicit_h = default_hydrogens(&g, i, table).ok_or_else(|| {
            MolError::Valence(format!(
                "atom {i} ({}) exceeds its default valence {}",
                atom.element,
                table.valence(atom.element)
            ))
        })?;
    }
    MolGraph::new(g.id().to_string(), atoms, g.bonds().to_vec())
}

fn needs_bracket(g: &MolGraph, atom: usize, table: &ElementTable) -> bool {
    let a = &g.atoms()[atom];
    if a.element.is_hydrogen() || a.charge != 0 || a.radicals != 0 {
        return true;
    }
    if a.aromatic && !matches!(a.element, Element::C | Element::N | Element::O | Element::P | Element::S | Element::Se)
    {
        return true;
    }
    default_hydrogens(g, atom, table) != Some(a.implicit_h)
}

fn atom_token(g: &MolGraph, atom: usize, table: &ElementTable) -> String {
    let a = &g.atoms()[atom];
    let sym = if a.aromatic { a.element.symbol().to_ascii_lowercase() } else { a.element.symbol().to_string() };
    if !needs_bracket(g, atom, table) {
        return sym;
    }
    let mut s = format!("[{sym}");
    match a.implicit_h {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match a.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

fn bond_token(g: &MolGraph, bond: usize) -> &'static str {
    let b = &g.bonds()[bond];
    let both_aromatic = g.atoms()[b.a].aromatic && g.atoms()[b.b].aromatic;
    match b.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

/// Writes a SMILES string that parses back to an isomorphic graph (with
/// aromatic parsing enabled when the molecule has aromatic atoms). Radical
/// counts are not representable and are dropped.
pub fn to_smiles(g: &MolGraph) -> Result<String, MolError> {
    to_smiles_table(g, ElementTable::bundled())
}

pub fn to_smiles_table(g: &MolGraph, table: &ElementTable) -> Result<String, MolError> {
    let n = g.num_atoms();
    if n == 0 {
        return Err(MolError::Invalid("cannot write an empty molecule".into()));
    }
    if !g.is_connected() {
        return Err(MolError::Disconnected(g.id().to_string()));
    }
    // pass 1: spanning tree and ring-closure bonds
    let mut order = vec![usize::MAX; n];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut ring_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut is_tree = vec![false; g.num_bonds()];
    let mut counter = 0;
    let mut stack = vec![(0usize, usize::MAX)];
    while let Some((v, via)) = stack.pop() {
        if order[v] != usize::MAX {
            continue;
        }
        order[v] = counter;
        counter += 1;
        if via != usize::MAX {
            is_tree[via] = true;
            children[g.bonds()[via].other(v)].push((v, via));
        }
        for &(u, b) in g.neighbors(v).iter().rev() {
            if order[u] == usize::MAX {
                stack.push((u, b));
            }
        }
    }
    for (b, bond) in g.bonds().iter().enumerate() {
        if !is_tree[b] {
            ring_at[bond.a].push(b);
            ring_at[bond.b].push(b);
        }
    }
    for list in &mut ring_at {
        list.sort_by_key(|&b| {
            let bond = &g.bonds()[b];
            (order[bond.a].min(order[bond.b]), order[bond.a].max(order[bond.b]))
        });
    }

    // pass 2: emit
    let mut out = String::new();
    let mut digit_of = vec![0u8; g.num_bonds()];
    let mut free = [true; 10];
    let mut emit_stack: Vec<Emit> = vec![Emit::Atom(0)];
    enum Emit {
        Atom(usize),
        Text(&'static str),
        Owned(String),
    }
    while let Some(item) = emit_stack.pop() {
        match item {
            Emit::Text(t) => out.push_str(t),
            Emit::Owned(t) => out.push_str(&t),
            Emit::Atom(v) => {
                out.push_str(&atom_token(g, v, table));
                for &b in &ring_at[v] {
                    if digit_of[b] == 0 {
                        let d = (1..10)
                            .find(|&d| free[d])
                            .ok_or_else(|| MolError::Invalid("more than nine simultaneous ring closures".into()))?;
                        free[d] = false;
                        digit_of[b] = d as u8;
                        out.push_str(bond_token(g, b));
                        out.push((b'0' + d as u8) as char);
                    } else {
                        let d = digit_of[b] as usize;
                        out.push((b'0' + d as u8) as char);
                        free[d] = true;
                    }
                }
                let kids = &children[v];
                // pushed in reverse: last child unparenthesized
                for (k, &(child, bond)) in kids.iter().enumerate().rev() {
                    let last = k + 1 == kids.len();
                    if !last {
                        emit_stack.push(Emit::Text(")"));
                    }
                    emit_stack.push(Emit::Atom(child));
                    emit_stack.push(Emit::Owned(bond_token(g, bond).to_string()));
                    if !last {
                        emit_stack.push(Emit::Text("("));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(g: &MolGraph) -> Vec<u32> {
        g.atoms().iter().map(|a| a.implicit_h).collect()
    }

    #[test]
    fn ethanol() {
        let g = parse_smiles("CCO").unwrap();
        assert_eq!(g.num_atoms(), 3);
        assert_eq!(g.num_bonds(), 2);
        assert_eq!(hs(&g), vec![3, 2, 1]);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Single));
    }

    #[test]
    fn cyclopropane() {
        let g = parse_smiles("C1CC1").unwrap();
        assert_eq!((g.num_atoms(), g.num_bonds()), (3, 3));
        assert!(g.ring_atoms().iter().all(|&r| r));
        assert_eq!(hs(&g), vec![2, 2, 2]);
    }

    #[test]
    fn unsupported_token_offset() {
        match parse_smiles("Cq") {
            Err(MolError::Parse { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_smiles("CC.C") {
            Err(MolError::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unmatched_structure_errors() {
        assert!(matches!(parse_smiles("C1CC"), Err(MolError::Parse { .. })));
        assert!(matches!(parse_smiles("C(C"), Err(MolError::Parse { .. })));
        assert!(matches!(parse_smiles("CC)"), Err(MolError::Parse { .. })));
        assert!(matches!(parse_smiles("C="), Err(MolError::Parse { .. })));
    }

    #[test]
    fn valence_overflow_is_a_validation_error() {
        assert!(matches!(parse_smiles("C(C)(C)(C)(C)C"), Err(MolError::Valence(_))));
        assert!(matches!(parse_smiles("O=O=O"), Err(MolError::Valence(_))));
    }

    #[test]
    fn bonds_and_branches() {
        let g = parse_smiles("CC(=O)N").unwrap();
        assert_eq!(hs(&g), vec![3, 0, 0, 2]);
        let g = parse_smiles("C#N").unwrap();
        assert_eq!(hs(&g), vec![1, 0]);
        let g = parse_smiles("ClCBr").unwrap();
        assert_eq!(g.formula().to_string(), "CH2BrCl");
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("C[N+](C)(C)C").unwrap();
        assert_eq!(g.atoms()[1].charge, 1);
        assert_eq!(g.atoms()[1].implicit_h, 0);
        let g = parse_smiles("[NH4+]").unwrap();
        assert_eq!(g.atoms()[0].implicit_h, 4);
        let g = parse_smiles("C[O-]").unwrap();
        assert_eq!(g.atoms()[1].charge, -1);
        let g = parse_smiles("[Se]").unwrap();
        assert_eq!(g.atoms()[0].element, Element::Se);
        assert!(parse_smiles("[C@H](C)(N)O").is_err());
    }

    #[test]
    fn aromatic_requires_flag() {
        assert!(parse_smiles("c1ccccc1").is_err());
        let opts = SmilesOptions { allow_aromatic: true };
        let g = parse_smiles_with("c1ccccc1", &opts).unwrap();
        assert_eq!(hs(&g), vec![1; 6]);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        let py = parse_smiles_with("c1ccncc1", &opts).unwrap();
        assert_eq!(py.formula().to_string(), "C5H5N");
    }

    #[test]
    fn writer_round_trips() {
        for smi in ["CCO", "C1CC1", "CC(=O)N", "C1CC2CCC1C2", "O=C1CCC(Cl)CC1", "C[N+](C)(C)C", "N#CC(C)(C)O", "[H]OC"]
        {
            let g = parse_smiles(smi).unwrap();
            let written = to_smiles(&g).unwrap();
            let back = parse_smiles(&written).unwrap();
            assert_eq!(back.num_atoms(), g.num_atoms(), "{smi} -> {written}");
            assert_eq!(back.num_bonds(), g.num_bonds(), "{smi} -> {written}");
            assert_eq!(back.formula(), g.formula(), "{smi} -> {written}");
        }
    }
}
