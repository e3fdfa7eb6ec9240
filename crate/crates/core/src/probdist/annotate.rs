use serde::Serialize;
use std::collections::BTreeMap;
use std::io::{self, Write};

use super::{LatentState, ProbError};
use crate::fragdag::{FragDag, Mask};
use crate::molio::Formula;
use crate::Scalar;

/// P(n | f) for one formula.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation<T> {
    /// `(node index, probability)` in ascending node order.
    pub entries: Vec<(usize, T)>,
    /// Most probable node; ties go to the lowest node id.
    pub argmax: usize,
}

/// Index of the largest value; ties resolve to the first.
fn argmax_first<T: Scalar>(entries: &[(usize, T)]) -> usize {
    let mut best = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.1 > entries[best].1 {
            best = i;
        }
    }
    entries[best].0
}

pub fn annotation<T: Scalar>(state: &LatentState<T>, f: &Formula) -> Result<Annotation<T>, ProbError> {
    let lat = state.lattice();
    let fi = lat.formula_index(f).filter(|&i| state.formula_marginal()[i] > T::zero());
    let Some(fi) = fi else {
        return Err(ProbError::OutsideSupport(f.to_string()));
    };
    let entries: Vec<(usize, T)> = lat
        .cells()
        .iter()
        .zip(state.n_given_f())
        .filter(|(c, _)| c.formula == fi)
        .map(|(c, p)| (c.node, p.unwrap_or(T::zero())))
        .collect();
    let argmax = argmax_first(&entries);
    Ok(Annotation { entries, argmax })
}

/// Class-level distributions obtained by summing over isomorphic nodes.
#[derive(Debug, Clone)]
pub struct IsoAggregate<T> {
    /// Class id (lowest member node id) per class, ascending.
    pub class_ids: Vec<Mask>,
    /// Class index per node.
    pub node_class: Vec<usize>,
    /// P(class).
    pub class_prob: Vec<T>,
    /// `(class, formula, P(class, f))` sorted by formula then class.
    pub joint: Vec<(usize, usize, T)>,
    /// P(f | class) aligned with `joint`.
    pub f_given_class: Vec<Option<T>>,
    /// P(class | f) aligned with `joint`.
    pub class_given_f: Vec<Option<T>>,
}

pub fn iso_aggregate<T: Scalar>(state: &LatentState<T>, dag: &FragDag) -> IsoAggregate<T> {
    let mut class_ids: Vec<Mask> = dag.nodes().iter().map(|n| n.iso_class).collect();
    class_ids.sort_unstable();
    class_ids.dedup();
    let node_class: Vec<usize> =
        dag.nodes().iter().map(|n| class_ids.binary_search(&n.iso_class).expect("class present")).collect();
    let mut class_prob = vec![T::zero(); class_ids.len()];
    for (n, &p) in state.node_marginal().iter().enumerate() {
        class_prob[node_class[n]] += p;
    }
    let mut acc: BTreeMap<(usize, usize), T> = BTreeMap::new();
    for (c, &p) in state.lattice().cells().iter().zip(state.joint()) {
        *acc.entry((c.formula, node_class[c.node])).or_insert(T::zero()) += p;
    }
    let pf = state.formula_marginal();
    let joint: Vec<(usize, usize, T)> = acc.into_iter().map(|((f, k), p)| (k, f, p)).collect();
    let ratio = |p: T, d: T| (d > T::zero()).then(|| p / d);
    let f_given_class = joint.iter().map(|&(k, _, p)| ratio(p, class_prob[k])).collect();
    let class_given_f = joint.iter().map(|&(_, f, p)| ratio(p, pf[f])).collect();
    IsoAggregate { class_ids, node_class, class_prob, joint, f_given_class, class_given_f }
}

fn conditional_entropy<T: Scalar>(groups: impl Iterator<Item = (usize, T)>, num: usize) -> Vec<Option<T>> {
    let mut h = vec![None; num];
    for (f, p) in groups {
        let e = h[f].get_or_insert(T::zero());
        if p > T::zero() {
            *e -= p * p.ln();
        }
    }
    h
}

/// H(n | f) in nats for each lattice formula; `None` where P(f) = 0.
pub fn n_given_f_entropy_per_formula<T: Scalar>(state: &LatentState<T>) -> Vec<Option<T>> {
    let groups = state.lattice().cells().iter().zip(state.n_given_f()).filter_map(|(c, p)| p.map(|p| (c.formula, p)));
    conditional_entropy(groups, state.lattice().formulas().len())
}

/// H(class | f) in nats for each lattice formula; `None` where P(f) = 0.
pub fn iso_given_f_entropy_per_formula<T: Scalar>(iso: &IsoAggregate<T>, num_formulas: usize) -> Vec<Option<T>> {
    let groups = iso.joint.iter().zip(&iso.class_given_f).filter_map(|(&(_, f, _), p)| p.map(|p| (f, p)));
    conditional_entropy(groups, num_formulas)
}

/// Normalized H(class | f): per-formula entropy over log of the number of
/// classes carrying that formula, averaged with weights P(f) over the
/// in-support distribution.
pub fn normalized_iso_entropy<T: Scalar>(state: &LatentState<T>, iso: &IsoAggregate<T>) -> T {
    let nf = state.lattice().formulas().len();
    let h = iso_given_f_entropy_per_formula(iso, nf);
    let mut support = vec![0usize; nf];
    for &(_, f, _) in &iso.joint {
        support[f] += 1;
    }
    let pf = state.formula_marginal();
    let total: T = pf.iter().copied().sum();
    if total <= T::zero() {
        return T::zero();
    }
    let mut out = T::zero();
    for f in 0..nf {
        if let Some(hf) = h[f] {
            out += pf[f] / total * hf * T::lit(super::latent::inv_log_support(support[f]));
        }
    }
    out
}

#[derive(Serialize)]
struct NodeAnn {
    node_id: Mask,
    mask_hex: String,
    prob: f64,
}

#[derive(Serialize)]
struct ClassAnn {
    class_id: Mask,
    prob: f64,
}

#[derive(Serialize)]
struct PeakLine<'a> {
    molecule_id: &'a str,
    mass: f64,
    intensity: f64,
    formula: String,
    top_annotations: Vec<NodeAnn>,
    iso_annotations: Vec<ClassAnn>,
}

/// One JSON line per predicted formula with nonzero probability, ascending
/// mass. Intensities are renormalized over the in-support mass.
pub fn write_annotated_jsonl<W: Write, T: Scalar>(
    mut w: W,
    molecule_id: &str,
    state: &LatentState<T>,
    dag: &FragDag,
    top_k: usize,
) -> io::Result<()> {
    let lat = state.lattice();
    let iso = iso_aggregate(state, dag);
    let total: f64 = state.formula_marginal().iter().map(|p| p.as_f64()).sum();
    let mut order: Vec<usize> =
        (0..lat.formulas().len()).filter(|&f| state.formula_marginal()[f] > T::zero()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (lat.masses()[lat.formula_mass()[a]], lat.masses()[lat.formula_mass()[b]]);
        ma.total_cmp(&mb).then(a.cmp(&b))
    });
    for f in order {
        let formula = lat.formulas()[f];
        let ann = annotation(state, &formula).map_err(|e| io::Error::other(e.to_string()))?;
        let mut nodes = ann.entries.clone();
        nodes.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        let top_annotations = nodes
            .iter()
            .take(top_k)
            .map(|&(n, p)| {
                let id = dag.nodes()[n].mask;
                NodeAnn { node_id: id, mask_hex: format!("{id:#x}"), prob: p.as_f64() }
            })
            .collect();
        let mut classes: Vec<(usize, f64)> = iso
            .joint
            .iter()
            .zip(&iso.class_given_f)
            .filter(|((_, ff, _), _)| *ff == f)
            .map(|(&(k, _, _), p)| (k, p.map_or(0.0, |p| p.as_f64())))
            .collect();
        classes.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let iso_annotations =
            classes.iter().take(top_k).map(|&(k, p)| ClassAnn { class_id: iso.class_ids[k], prob: p }).collect();
        let line = PeakLine {
            molecule_id,
            mass: lat.masses()[lat.formula_mass()[f]],
            intensity: state.formula_marginal()[f].as_f64() / total,
            formula: formula.to_string(),
            top_annotations,
            iso_annotations,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
