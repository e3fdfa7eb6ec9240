use serde::Serialize;
use std::io::{self, Write};

use super::{FragDag, Mask};

#[derive(Serialize)]
struct NodeLine<'a> {
    node_id: Mask,
    mask_hex: String,
    formula: String,
    h: u32,
    depths: &'a [u32],
    iso_class: Mask,
}

/// Writes one JSON object per node (ascending id) followed by one
/// `[parent, child]` array per edge.
pub fn write_dag_jsonl<W: Write>(mut w: W, dag: &FragDag) -> io::Result<()> {
    for node in dag.nodes() {
        let line = NodeLine {
            node_id: node.mask,
            mask_hex: format!("{:#x}", node.mask),
            formula: node.formula.to_string(),
            h: node.h_attached,
            depths: &node.depths,
            iso_class: node.iso_class,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    for (p, c) in dag.edge_ids() {
        serde_json::to_writer(&mut w, &[p, c])?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
