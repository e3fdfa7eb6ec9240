use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::{SpectrumRecord, Split, TrainError};
use crate::molio::{read_molecules, write_molecules, MolGraph};
use crate::spectrum::{read_msp, write_msp, MspRecord};

pub const MOLECULES_FILE: &str = "molecules.jsonl";
pub const SPECTRA_FILE: &str = "spectra.msp";

fn io_err(path: &Path, e: std::io::Error) -> TrainError {
    TrainError::Io(format!("{}: {e}", path.display()))
}

/// Writes `molecules.jsonl` and `spectra.msp` into `dir`, creating it.
pub fn write_dataset(dir: &Path, records: &[SpectrumRecord]) -> Result<(), TrainError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mols: Vec<MolGraph> = records.iter().map(|r| r.molecule.clone()).collect();
    let path = dir.join(MOLECULES_FILE);
    let mut w = BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?);
    write_molecules(&mut w, &mols, true).map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))?;
    let msp: Vec<MspRecord> = records
        .iter()
        .map(|r| MspRecord {
            id: r.molecule.id().to_string(),
            energies: r.energies.clone(),
            spectrum: r.spectrum.clone(),
            os_prob: None,
        })
        .collect();
    let path = dir.join(SPECTRA_FILE);
    let mut w = BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?);
    write_msp(&mut w, &msp).map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))
}

/// Reads a dataset directory, joining spectra to molecules by id. Records
/// come back in spectrum-file order, all tagged as training data.
pub fn read_dataset(dir: &Path) -> Result<Vec<SpectrumRecord>, TrainError> {
    let path = dir.join(MOLECULES_FILE);
    let mols = read_molecules(BufReader::new(File::open(&path).map_err(|e| io_err(&path, e))?))?;
    let mut by_id: HashMap<String, MolGraph> = HashMap::with_capacity(mols.len());
    for m in mols {
        let id = m.id().to_string();
        if by_id.insert(id.clone(), m).is_some() {
            return Err(TrainError::Data(format!("duplicate molecule id `{id}`")));
        }
    }
    let path = dir.join(SPECTRA_FILE);
    let spectra = read_msp(BufReader::new(File::open(&path).map_err(|e| io_err(&path, e))?))?;
    spectra
        .into_iter()
        .map(|s| {
            let molecule = by_id
                .get(&s.id)
                .cloned()
                .ok_or_else(|| TrainError::Data(format!("spectrum `{}` has no molecule", s.id)))?;
            if s.spectrum.is_empty() {
                return Err(TrainError::Data(format!("spectrum `{}` is empty", s.id)));
            }
            Ok(SpectrumRecord { molecule, spectrum: s.spectrum, energies: s.energies, split: Split::Train })
        })
        .collect()
}
