use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use msfrag::fragdag::{mass_set, rec_frag, write_dag_jsonl, Lattice};
use msfrag::gnn::{read_checkpoint, write_checkpoint, Model, ModelConfig};
use msfrag::metrics::{
    cos_binned, cos_hungarian, ensemble_consistency, recall_metrics, EnsembleMolecule, MatchTolerance, DEFAULT_BIN_DA,
    DEFAULT_MAX_DA,
};
use msfrag::molio::{
    heavy_skeleton, parse_smiles, random_corpus, read_molecules, ElementTable, IonMode, MolGraph, RandomMolConfig,
};
use msfrag::probdist::{dirac_spectrum, write_annotated_jsonl, LatentState};
use msfrag::retrieve::{build_candidates, rank_candidates, ModelPredictor};
use msfrag::spectrum::{read_msp, write_msp, MspRecord, Spectrum};
use msfrag::tensor::grad_check;
use msfrag::train::{
    evaluate, os_partition, prepare_examples, read_dataset, split_dataset, synth_generate, tape_objective, train_model,
    write_dataset, Alphas, OracleParams, RunConfig, Split,
};
use msfrag::ErrorKind;

#[derive(Parser)]
#[command(
    name = "msfrag",
    version,
    about = "Fragmentation-DAG tandem mass spectrum prediction",
    arg_required_else_help = true
)]
struct Cli {
    /// Worker threads for per-molecule parallelism.
    #[arg(long, default_value_t = 1, global = true)]
    threads: usize,
    /// Element table replacing the bundled one (symbol, mass, valence per line).
    #[arg(long, global = true)]
    elements: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build fragmentation DAGs and print their sizes.
    Fragment(FragmentArgs),
    /// Generate a synthetic dataset from the oracle fragmentation process.
    Synth(SynthArgs),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Predict spectra and fragment annotations.
    Predict(PredictArgs),
    /// Score predicted spectra against reference spectra.
    Evaluate(EvaluateArgs),
    /// Rank candidate structures for reference spectra.
    Retrieve(RetrieveArgs),
    /// Consistency statistics of several trained models.
    Ensemble(EnsembleArgs),
    /// Compare analytic and finite-difference gradients of the objective.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct DagArgs {
    /// Fragmentation depth.
    #[arg(long, default_value_t = 3)]
    depth: u32,
    /// Hydrogen tolerance around each fragment's attached hydrogens.
    #[arg(long = "hydrogen-tol", default_value_t = 4)]
    hydrogen_tol: u32,
    /// Precursor ion mode (protonated or neutral).
    #[arg(long, default_value = "protonated")]
    mode: IonMode,
}

#[derive(Args)]
struct FragmentArgs {
    /// Molecules as JSONL, or `.smi` lines of `SMILES [id]`.
    #[arg(long)]
    mol: PathBuf,
    #[command(flatten)]
    dag: DagArgs,
    /// Write the DAGs as JSONL here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Input molecules; conflicts with --random.
    #[arg(long, required_unless_present = "random", conflicts_with = "random")]
    molecules: Option<PathBuf>,
    /// Generate this many random molecules instead of reading them.
    #[arg(long)]
    random: Option<usize>,
    /// Largest heavy-atom count for --random molecules.
    #[arg(long, default_value_t = 6)]
    max_heavy: usize,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Seeds molecule generation and the oracle draws.
    #[arg(long)]
    seed: u64,
    /// Intensity moved to out-of-support peaks.
    #[arg(long, default_value_t = 0.0)]
    os_fraction: f64,
    #[command(flatten)]
    dag: DagArgs,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory written by `synth`.
    #[arg(long)]
    data: PathBuf,
    /// `key = value` run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output checkpoint.
    #[arg(long)]
    out: PathBuf,
    /// Seeds parameter initialization and batch shuffling.
    #[arg(long)]
    seed: u64,
    /// Per-epoch CSV log.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Molecules as JSONL, or `.smi` lines of `SMILES [id]`.
    #[arg(long)]
    mol: PathBuf,
    /// Collision energies, comma separated.
    #[arg(long, default_value = "20", value_delimiter = ',')]
    energies: Vec<u32>,
    /// Output spectra in MSP form.
    #[arg(long)]
    out: PathBuf,
    /// Output annotated peaks as JSONL.
    #[arg(long)]
    annotated: Option<PathBuf>,
    /// Annotations listed per peak.
    #[arg(long, default_value_t = 3)]
    top_k: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted spectra in MSP form.
    #[arg(long)]
    pred: PathBuf,
    /// Reference spectra in MSP form.
    #[arg(long)]
    truth: PathBuf,
    /// Any of cos001, coshun, recall, os.
    #[arg(long, default_value = "cos001,coshun", value_delimiter = ',')]
    metrics: Vec<String>,
    /// Molecules defining the mass support; needed for recall and os.
    #[arg(long)]
    molecules: Option<PathBuf>,
    #[command(flatten)]
    dag: DagArgs,
    /// Output CSV.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct RetrieveArgs {
    /// Reference spectra in MSP form; ids must appear in the corpus.
    #[arg(long = "truth-spectra")]
    truth_spectra: PathBuf,
    /// Candidate pool as molecule JSONL.
    #[arg(long)]
    corpus: PathBuf,
    /// Trained checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Cutoffs for the Top-k rates, comma separated.
    #[arg(long, default_value = "1,3,5,10", value_delimiter = ',')]
    k: Vec<usize>,
    /// Candidates per query, including the true molecule.
    #[arg(long, default_value_t = 50)]
    candidates: usize,
    /// Output CSV.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct EnsembleArgs {
    /// Checkpoints, comma separated (at least two).
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<PathBuf>,
    /// Molecules as JSONL, or `.smi` lines of `SMILES [id]`.
    #[arg(long)]
    mol: PathBuf,
    /// Reference spectra for COS_HUN spread.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Collision energies, comma separated.
    #[arg(long, default_value = "20", value_delimiter = ',')]
    energies: Vec<u32>,
    /// Formulae below this probability under any model are skipped.
    #[arg(long, default_value_t = 0.01)]
    p_min: f64,
    /// Output CSV.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Molecules to check; synthetic targets are generated for them.
    #[arg(long)]
    mol: PathBuf,
    /// Checkpoint to check; otherwise a model is initialized from --config.
    #[arg(long)]
    model: Option<PathBuf>,
    /// `key = value` model configuration used without --model.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds the initialization and the synthetic targets.
    #[arg(long)]
    seed: u64,
    /// Intensity moved to out-of-support peaks in the synthetic targets.
    #[arg(long, default_value_t = 0.1)]
    os_fraction: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl<E: Into<msfrag::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        let e = e.into();
        match e.kind() {
            ErrorKind::Numerical => CliError::Numerical(e.to_string()),
            ErrorKind::Data => CliError::Data(e.to_string()),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| io_err(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// JSONL molecules, or `SMILES [id]` lines for `.smi` files.
fn load_molecules(path: &Path) -> Result<Vec<MolGraph>> {
    if path.extension().is_some_and(|e| e == "smi") {
        let mut out = Vec::new();
        for (i, line) in open(path)?.lines().enumerate() {
            let line = line.map_err(|e| io_err(path, e))?;
            let mut parts = line.split_whitespace();
            let Some(smiles) = parts.next() else { continue };
            let id = parts.next().map_or_else(|| format!("mol{:05}", i + 1), str::to_string);
            let g = parse_smiles(smiles).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
            out.push(g.with_id(id));
        }
        Ok(out)
    } else {
        Ok(read_molecules(open(path)?)?)
    }
}

fn load_spectra(path: &Path) -> Result<Vec<MspRecord>> {
    read_msp(open(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Model<f64>> {
    Ok(read_checkpoint(open(path)?)?)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(RunConfig::parse(&read_text(p)?)?),
        None => Ok(RunConfig::default()),
    }
}

fn fragment(args: &FragmentArgs, table: &ElementTable) -> Result<()> {
    let mols = load_molecules(&args.mol)?;
    let mut out = args.out.as_deref().map(create).transpose()?;
    let stdout = std::io::stdout();
    let mut so = stdout.lock();
    for m in &mols {
        let dag = rec_frag(&heavy_skeleton(m)?, args.dag.depth)?;
        let lattice = Lattice::new(&dag, args.dag.hydrogen_tol, args.dag.mode, table);
        writeln!(
            so,
            "{}\tnodes={}\tedges={}\tformulas={}\tmasses={}",
            m.id(),
            dag.num_nodes(),
            dag.num_edges(),
            lattice.formulas().len(),
            lattice.masses().len()
        )
        .map_err(|e| CliError::Data(e.to_string()))?;
        if let (Some(w), Some(p)) = (out.as_mut(), args.out.as_deref()) {
            write_dag_jsonl(&mut *w, &dag).map_err(|e| io_err(p, e))?;
        }
    }
    if let (Some(w), Some(p)) = (out, args.out.as_deref()) {
        finish(p, w)?;
    }
    Ok(())
}

fn synth(args: &SynthArgs, table: &ElementTable) -> Result<()> {
    let mols = match (&args.molecules, args.random) {
        (Some(p), _) => load_molecules(p)?,
        (None, Some(n)) => {
            let cfg = RandomMolConfig { max_heavy: args.max_heavy, ..Default::default() };
            random_corpus(n, &cfg, table, args.seed, "rand")
        }
        (None, None) => return Err(CliError::Usage("one of --molecules or --random is required".into())),
    };
    let oracle = OracleParams::new(args.dag.hydrogen_tol, args.os_fraction, args.seed);
    let records = synth_generate(&mols, &oracle, args.dag.depth, args.dag.hydrogen_tol, args.dag.mode, table)?;
    std::fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    write_dataset(&args.out, &records)?;
    info!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn train(args: &TrainArgs, table: &ElementTable) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    cfg.model.seed = args.seed;
    cfg.train.seed = args.seed;
    let mut records = read_dataset(&args.data)?;
    split_dataset(&mut records, &cfg.split, cfg.split_seed)?;
    let part = |s: Split| records.iter().filter(|r| r.split == s).cloned().collect::<Vec<_>>();
    let train = prepare_examples::<f64>(&part(Split::Train), &cfg.model, table)?;
    let val = prepare_examples::<f64>(&part(Split::Val), &cfg.model, table)?;
    let test = prepare_examples::<f64>(&part(Split::Test), &cfg.model, table)?;
    info!("split: train={} val={} test={}", train.len(), val.len(), test.len());
    let model = Model::<f64>::init(cfg.model.clone())?;
    let outcome = train_model(model, &train, &val, &cfg.train)?;
    if let Some(path) = &args.history {
        let mut w = create(path)?;
        let mut write = || -> std::io::Result<()> {
            writeln!(
                w,
                "epoch,train_loss,train_objective,val_loss,val_target_entropy,val_cos_hun,val_os_abs_error,clamped"
            )?;
            for h in &outcome.history {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    h.epoch,
                    h.train_loss,
                    h.train_objective,
                    h.val.loss,
                    h.val.target_entropy,
                    h.val.cos_hun,
                    h.val.os_abs_error,
                    h.clamped
                )?;
            }
            w.flush()
        };
        write().map_err(|e| io_err(path, e))?;
    }
    if !test.is_empty() {
        let s = evaluate(&outcome.model, &test)?;
        info!(
            "test: n={} loss={:.4} target_entropy={:.4} cos_hun={:.4} os_abs_error={:.4}",
            s.count, s.loss, s.target_entropy, s.cos_hun, s.os_abs_error
        );
    }
    let w = create(&args.out)?;
    let mut w = w;
    write_checkpoint(&mut w, &outcome.model)?;
    finish(&args.out, w)?;
    info!("best epoch {} of {}; wrote {}", outcome.best_epoch, outcome.history.len(), args.out.display());
    Ok(())
}

fn predict(args: &PredictArgs, table: &ElementTable) -> Result<()> {
    let model = load_model(&args.model)?;
    let mols = load_molecules(&args.mol)?;
    let predictor = ModelPredictor { model: &model, table };
    let mut records = Vec::with_capacity(mols.len());
    let mut annotated = args.annotated.as_deref().map(create).transpose()?;
    for m in &mols {
        let (dag, state) = predictor.state(m, &args.energies).map_err(CliError::Data)?;
        let p_os = state.p_os();
        if !p_os.is_finite() {
            return Err(CliError::Numerical(format!("{}: non-finite OS probability", m.id())));
        }
        if let (Some(w), Some(p)) = (annotated.as_mut(), args.annotated.as_deref()) {
            write_annotated_jsonl(&mut *w, m.id(), &state, &dag, args.top_k).map_err(|e| io_err(p, e))?;
        }
        records.push(MspRecord {
            id: m.id().to_string(),
            energies: args.energies.clone(),
            spectrum: dirac_spectrum(&state).normalized(),
            os_prob: Some(p_os),
        });
    }
    let mut w = create(&args.out)?;
    write_msp(&mut w, &records).map_err(|e| io_err(&args.out, e))?;
    finish(&args.out, w)?;
    if let (Some(w), Some(p)) = (annotated, args.annotated.as_deref()) {
        finish(p, w)?;
    }
    info!("predicted {} spectra", records.len());
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Metric {
    Cos001,
    CosHun,
    Recall,
    Os,
}

fn parse_metrics(names: &[String]) -> Result<Vec<Metric>> {
    names
        .iter()
        .map(|n| match n.trim() {
            "cos001" => Ok(Metric::Cos001),
            "coshun" => Ok(Metric::CosHun),
            "recall" => Ok(Metric::Recall),
            "os" => Ok(Metric::Os),
            other => Err(CliError::Usage(format!("unknown metric `{other}` (expected cos001, coshun, recall, os)"))),
        })
        .collect()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

fn evaluate_cmd(args: &EvaluateArgs, table: &ElementTable) -> Result<()> {
    let metrics = parse_metrics(&args.metrics)?;
    let needs_support = metrics.iter().any(|m| matches!(m, Metric::Recall | Metric::Os));
    let supports: Option<std::collections::HashMap<String, Vec<f64>>> = match (&args.molecules, needs_support) {
        (_, false) => None,
        (None, true) => return Err(CliError::Usage("recall and os metrics need --molecules".into())),
        (Some(p), true) => {
            let mut map = std::collections::HashMap::new();
            for m in load_molecules(p)? {
                let dag = rec_frag(&heavy_skeleton(&m)?, args.dag.depth)?;
                let mut s = mass_set(&dag, args.dag.hydrogen_tol, args.dag.mode, table);
                s.sort_by(f64::total_cmp);
                map.insert(m.id().to_string(), s);
            }
            Some(map)
        }
    };
    let pred = load_spectra(&args.pred)?;
    let truth = load_spectra(&args.truth)?;
    let pred_by_id: std::collections::HashMap<&str, &MspRecord> = pred.iter().map(|r| (r.id.as_str(), r)).collect();

    let mut header = vec!["molecule_id".to_string()];
    for m in &metrics {
        match m {
            Metric::Cos001 => header.push("cos001".into()),
            Metric::CosHun => header.push("coshun".into()),
            Metric::Recall => header.extend(["recall".into(), "weighted_recall".into()]),
            Metric::Os => header.extend(["os_measured".into(), "os_predicted".into(), "os_abs_error".into()]),
        }
    }
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for t in &truth {
        let p = pred_by_id.get(t.id.as_str()).ok_or_else(|| CliError::Data(format!("no prediction for `{}`", t.id)))?;
        let support = || {
            supports
                .as_ref()
                .and_then(|s| s.get(&t.id))
                .ok_or_else(|| CliError::Data(format!("molecule `{}` missing from --molecules", t.id)))
        };
        let mut vals = Vec::new();
        for m in &metrics {
            match m {
                Metric::Cos001 => vals.push(cos_binned(&t.spectrum, &p.spectrum, DEFAULT_BIN_DA, DEFAULT_MAX_DA)?),
                Metric::CosHun => vals.push(cos_hungarian(&t.spectrum, &p.spectrum, MatchTolerance::PPM_10)),
                Metric::Recall => {
                    let r = recall_metrics(&t.spectrum, support()?, MatchTolerance::PPM_10);
                    vals.extend([r.r, r.wr]);
                }
                Metric::Os => {
                    let measured = os_partition(&t.spectrum, support()?).p_os;
                    let predicted =
                        p.os_prob.ok_or_else(|| CliError::Data(format!("prediction for `{}` has no OS line", t.id)))?;
                    vals.extend([measured, predicted, (measured - predicted).abs()]);
                }
            }
        }
        rows.push((t.id.clone(), vals));
    }
    let mut w = create(&args.report)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for (id, vals) in &rows {
            let cells: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{id},{}", cells.join(","))?;
        }
        let cols = header.len() - 1;
        let stats: Vec<(f64, f64)> =
            (0..cols).map(|c| mean_std(&rows.iter().map(|r| r.1[c]).collect::<Vec<_>>())).collect();
        let means: Vec<String> = stats.iter().map(|s| s.0.to_string()).collect();
        let stds: Vec<String> = stats.iter().map(|s| s.1.to_string()).collect();
        writeln!(w, "mean,{}", means.join(","))?;
        writeln!(w, "std,{}", stds.join(","))?;
        w.flush()
    };
    write().map_err(|e| io_err(&args.report, e))?;
    info!("evaluated {} spectra", rows.len());
    Ok(())
}

fn retrieve(args: &RetrieveArgs, table: &ElementTable) -> Result<()> {
    let model = load_model(&args.model)?;
    let corpus = load_molecules(&args.corpus)?;
    let truths = load_spectra(&args.truth_spectra)?;
    let predictor = ModelPredictor { model: &model, table };
    let mut w = create(&args.report)?;
    let mut lines =
        vec![format!("molecule_id,rank,{}", args.k.iter().map(|k| format!("top{k}")).collect::<Vec<_>>().join(","))];
    let mut hits = vec![0usize; args.k.len()];
    for t in &truths {
        let target = corpus
            .iter()
            .find(|m| m.id() == t.id)
            .ok_or_else(|| CliError::Data(format!("`{}` not found in corpus", t.id)))?;
        let cands = build_candidates(target, &corpus, args.candidates)?;
        let r = rank_candidates(&t.spectrum, &t.energies, &cands, &predictor, &args.k)?;
        for (i, &(_, h)) in r.hits.iter().enumerate() {
            hits[i] += h as usize;
        }
        let flags: Vec<&str> = r.hits.iter().map(|&(_, h)| if h { "1" } else { "0" }).collect();
        lines.push(format!("{},{},{}", t.id, r.rank, flags.join(",")));
    }
    let n = truths.len().max(1) as f64;
    let rates: Vec<String> = hits.iter().map(|&h| (h as f64 / n).to_string()).collect();
    lines.push(format!("rate,,{}", rates.join(",")));
    for l in &lines {
        writeln!(w, "{l}").map_err(|e| io_err(&args.report, e))?;
    }
    finish(&args.report, w)?;
    for (k, h) in args.k.iter().zip(&hits) {
        info!("top-{k}: {:.3}", *h as f64 / n);
    }
    Ok(())
}

fn ensemble(args: &EnsembleArgs, table: &ElementTable) -> Result<()> {
    if args.models.len() < 2 {
        return Err(CliError::Usage("--models needs at least two checkpoints".into()));
    }
    let models = args.models.iter().map(|p| load_model(p)).collect::<Result<Vec<_>>>()?;
    let mols = load_molecules(&args.mol)?;
    let truths = args.truth.as_deref().map(load_spectra).transpose()?;
    let truth_of = |id: &str| -> Option<&Spectrum> {
        truths.as_ref().and_then(|ts| ts.iter().find(|t| t.id == id).map(|t| &t.spectrum))
    };
    let mut dags = Vec::with_capacity(mols.len());
    let mut states: Vec<Vec<LatentState<f64>>> = Vec::with_capacity(mols.len());
    for m in &mols {
        let mut per_model = Vec::with_capacity(models.len());
        let mut dag = None;
        for model in &models {
            let (d, s) = ModelPredictor { model, table }.state(m, &args.energies).map_err(CliError::Data)?;
            dag.get_or_insert(d);
            per_model.push(s);
        }
        dags.push(dag.expect("at least two models"));
        states.push(per_model);
    }
    let inputs: Vec<EnsembleMolecule<'_, f64>> = mols
        .iter()
        .zip(dags.iter().zip(&states))
        .map(|(m, (dag, s))| EnsembleMolecule { dag, states: s, truth: truth_of(m.id()) })
        .collect();
    let r = ensemble_consistency(&inputs, args.p_min, MatchTolerance::PPM_10)?;
    let mut w = create(&args.report)?;
    let rows = [
        ("models", r.models as f64),
        ("cos_hun_mean", r.cos_hun.mean),
        ("cos_hun_cv", r.cos_hun.cv),
        ("h_n_given_f_mean", r.h_n_given_f.mean),
        ("h_n_given_f_cv", r.h_n_given_f.cv),
        ("h_iso_given_f_mean", r.h_iso_given_f.mean),
        ("h_iso_given_f_cv", r.h_iso_given_f.cv),
        ("cons", r.cons),
        ("maj", r.maj),
        ("cons_iso", r.cons_iso),
        ("maj_iso", r.maj_iso),
        ("formulas", r.num_formulas as f64),
    ];
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "metric,value")?;
        for (k, v) in rows {
            writeln!(w, "{k},{v}")?;
        }
        w.flush()
    };
    write().map_err(|e| io_err(&args.report, e))?;
    info!("CONS={:.3} MAJ={:.3} over {} formulae", r.cons, r.maj, r.num_formulas);
    Ok(())
}

fn gradcheck(args: &GradcheckArgs, table: &ElementTable) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let model = match &args.model {
        Some(p) => load_model(p)?,
        None => Model::<f64>::init(ModelConfig { seed: args.seed, ..cfg.model.clone() })?,
    };
    let mc = model.config().clone();
    let mols = load_molecules(&args.mol)?;
    let oracle = OracleParams::new(mc.j, args.os_fraction, args.seed);
    let records = synth_generate(&mols, &oracle, mc.depth, mc.j, mc.mode, table)?;
    let examples = prepare_examples::<f64>(&records, &mc, table)?;
    let alphas: Alphas = cfg.train.alphas;
    let params = model.params().arrays().to_vec();
    let (mut entries, mut failures, mut worst) = (0usize, 0usize, 0.0f64);
    for ex in &examples {
        let report = grad_check(
            |t, p| Ok(tape_objective(t, &model, p, ex, &alphas)?.objective),
            &params,
            args.step,
            args.tolerance,
        )?;
        entries += report.len();
        failures += report.failures().count();
        worst = worst.max(report.max_rel_error());
    }
    println!("entries={entries} failures={failures} max_rel_error={worst:.3e}");
    if failures > 0 {
        return Err(CliError::Numerical(format!("{failures} of {entries} gradient entries exceed {}", args.tolerance)));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let owned = match &cli.elements {
        Some(p) => Some(ElementTable::parse(&read_text(p)?)?),
        None => None,
    };
    let table = owned.as_ref().unwrap_or_else(|| ElementTable::bundled());
    match &cli.command {
        Command::Fragment(a) => fragment(a, table),
        Command::Synth(a) => synth(a, table),
        Command::Train(a) => train(a, table),
        Command::Predict(a) => predict(a, table),
        Command::Evaluate(a) => evaluate_cmd(a, table),
        Command::Retrieve(a) => retrieve(a, table),
        Command::Ensemble(a) => ensemble(a, table),
        Command::Gradcheck(a) => gradcheck(a, table),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.code())
        }
    }
}
