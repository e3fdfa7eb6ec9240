//! Flat `key = value` run configuration. Blank lines and lines starting
//! with `#` are ignored; unknown keys are rejected.

use std::fmt::Write as _;
use std::str::FromStr;

use super::split::SplitRatios;
use super::trainer::TrainConfig;
use super::TrainError;
use crate::gnn::ModelConfig;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub split: SplitRatios,
    pub split_seed: u64,
}

fn parse<V: FromStr>(line: usize, key: &str, value: &str) -> Result<V, TrainError> {
    value.parse().map_err(|_| TrainError::Config(format!("line {line}: bad value `{value}` for `{key}`")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, TrainError> {
        let mut c = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(TrainError::Config(format!("line {n}: expected `key = value`, got `{line}`")));
            };
            let (key, v) = (key.trim(), value.trim());
            match key {
                "hidden_dim" => c.model.hidden_dim = parse(n, key, v)?,
                "l1" => c.model.l1 = parse(n, key, v)?,
                "l2" => c.model.l2 = parse(n, key, v)?,
                "depth" => c.model.depth = parse(n, key, v)?,
                "j" => c.model.j = parse(n, key, v)?,
                "fourier_t" => c.model.fourier_t = parse(n, key, v)?,
                "use_frag_edges" => c.model.use_frag_edges = parse(n, key, v)?,
                "use_collision_energy" => c.model.use_collision_energy = parse(n, key, v)?,
                "mode" => c.model.mode = parse(n, key, v)?,
                "seed" => c.model.seed = parse(n, key, v)?,
                "lr" => c.train.adam.lr = parse(n, key, v)?,
                "beta1" => c.train.adam.beta1 = parse(n, key, v)?,
                "beta2" => c.train.adam.beta2 = parse(n, key, v)?,
                "eps" => c.train.adam.eps = parse(n, key, v)?,
                "batch_size" => c.train.batch_size = parse(n, key, v)?,
                "patience" => c.train.patience = parse(n, key, v)?,
                "max_epochs" => c.train.max_epochs = parse(n, key, v)?,
                "shuffle_seed" => c.train.seed = parse(n, key, v)?,
                "alpha_n" => c.train.alphas.n = parse(n, key, v)?,
                "alpha_f" => c.train.alphas.f = parse(n, key, v)?,
                "alpha_f_given_n" => c.train.alphas.f_given_n = parse(n, key, v)?,
                "alpha_n_given_f" => c.train.alphas.n_given_f = parse(n, key, v)?,
                "train_ratio" => c.split.train = parse(n, key, v)?,
                "val_ratio" => c.split.val = parse(n, key, v)?,
                "test_ratio" => c.split.test = parse(n, key, v)?,
                "split_seed" => c.split_seed = parse(n, key, v)?,
                other => return Err(TrainError::Config(format!("line {n}: unknown key `{other}`"))),
            }
        }
        c.model.validate()?;
        c.split.validate()?;
        if c.train.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be at least 1".into()));
        }
        Ok(c)
    }

    /// Serializes every key; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let (m, t) = (&self.model, &self.train);
        let mut s = String::new();
        let pairs: Vec<(&str, String)> = vec![
            ("hidden_dim", m.hidden_dim.to_string()),
            ("l1", m.l1.to_string()),
            ("l2", m.l2.to_string()),
            ("depth", m.depth.to_string()),
            ("j", m.j.to_string()),
            ("fourier_t", m.fourier_t.to_string()),
            ("use_frag_edges", m.use_frag_edges.to_string()),
            ("use_collision_energy", m.use_collision_energy.to_string()),
            ("mode", m.mode.to_string()),
            ("seed", m.seed.to_string()),
            ("lr", t.adam.lr.to_string()),
            ("beta1", t.adam.beta1.to_string()),
            ("beta2", t.adam.beta2.to_string()),
            ("eps", t.adam.eps.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("patience", t.patience.to_string()),
            ("max_epochs", t.max_epochs.to_string()),
            ("shuffle_seed", t.seed.to_string()),
            ("alpha_n", t.alphas.n.to_string()),
            ("alpha_f", t.alphas.f.to_string()),
            ("alpha_f_given_n", t.alphas.f_given_n.to_string()),
            ("alpha_n_given_f", t.alphas.n_given_f.to_string()),
            ("train_ratio", self.split.train.to_string()),
            ("val_ratio", self.split.val.to_string()),
            ("test_ratio", self.split.test.to_string()),
            ("split_seed", self.split_seed.to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
