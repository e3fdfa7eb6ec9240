use msfrag::fragdag::{mass_set, rec_frag, Lattice};
use msfrag::gnn::{Model, ModelConfig};
use msfrag::metrics::{recall_metrics, MatchTolerance};
use msfrag::molio::{heavy_skeleton, parse_smiles, random_molecule, ElementTable, IonMode, MolGraph, RandomMolConfig};
use msfrag::probdist::{
    dirac_spectrum, latent_from_logits, tape_log_joint, tape_normalized_entropies, EntropySet, LatentState,
};
use msfrag::spectrum::Spectrum;
use msfrag::tensor::{grad_check, Array};
use msfrag::train::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table() -> &'static ElementTable {
    ElementTable::bundled()
}

fn lattice(smiles: &str, d: u32, j: u32) -> Lattice {
    let skel = heavy_skeleton(&parse_smiles(smiles).unwrap()).unwrap();
    Lattice::new(&rec_frag(&skel, d).unwrap(), j, IonMode::Protonated, table())
}

fn random_mols(n: usize, seed: u64) -> Vec<MolGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RandomMolConfig::default();
    (0..n).map(|i| random_molecule(&mut rng, &cfg, table(), &format!("m{seed}-{i}"))).collect()
}

/// A state whose in-support joint equals `probs` (per cell) scaled by `1 - p_os`.
fn state_from(lat: &Lattice, probs: &[f64], p_os: f64) -> LatentState<f64> {
    let log_cell = probs.iter().map(|p| (p * (1.0 - p_os)).ln()).collect();
    LatentState::from_log_joint(lat.clone(), log_cell, p_os.ln())
}

fn entropy(s: &Spectrum) -> f64 {
    s.peaks().iter().map(|p| -p.intensity * p.intensity.ln()).sum()
}

#[test]
fn os_partition_tolerance_boundary() {
    let s = Spectrum::from_pairs(&[(100.0, 0.4), (200.0, 0.6)]).unwrap();
    let p = os_partition(&s, &[200.0, 100.0009]);
    assert_eq!(p.p_os, 0.0);
    let p = os_partition(&s, &[100.0011]);
    assert_eq!(p.p_os, 1.0);
    assert_eq!(p.os_peaks.len(), 2);
}

#[test]
fn loss_equals_target_entropy_for_exact_prediction() {
    let lat = lattice("CC(O)CN", 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let raw: Vec<f64> = (0..lat.num_cells()).map(|_| rng.random_range(0.1..1.0)).collect();
    let z: f64 = raw.iter().sum();
    let probs: Vec<f64> = raw.iter().map(|p| p / z).collect();
    let st = state_from(&lat, &probs, 0.0);
    let target = dirac_spectrum(&st);
    assert!((nll_loss(&st, &target) - entropy(&target)).abs() < 1e-12);
    let v = loss_with_os(&st, &target);
    assert!(!v.clamped && (v.value - entropy(&target)).abs() < 1e-12);

    // with 30% OS mass on both sides
    let st = state_from(&lat, &probs, 0.3);
    let mut pairs: Vec<(f64, f64)> = dirac_spectrum(&st).peaks().iter().map(|p| (p.mass, p.intensity)).collect();
    pairs.push((lat.masses()[0] * (1.0 - 300e-6), 0.3));
    let target = Spectrum::from_pairs(&pairs).unwrap();
    let v = loss_with_os(&st, &target);
    assert!((v.value - entropy(&target)).abs() < 1e-12);
}

#[test]
fn point_mass_at_half_probability_costs_log_two() {
    let lat = lattice("CCO", 2, 1);
    let m0 = lat.formula_mass()[lat.cells()[0].formula];
    let others: Vec<usize> =
        (0..lat.num_cells()).filter(|&i| lat.formula_mass()[lat.cells()[i].formula] != m0).collect();
    let mut probs = vec![0.0; lat.num_cells()];
    probs[0] = 0.5;
    for &i in &others {
        probs[i] = 0.5 / others.len() as f64;
    }
    let st = state_from(&lat, &probs, 0.0);
    let target = Spectrum::from_pairs(&[(lat.masses()[m0], 1.0)]).unwrap();
    assert!((nll_loss(&st, &target) - 2f64.ln()).abs() < 1e-12);
}

/// Naive loops: linear scan for the nearest in-tolerance mass, summing the
/// model's cell probabilities by hand.
fn naive_loss(st: &LatentState<f64>, s: &Spectrum) -> f64 {
    let lat = st.lattice();
    let mut pm = vec![0.0; lat.masses().len()];
    for (c, p) in lat.cells().iter().zip(st.joint()) {
        let cell_mass = lat.masses()[lat.formula_mass()[c.formula]];
        for (k, &m) in lat.masses().iter().enumerate() {
            if m == cell_mass {
                pm[k] += p;
            }
        }
    }
    let mut loss = 0.0;
    let mut os = 0.0;
    for p in s.peaks() {
        let mut best: Option<(usize, f64)> = None;
        for (k, &m) in lat.masses().iter().enumerate() {
            let d = (m - p.mass).abs();
            if d <= 1e-5 * m.max(p.mass) && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        match best {
            Some((k, _)) => loss -= p.intensity * pm[k].ln(),
            None => os += p.intensity,
        }
    }
    if os > 0.0 {
        loss -= os * st.p_os().ln();
    }
    loss
}

#[test]
fn loss_matches_naive_summation() {
    for seed in 0..20u64 {
        let lat = lattice(["CCO", "CNCO", "CC(C)O", "OCCN"][seed as usize % 4], 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = Array::new(
            lat.num_nodes(),
            lat.width(),
            (0..lat.num_nodes() * lat.width()).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let st = latent_from_logits(&logits, rng.random_range(-3.0..0.0), &lat).unwrap();
        let mut pairs = Vec::new();
        for &m in lat.masses() {
            if rng.random_bool(0.5) {
                let shift = rng.random_range(-8e-6..8e-6) * m;
                pairs.push((m + shift, rng.random_range(0.1..1.0)));
            }
        }
        pairs.push((lat.masses()[0] + 3.0 + rng.random_range(0.0..0.5), rng.random_range(0.1..1.0)));
        let s = Spectrum::from_pairs(&pairs).unwrap().normalized();
        let v = loss_with_os(&st, &s);
        assert!((v.value - naive_loss(&st, &s)).abs() < 1e-10, "seed {seed}");
    }
}

#[test]
fn zero_model_os_probability_is_clamped_and_flagged() {
    let lat = lattice("CCO", 2, 1);
    let probs = vec![1.0 / lat.num_cells() as f64; lat.num_cells()];
    let st = state_from(&lat, &probs, 0.0);
    let s = Spectrum::from_pairs(&[(lat.masses()[0], 0.5), (lat.masses()[0] + 5.0, 0.5)]).unwrap();
    let v = loss_with_os(&st, &s);
    assert!(v.clamped);
    assert!(v.value.is_finite());
    assert!(v.value >= 0.5 * 745.0);
}

#[test]
fn reg_loss_examples() {
    let e = EntropySet { n: 0.3, f: 0.4, f_given_n: 0.5, n_given_f: 0.6, joint: 0.0 };
    assert_eq!(reg_loss(1.25, &e, &Alphas::default()), 1.25);
    let a = Alphas { n_given_f: -1.0, ..Default::default() };
    let low = EntropySet { n_given_f: 0.2, ..e };
    assert!(reg_loss(1.0, &low, &a) > reg_loss(1.0, &e, &a));
}

#[test]
fn regularized_loss_gradient_matches_finite_differences() {
    let lat = lattice("CNCO", 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let logits = Array::new(
        lat.num_nodes(),
        lat.width(),
        (0..lat.num_nodes() * lat.width()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let os = Array::scalar(-1.5);
    let st = latent_from_logits(&logits, -1.5, &lat).unwrap();
    let mut pairs: Vec<(f64, f64)> =
        dirac_spectrum(&st).peaks().iter().step_by(2).map(|p| (p.mass, p.intensity)).collect();
    pairs.push((lat.masses()[0] + 2.5, 0.2));
    let target = LossTarget::new(&Spectrum::from_pairs(&pairs).unwrap().normalized(), lat.masses());
    let alphas = Alphas { n: 0.1, f: -0.2, f_given_n: 0.3, n_given_f: -0.4 };
    let report = grad_check(
        |t, v| {
            let j = tape_log_joint(t, v[0], v[1], &lat)?;
            let (loss, _) = tape_loss(t, j, &lat, &target)?;
            let e = tape_normalized_entropies(t, j.cells, &lat)?;
            tape_reg_loss(t, loss, e, &alphas)
        },
        &[logits, os],
        1e-6,
        1e-4,
    )
    .unwrap();
    assert!(report.passed(), "max rel error {}", report.max_rel_error());
}

#[test]
fn synthetic_without_os_is_fully_recalled() {
    let mols = random_mols(60, 1);
    let recs = synth_generate(&mols, &OracleParams::new(2, 0.0, 3), 3, 2, IonMode::Protonated, table()).unwrap();
    for r in &recs {
        let skel = heavy_skeleton(&r.molecule).unwrap();
        let support = mass_set(&rec_frag(&skel, 3).unwrap(), 2, IonMode::Protonated, table());
        assert_eq!(recall_metrics(&r.spectrum, &support, MatchTolerance::PPM_10).wr, 1.0);
        assert!(r.spectrum.is_normalized(1e-9));
    }
}

#[test]
fn synthetic_os_fraction_is_measured_back() {
    let mols = random_mols(250, 2);
    let recs = synth_generate(&mols, &OracleParams::new(4, 0.1, 5), 3, 4, IonMode::Protonated, table()).unwrap();
    let mean: f64 = recs
        .iter()
        .map(|r| {
            let skel = heavy_skeleton(&r.molecule).unwrap();
            let support = mass_set(&rec_frag(&skel, 3).unwrap(), 4, IonMode::Protonated, table());
            os_partition(&r.spectrum, &support).p_os
        })
        .sum::<f64>()
        / recs.len() as f64;
    assert!((mean - 0.1).abs() <= 0.02, "mean OS {mean}");
}

#[test]
fn synthetic_output_is_byte_identical_per_seed() {
    let mols = random_mols(30, 3);
    let gen = |seed| {
        let recs = synth_generate(&mols, &OracleParams::new(4, 0.1, seed), 3, 4, IonMode::Protonated, table()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &recs).unwrap();
        let bytes = std::fs::read(dir.path().join(SPECTRA_FILE)).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in back.iter().zip(&recs) {
            assert_eq!(a.molecule.id(), b.molecule.id());
            assert_eq!(a.energies, b.energies);
            assert_eq!(a.spectrum.len(), b.spectrum.len());
        }
        bytes
    };
    assert_eq!(gen(9), gen(9));
    assert_ne!(gen(9), gen(10));
}

#[test]
fn split_counts_and_stability() {
    let ids: Vec<String> = (0..1000).map(|i| format!("mol-{i}")).collect();
    let r = SplitRatios::default();
    let mut counts = [0usize; 3];
    for id in &ids {
        let s = split_of(id, &r, 11);
        counts[s as usize] += 1;
        assert_eq!(s, split_of(id, &r, 11));
    }
    for (c, want) in counts.iter().zip([0.6, 0.2, 0.2]) {
        assert!((*c as f64 / 1000.0 - want).abs() <= 0.03, "{counts:?}");
    }
    let all_train = SplitRatios { train: 1.0, val: 0.0, test: 0.0 };
    assert!(ids.iter().all(|id| split_of(id, &all_train, 3) == Split::Train));
    assert!(SplitRatios { train: 0.5, val: 0.2, test: 0.2 }.validate().is_err());
}

fn tiny_setup(n: usize) -> (ModelConfig, Vec<Example<f64>>) {
    let cfg = ModelConfig { hidden_dim: 8, l1: 1, l2: 1, depth: 2, j: 1, fourier_t: 2, ..Default::default() };
    let recs =
        synth_generate(&random_mols(n, 7), &OracleParams::new(1, 0.0, 1), 2, 1, IonMode::Protonated, table()).unwrap();
    (cfg.clone(), prepare_examples(&recs, &cfg, table()).unwrap())
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let (cfg, ex) = tiny_setup(6);
    let model = Model::<f64>::init(cfg).unwrap();
    let tc = TrainConfig {
        adam: AdamConfig { lr: 0.0, ..Default::default() },
        max_epochs: 2,
        batch_size: 4,
        ..Default::default()
    };
    let out = train_model(model.clone(), &ex, &[], &tc).unwrap();
    assert_eq!(out.model.params().arrays(), model.params().arrays());
}

#[test]
fn training_is_deterministic() {
    let (cfg, ex) = tiny_setup(12);
    let tc = TrainConfig { max_epochs: 3, batch_size: 4, ..Default::default() };
    let run = || {
        let out = train_model(Model::<f64>::init(cfg.clone()).unwrap(), &ex[..8], &ex[8..], &tc).unwrap();
        out.history.iter().map(|h| (h.train_loss, h.val.loss)).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn overfits_a_single_record() {
    let (cfg, _) = tiny_setup(1);
    let cfg = ModelConfig { hidden_dim: 16, ..cfg };
    let ex = prepare_examples::<f64>(
        &synth_generate(&random_mols(1, 8), &OracleParams::new(1, 0.0, 1), 2, 1, IonMode::Protonated, table()).unwrap(),
        &cfg,
        table(),
    )
    .unwrap();
    let tc = TrainConfig {
        adam: AdamConfig { lr: 0.02, ..Default::default() },
        max_epochs: 1500,
        patience: 1500,
        batch_size: 1,
        ..Default::default()
    };
    let out = train_model(Model::<f64>::init(cfg).unwrap(), &ex, &[], &tc).unwrap();
    let eval = evaluate(&out.model, &ex).unwrap();
    assert!(eval.loss - eval.target_entropy < 1e-3, "gap {}", eval.loss - eval.target_entropy);
}

#[test]
fn non_finite_input_aborts_with_numerical_error() {
    let (cfg, ex) = tiny_setup(2);
    let mut model = Model::<f64>::init(cfg).unwrap();
    model.params_mut().arrays_mut()[0].data_mut()[0] = f64::NAN;
    let err = train_model(model, &ex, &[], &TrainConfig { max_epochs: 1, ..Default::default() }).unwrap_err();
    assert!(matches!(err, TrainError::Numerical(_) | TrainError::Tensor(_)), "{err}");
}

proptest! {
    #[test]
    fn loss_is_bounded_below_by_target_entropy(seed in 0u64..300) {
        let lat = lattice("CC(N)C=O", 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = Array::new(
            lat.num_nodes(),
            lat.width(),
            (0..lat.num_nodes() * lat.width()).map(|_| rng.random_range(-3.0..3.0)).collect(),
        ).unwrap();
        let st = latent_from_logits(&logits, rng.random_range(-4.0..1.0), &lat).unwrap();
        let mut pairs = Vec::new();
        for &m in lat.masses() {
            if rng.random_bool(0.4) {
                pairs.push((m, rng.random_range(0.05..1.0)));
            }
        }
        pairs.push((lat.masses()[0] + 1.7, rng.random_range(0.0..0.5)));
        let s = Spectrum::from_pairs(&pairs).unwrap().normalized();
        let t = LossTarget::new(&s, lat.masses());
        prop_assert!(loss_with_os(&st, &s).value >= t.entropy() - 1e-12);
    }

    #[test]
    fn os_partition_ignores_ordering(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let support: Vec<f64> = (0..8).map(|_| rng.random_range(20.0..200.0)).collect();
        let pairs: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let m = if i % 2 == 0 { support[i % 8] * (1.0 + rng.random_range(-9e-6..9e-6)) } else { rng.random_range(20.0..200.0) };
                (m, rng.random_range(0.1..1.0))
            })
            .collect();
        let mut rev_pairs = pairs.clone();
        rev_pairs.reverse();
        let mut rev_support = support.clone();
        rev_support.reverse();
        let a = os_partition(&Spectrum::from_pairs(&pairs).unwrap().normalized(), &support);
        let b = os_partition(&Spectrum::from_pairs(&rev_pairs).unwrap().normalized(), &rev_support);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn merge_is_idempotent_and_commutative(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spec = || {
            let pairs: Vec<(f64, f64)> = (0..rng.random_range(1..6))
                .map(|_| (rng.random_range(1..20) as f64 * 10.0, rng.random_range(0.1..1.0)))
                .collect();
            Spectrum::from_pairs(&pairs).unwrap().normalized()
        };
        let (a, b) = (spec(), spec());
        let ab = merge_spectra(&[(a.clone(), vec![10]), (b.clone(), vec![20])]).unwrap();
        let ba = merge_spectra(&[(b, vec![20]), (a.clone(), vec![10])]).unwrap();
        prop_assert_eq!(ab.1, ba.1);
        for (x, y) in ab.0.peaks().iter().zip(ba.0.peaks()) {
            prop_assert_eq!(x.mass, y.mass);
            prop_assert!((x.intensity - y.intensity).abs() < 1e-15);
        }
        let aa = merge_spectra(&[(a.clone(), vec![10]), (a.clone(), vec![10])]).unwrap().0;
        for (x, y) in aa.peaks().iter().zip(a.peaks()) {
            prop_assert!((x.intensity - y.intensity).abs() < 1e-15 && x.mass == y.mass);
        }
    }
}
