use msfrag::fragdag::{rec_frag, FragDag, Lattice};
use msfrag::metrics::*;
use msfrag::molio::{heavy_skeleton, parse_smiles, ElementTable, IonMode};
use msfrag::probdist::{latent_from_logits, LatentState};
use msfrag::spectrum::Spectrum;
use msfrag::tensor::Array;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(pairs: &[(f64, f64)]) -> Spectrum {
    Spectrum::from_pairs(pairs).unwrap()
}

/// Best matching by trying every injective map from the smaller side.
fn brute_force(y: &Spectrum, y_hat: &Spectrum, tol: MatchTolerance) -> f64 {
    let norm = |s: &Spectrum| s.peaks().iter().map(|p| p.intensity * p.intensity).sum::<f64>().sqrt();
    let (na, nb) = (norm(y), norm(y_hat));
    let w = |i: usize, j: usize| {
        let (p, q) = (y.peaks()[i], y_hat.peaks()[j]);
        if tol.matches(p.mass, q.mass) {
            p.intensity * q.intensity / (na * nb)
        } else {
            0.0
        }
    };
    fn go(i: usize, rows: usize, cols: usize, used: &mut Vec<bool>, w: &dyn Fn(usize, usize) -> f64) -> f64 {
        if i == rows {
            return 0.0;
        }
        let mut best = go(i + 1, rows, cols, used, w);
        for j in 0..cols {
            if !used[j] {
                used[j] = true;
                best = best.max(w(i, j) + go(i + 1, rows, cols, used, w));
                used[j] = false;
            }
        }
        best
    }
    go(0, y.len(), y_hat.len(), &mut vec![false; y_hat.len()], &w)
}

/// Two spectra with clustered masses so that many peaks compete.
fn clustered_pair(rng: &mut ChaCha8Rng, max_peaks: usize) -> (Spectrum, Spectrum) {
    let centers: Vec<f64> = (0..3).map(|_| rng.random_range(50.0..300.0)).collect();
    let a = rng.random_range(1..=max_peaks);
    let b = rng.random_range(1..=max_peaks);
    let mut gen = |n: usize| {
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let c = centers[rng.random_range(0..centers.len())];
                (c * (1.0 + rng.random_range(-15e-6..15e-6)), rng.random_range(0.05..1.0))
            })
            .collect();
        spec(&pairs).normalized()
    };
    (gen(a), gen(b))
}

#[test]
fn hungarian_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..300 {
        let (a, b) = clustered_pair(&mut rng, 6);
        let fast = cos_hungarian(&a, &b, MatchTolerance::PPM_10);
        let slow = brute_force(&a, &b, MatchTolerance::PPM_10);
        assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
    }
}

#[test]
fn hungarian_pairs_are_one_to_one_and_admissible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (a, b) = clustered_pair(&mut rng, 8);
        let m = hungarian_match(&a, &b, MatchTolerance::PPM_10);
        let mut rows: Vec<usize> = m.pairs.iter().map(|p| p.0).collect();
        let mut cols: Vec<usize> = m.pairs.iter().map(|p| p.1).collect();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        assert_eq!(rows.len(), m.pairs.len());
        assert_eq!(cols.len(), m.pairs.len());
        for &(i, j) in &m.pairs {
            assert!(MatchTolerance::PPM_10.matches(a.peaks()[i].mass, b.peaks()[j].mass));
        }
    }
}

#[test]
fn hungarian_is_not_beaten_by_random_matchings() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let (a, b) = clustered_pair(&mut rng, 12);
        let best = cos_hungarian(&a, &b, MatchTolerance::PPM_10);
        let na = a.peaks().iter().map(|p| p.intensity * p.intensity).sum::<f64>().sqrt();
        let nb = b.peaks().iter().map(|p| p.intensity * p.intensity).sum::<f64>().sqrt();
        for _ in 0..200 {
            let mut cols: Vec<usize> = (0..b.len()).collect();
            rand::seq::SliceRandom::shuffle(cols.as_mut_slice(), &mut rng);
            let score: f64 = (0..a.len().min(b.len()))
                .filter(|&i| MatchTolerance::PPM_10.matches(a.peaks()[i].mass, b.peaks()[cols[i]].mass))
                .map(|i| a.peaks()[i].intensity * b.peaks()[cols[i]].intensity / (na * nb))
                .sum();
            assert!(score <= best + 1e-12);
        }
    }
}

#[test]
fn tolerance_modes() {
    let da = MatchTolerance::new_da(0.01).unwrap();
    assert!(da.matches(100.0, 100.0099));
    assert!(!da.matches(100.0, 100.0101));
    assert!(MatchTolerance::new_da(-1.0).is_err());
    let a = spec(&[(100.0, 1.0)]);
    let b = spec(&[(100.005, 1.0)]);
    assert_eq!(cos_hungarian(&a, &b, MatchTolerance::PPM_10), 0.0);
    assert!((cos_hungarian(&a, &b, da) - 1.0).abs() < 1e-12);
}

#[test]
fn binned_cosine_rejects_out_of_range_masses() {
    let a = spec(&[(1499.0, 1.0)]);
    assert!(cos_binned(&a, &a, DEFAULT_BIN_DA, DEFAULT_MAX_DA).is_ok());
    let err = cos_binned(&a, &spec(&[(1500.0, 1.0)]), DEFAULT_BIN_DA, DEFAULT_MAX_DA).unwrap_err();
    assert!(matches!(err, MetricsError::MassRange { .. }));
}

#[test]
fn recall_of_fragment_masses() {
    let t = ElementTable::bundled();
    let skel = heavy_skeleton(&parse_smiles("CNCO").unwrap()).unwrap();
    let dag = rec_frag(&skel, 3).unwrap();
    let support = msfrag::fragdag::mass_set(&dag, 1, IonMode::Protonated, t);
    let mut pairs: Vec<(f64, f64)> = support.iter().take(4).map(|&m| (m, 0.2)).collect();
    pairs.push((support[0] + 0.5, 0.2));
    let s = spec(&pairs);
    let r = recall_metrics(&s, &support, MatchTolerance::PPM_10);
    assert!((r.r - 0.8).abs() < 1e-12);
    assert!((r.wr - 0.8).abs() < 1e-12);
    let p_os = msfrag::train::os_partition(&s.normalized(), &support).p_os;
    assert!((r.wr + p_os - 1.0).abs() < 1e-12);
}

#[test]
fn constant_zero_os_predictor_error_equals_mean_measured_os() {
    let pairs: Vec<(f64, f64)> = (0..100).map(|i| (if i % 2 == 0 { 0.05 } else { 0.15 }, 0.0)).collect();
    assert!((os_abs_error(&pairs) - 0.1).abs() < 1e-12);
    assert_eq!(os_abs_error(&[]), 0.0);
}

fn dag_and_lattice(smiles: &str) -> (FragDag, Lattice) {
    let skel = heavy_skeleton(&parse_smiles(smiles).unwrap()).unwrap();
    let dag = rec_frag(&skel, 3).unwrap();
    let lat = Lattice::new(&dag, 1, IonMode::Protonated, ElementTable::bundled());
    (dag, lat)
}

fn random_state(lat: &Lattice, rng: &mut ChaCha8Rng, scale: f64) -> LatentState<f64> {
    let logits = Array::new(
        lat.num_nodes(),
        lat.width(),
        (0..lat.num_nodes() * lat.width()).map(|_| rng.random_range(-scale..scale)).collect(),
    )
    .unwrap();
    latent_from_logits(&logits, -3.0, lat).unwrap()
}

/// Node argmax per formula straight from the joint, lowest node on ties.
fn naive_argmax(st: &LatentState<f64>, f: usize) -> usize {
    let mut per_node = vec![0.0; st.lattice().num_nodes()];
    for (c, p) in st.lattice().cells().iter().zip(st.joint()) {
        if c.formula == f {
            per_node[c.node] += p;
        }
    }
    let mut best = 0;
    for n in 0..per_node.len() {
        if per_node[n] > per_node[best] {
            best = n;
        }
    }
    best
}

#[test]
fn identical_models_agree_completely() {
    let (dag, lat) = dag_and_lattice("CC(O)CN");
    let st = random_state(&lat, &mut ChaCha8Rng::seed_from_u64(1), 2.0);
    let states = vec![st.clone(), st.clone(), st];
    let mol = EnsembleMolecule { dag: &dag, states: &states, truth: None };
    let r = ensemble_consistency(&[mol], 0.0, MatchTolerance::PPM_10).unwrap();
    assert_eq!((r.cons, r.maj, r.cons_iso, r.maj_iso), (1.0, 1.0, 1.0, 1.0));
    assert!(r.h_n_given_f.cv < 1e-12);
    assert_eq!(r.num_formulas, lat.formulas().len());
}

#[test]
fn ensemble_agreement_matches_naive_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mols = ["CC(O)CN", "CNCO", "OCC(C)CC=O"];
    let built: Vec<(FragDag, Lattice)> = mols.iter().map(|s| dag_and_lattice(s)).collect();
    let states: Vec<Vec<LatentState<f64>>> =
        built.iter().map(|(_, lat)| (0..4).map(|_| random_state(lat, &mut rng, 3.0)).collect()).collect();
    let p_min = 0.005;
    let ens: Vec<EnsembleMolecule<'_, f64>> =
        built.iter().zip(&states).map(|((dag, _), s)| EnsembleMolecule { dag, states: s, truth: None }).collect();
    let r = ensemble_consistency(&ens, p_min, MatchTolerance::PPM_10).unwrap();

    let (mut cons, mut maj, mut counted) = (0.0, 0.0, 0);
    for ((dag, lat), sts) in built.iter().zip(&states) {
        let (mut c, mut a, mut kept) = (0.0, 0.0, 0);
        for f in 0..lat.formulas().len() {
            if sts.iter().any(|s| s.formula_marginal()[f] < p_min) {
                continue;
            }
            kept += 1;
            let ids: Vec<u128> = sts.iter().map(|s| dag.nodes()[naive_argmax(s, f)].mask).collect();
            let modal = ids.iter().map(|x| ids.iter().filter(|y| *y == x).count()).max().unwrap();
            c += (modal == ids.len()) as u8 as f64;
            a += modal as f64 / ids.len() as f64;
        }
        if kept > 0 {
            cons += c / kept as f64;
            maj += a / kept as f64;
            counted += 1;
        }
    }
    assert!(counted > 0);
    assert!((r.cons - cons / counted as f64).abs() < 1e-12);
    assert!((r.maj - maj / counted as f64).abs() < 1e-12);
    assert!(r.maj >= r.cons && r.maj < 1.0);
    assert!(r.maj_iso >= r.maj - 1e-12);
}

#[test]
fn ensemble_needs_two_models() {
    let (dag, lat) = dag_and_lattice("CCO");
    let states = vec![random_state(&lat, &mut ChaCha8Rng::seed_from_u64(0), 1.0)];
    let mol = EnsembleMolecule { dag: &dag, states: &states, truth: None };
    assert!(matches!(ensemble_consistency(&[mol], 0.0, MatchTolerance::PPM_10), Err(MetricsError::Ensemble(_))));
}

#[test]
fn ensemble_reports_cosine_spread_against_truth() {
    let (dag, lat) = dag_and_lattice("CNCO");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let states: Vec<LatentState<f64>> = (0..3).map(|_| random_state(&lat, &mut rng, 1.0)).collect();
    let truth = msfrag::probdist::dirac_spectrum(&states[0]);
    let mol = EnsembleMolecule { dag: &dag, states: &states, truth: Some(&truth) };
    let r = ensemble_consistency(&[mol], 0.0, MatchTolerance::PPM_10).unwrap();
    assert!(r.cos_hun.mean > 0.0 && r.cos_hun.mean <= 1.0);
    assert!(r.cos_hun.cv > 0.0);
}

proptest! {
    #[test]
    fn hungarian_is_symmetric_and_scale_invariant(seed in 0u64..500, k in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = clustered_pair(&mut rng, 7);
        let ab = cos_hungarian(&a, &b, MatchTolerance::PPM_10);
        let ba = cos_hungarian(&b, &a, MatchTolerance::PPM_10);
        prop_assert!((ab - ba).abs() < 1e-12);
        let scaled = spec(&a.peaks().iter().map(|p| (p.mass, p.intensity * k)).collect::<Vec<_>>());
        prop_assert!((cos_hungarian(&scaled, &b, MatchTolerance::PPM_10) - ab).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((cos_hungarian(&a, &a, MatchTolerance::PPM_10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binned_cosine_is_symmetric(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = clustered_pair(&mut rng, 7);
        let ab = cos_binned(&a, &b, DEFAULT_BIN_DA, DEFAULT_MAX_DA).unwrap();
        let ba = cos_binned(&b, &a, DEFAULT_BIN_DA, DEFAULT_MAX_DA).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn assignment_never_reuses_a_column(rows in 1usize..6, cols in 1usize..6, seed in 0u64..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0.0..1.0)).collect();
        let m = max_weight_assignment(&w, rows, cols);
        let mut used: Vec<usize> = m.iter().flatten().copied().collect();
        let n = used.len();
        prop_assert_eq!(n, rows.min(cols));
        used.sort_unstable();
        used.dedup();
        prop_assert_eq!(used.len(), n);
    }
}
