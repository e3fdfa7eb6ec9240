use msfrag::tensor::{grad_check, Array, Tape, TensorError, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array<f64> {
    Array::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Reduces any array to a scalar through a fixed random projection so that
/// every output entry carries a distinct weight.
fn project(t: &mut Tape<'_, f64>, v: Var, seed: u64) -> Result<Var, TensorError> {
    let (r, c) = t.value(v).shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = t.constant(random(&mut rng, r, c));
    let m = t.mul(v, w)?;
    Ok(t.sum(m))
}

fn check(params: Vec<Array<f64>>, f: impl for<'t> Fn(&mut Tape<'t, f64>, &[Var]) -> Result<Var, TensorError>) {
    let report = grad_check(f, &params, 1e-4, 1e-4).unwrap();
    let worst = report.failures().next().cloned();
    assert!(report.passed(), "max rel error {} at {:?}", report.max_rel_error(), worst);
}

#[test]
fn three_layer_mlp_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random(&mut rng, 5, 4);
    let params = vec![
        random(&mut rng, 4, 6),
        random(&mut rng, 1, 6),
        random(&mut rng, 6, 6),
        random(&mut rng, 1, 6),
        random(&mut rng, 6, 3),
        random(&mut rng, 1, 3),
    ];
    check(params, move |t, p| {
        let mut h = t.constant(x.clone());
        for layer in 0..3 {
            let z = t.matmul(h, p[2 * layer])?;
            let z = t.add_row(z, p[2 * layer + 1])?;
            h = if layer < 2 { t.relu(z) } else { z };
        }
        let l = t.log_softmax(h, None)?;
        project(t, l, 3)
    });
}

#[test]
fn masked_log_softmax_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = vec![random(&mut rng, 2, 5)];
    let mask = vec![true, false, true, true, true, true, true, false, false, true];
    check(params, move |t, p| {
        let l = t.log_softmax(p[0], Some(mask.clone()))?;
        let keep = t.gather_rows(l, vec![0, 1])?;
        let e = t.exp(keep);
        let w = t.reshape(e, 10, 1)?;
        let picked = t.gather_rows(w, vec![0, 2, 3, 4, 5, 6, 9])?;
        project(t, picked, 9)
    });
}

#[test]
fn segment_ops_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let params = vec![random(&mut rng, 6, 3)];
    check(params, |t, p| {
        let seg = vec![0, 2, 0, 1, 2, 2];
        let a = t.segment_sum(p[0], seg.clone(), 3)?;
        let b = t.segment_mean(p[0], seg.clone(), 3)?;
        let c = t.segment_logsumexp(p[0], seg, 3)?;
        let ab = t.concat_cols(&[a, b])?;
        let abc = t.concat_cols(&[ab, c])?;
        project(t, abc, 4)
    });
}

#[test]
fn elementwise_ops_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let a = random(&mut rng, 3, 4);
    let b = random(&mut rng, 3, 4).map(|x| x.abs() + 0.5);
    check(vec![a, b], |t, p| {
        let m = t.mul(p[0], p[1])?;
        let l = t.log(p[1]);
        let e = t.exp(p[0]);
        let n = t.neg(e);
        let s = t.scale(l, 0.3);
        let x = t.add(m, n)?;
        let x = t.sub(x, s)?;
        let c = t.clamp_min(x, -1.5);
        let r = t.concat_rows(&[c, m])?;
        let total = t.sum(p[0]);
        let shifted = t.add_scalar(r, total)?;
        project(t, shifted, 2)
    });
}

#[test]
fn log_softmax_rows_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random(&mut rng, 4, 7).map(|v| v * 30.0);
    let mut t = Tape::new();
    let v = t.param(&x);
    let l = t.log_softmax(v, None).unwrap();
    for r in 0..4 {
        let s: f64 = t.value(l).row(r).iter().map(|y| y.exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matmul_and_bias_gradients(seed in 0u64..1000, m in 1usize..5, k in 1usize..5, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = vec![random(&mut rng, m, k), random(&mut rng, k, n), random(&mut rng, 1, n)];
        let report = grad_check(|t, p| {
            let z = t.matmul(p[0], p[1])?;
            let z = t.add_row(z, p[2])?;
            project(t, z, seed)
        }, &params, 1e-4, 1e-4).unwrap();
        prop_assert!(report.passed(), "max rel error {}", report.max_rel_error());
    }

    #[test]
    fn gather_gradients(seed in 0u64..1000, rows in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx: Vec<usize> = (0..8).map(|_| rng.random_range(0..rows)).collect();
        let params = vec![random(&mut rng, rows, 3)];
        let report = grad_check(|t, p| {
            let g = t.gather_rows(p[0], idx.clone())?;
            project(t, g, seed)
        }, &params, 1e-4, 1e-4).unwrap();
        prop_assert!(report.passed());
    }

    #[test]
    fn deterministic_forward(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random(&mut rng, 3, 3);
        let run = || {
            let mut t = Tape::new();
            let v = t.param(&a);
            let m = t.matmul(v, v).unwrap();
            let l = t.log_softmax(m, None).unwrap();
            t.value(l).clone()
        };
        prop_assert_eq!(run(), run());
    }
}
