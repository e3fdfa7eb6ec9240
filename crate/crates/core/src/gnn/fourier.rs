use crate::Scalar;

/// `|sin(2 pi z / 2^t)|` for `t = 1..=big_t`.
pub fn fourier_embed<T: Scalar>(z: f64, big_t: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(big_t);
    fourier_into(z, big_t, &mut out);
    out
}

pub(crate) fn fourier_into<T: Scalar>(z: f64, big_t: usize, out: &mut Vec<T>) {
    let mut period = 1.0;
    for _ in 0..big_t {
        period *= 2.0;
        out.push(T::lit((2.0 * std::f64::consts::PI * z / period).sin().abs()));
    }
}

/// Mean Fourier embedding of a list of collision energies.
pub fn energy_embedding<T: Scalar>(energies: &[u32], big_t: usize) -> Vec<T> {
    let mut acc = vec![0.0f64; big_t];
    for &e in energies {
        for (a, v) in acc.iter_mut().zip(fourier_embed::<f64>(e as f64, big_t)) {
            *a += v;
        }
    }
    let n = energies.len().max(1) as f64;
    acc.into_iter().map(|a| T::lit(a / n)).collect()
}
