use std::fmt;

use super::TensorError;
use crate::Scalar;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Array<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> fmt::Debug for Array<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Array({}x{}, {:?})", self.rows, self.cols, self.data)
    }
}

impl<T: Scalar> Array<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::shape(
                "new",
                format!("{rows}x{cols} needs {} values, got {}", rows * cols, data.len()),
            ));
        }
        Ok(Array { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::full(rows, cols, T::zero())
    }

    pub fn full(rows: usize, cols: usize, value: T) -> Self {
        Array { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn scalar(value: T) -> Self {
        Array { rows: 1, cols: 1, data: vec![value] }
    }

    pub fn row_vector(data: Vec<T>) -> Self {
        Array { rows: 1, cols: data.len(), data }
    }

    pub fn column(data: Vec<T>) -> Self {
        Array { rows: data.len(), cols: 1, data }
    }

    /// Converts from `f64` values, e.g. precomputed features.
    pub fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Result<Self, TensorError> {
        Self::new(rows, cols, data.iter().map(|&x| T::lit(x)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// The single value of a 1x1 array.
    pub fn item(&self) -> Option<T> {
        (self.rows == 1 && self.cols == 1).then(|| self.data[0])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Array { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn sum(&self) -> T {
        let mut s = T::zero();
        for &x in &self.data {
            s += x;
        }
        s
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn reshaped(mut self, rows: usize, cols: usize) -> Result<Self, TensorError> {
        if rows * cols != self.data.len() {
            return Err(TensorError::shape("reshape", format!("{}x{} -> {rows}x{cols}", self.rows, self.cols)));
        }
        self.rows = rows;
        self.cols = cols;
        Ok(self)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// `self += other`, same shape required.
    pub fn add_assign(&mut self, other: &Array<T>) -> Result<(), TensorError> {
        if self.shape() != other.shape() {
            return Err(TensorError::shape("add_assign", format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Array<T>) -> Result<Array<T>, TensorError> {
        if self.cols != other.rows {
            return Err(TensorError::shape("matmul", format!("{:?} x {:?}", self.shape(), other.shape())));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        matmul_acc(&self.data, &other.data, &mut out.data, self.rows, self.cols, other.cols);
        Ok(out)
    }
}

/// `c[m x n] += a[m x k] * b[k x n]`.
pub(super) fn matmul_acc<T: Scalar>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            let b_row = &b[p * n..(p + 1) * n];
            for (y, &z) in c_row.iter_mut().zip(b_row) {
                *y += x * z;
            }
        }
    }
}

/// `c[m x k] += g[m x n] * b[k x n]^T`.
pub(super) fn matmul_nt_acc<T: Scalar>(g: &[T], b: &[T], c: &mut [T], m: usize, n: usize, k: usize) {
    for i in 0..m {
        let g_row = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let b_row = &b[p * n..(p + 1) * n];
            let mut s = T::zero();
            for (&x, &y) in g_row.iter().zip(b_row) {
                s += x * y;
            }
            c[i * k + p] += s;
        }
    }
}

/// `c[k x n] += a[m x k]^T * g[m x n]`.
pub(super) fn matmul_tn_acc<T: Scalar>(a: &[T], g: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let g_row = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            let c_row = &mut c[p * n..(p + 1) * n];
            for (y, &z) in c_row.iter_mut().zip(g_row) {
                *y += x * z;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = Array::<f64>::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Array::<f64>::new(3, 2, vec![7., 8., 9., 10., 11., 12.]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[58., 64., 139., 154.]);
        assert!(b.matmul(&b).is_err());
    }

    #[test]
    fn transposed_kernels_agree() {
        let a = Array::<f64>::new(2, 3, vec![1., -2., 3., 0.5, 5., -6.]).unwrap();
        let g = Array::<f64>::new(2, 4, (0..8).map(|x| x as f64 * 0.3 - 1.0).collect()).unwrap();
        let mut c = vec![0.0; 12];
        matmul_tn_acc(a.data(), g.data(), &mut c, 2, 3, 4);
        assert_eq!(c, a.transpose().matmul(&g).unwrap().into_vec());
        let b = Array::<f64>::new(3, 4, (0..12).map(|x| (x as f64).sin()).collect()).unwrap();
        let mut c = vec![0.0; 6];
        matmul_nt_acc(g.data(), b.data(), &mut c, 2, 4, 3);
        let expect = g.matmul(&b.transpose()).unwrap();
        for (x, y) in c.iter().zip(expect.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors_name_op() {
        let err = Array::<f64>::new(2, 2, vec![1.0]).unwrap_err();
        assert!(err.to_string().contains("new"));
        let a = Array::<f32>::zeros(2, 3);
        assert!(a.matmul(&a).unwrap_err().to_string().contains("matmul"));
    }
}
