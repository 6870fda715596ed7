//! Dense complex matrix helpers.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::Result;

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

pub fn max_abs(a: &ArrayView2<Complex64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut m: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            m = m.max((a[[r, c]] - a[[c, r]].conj()).norm());
        }
    }
    m
}

/// Max-norm of `a` acting on the span of the first `cols` basis vectors.
pub fn max_abs_on_columns(a: &CMat, cols: usize) -> f64 {
    max_abs(&a.slice(s![.., ..cols]))
}

pub fn unitarity_defect(u: &CMat) -> f64 {
    let mut p = adjoint(u).dot(u);
    for i in 0..p.nrows() {
        p[[i, i]] -= 1.0;
    }
    max_abs(&p.view())
}

/// Eigendecomposition of a Hermitian matrix, reused for every exponential.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub values: Array1<f64>,
    pub vectors: CMat,
}

impl HermitianSpectrum {
    pub fn new(h: &CMat) -> Result<Self> {
        // LAPACK sees a row-major array as its transpose, i.e. the conjugate
        // of a Hermitian matrix; hand it a column-major copy instead
        let mut f = Array2::zeros(h.raw_dim().f());
        f.assign(h);
        let (values, vectors) = f.eigh(UPLO::Lower)?;
        Ok(Self { values, vectors })
    }

    /// `exp(i θ H)`.
    pub fn unitary(&self, theta: f64) -> CMat {
        self.function(|l| Complex64::from_polar(1.0, theta * l))
    }

    /// `f(H)` for a scalar function applied to the eigenvalues.
    pub fn function<F: Fn(f64) -> Complex64>(&self, f: F) -> CMat {
        let mut scaled = self.vectors.clone();
        for (mut col, &l) in scaled.axis_iter_mut(Axis(1)).zip(self.values.iter()) {
            let z = f(l);
            col.mapv_inplace(|v| v * z);
        }
        scaled.dot(&adjoint(&self.vectors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat {
        let mut h = CMat::zeros((3, 3));
        h[[0, 0]] = Complex64::new(1.0, 0.0);
        h[[1, 1]] = Complex64::new(-0.5, 0.0);
        h[[2, 2]] = Complex64::new(2.0, 0.0);
        h[[0, 1]] = Complex64::new(0.3, 0.2);
        h[[1, 0]] = Complex64::new(0.3, -0.2);
        h[[1, 2]] = Complex64::new(0.0, 0.7);
        h[[2, 1]] = Complex64::new(0.0, -0.7);
        h
    }

    #[test]
    fn exponential_is_unitary_and_composes() {
        let spec = HermitianSpectrum::new(&sample()).unwrap();
        let u = spec.unitary(0.9);
        assert!(unitarity_defect(&u) < 1e-13);
        let back = u.dot(&spec.unitary(-0.9));
        assert!(max_abs(&(back - identity(3)).view()) < 1e-13);
    }

    #[test]
    fn spectral_function_reproduces_matrix() {
        let h = sample();
        let spec = HermitianSpectrum::new(&h).unwrap();
        let rebuilt = spec.function(|l| Complex64::new(l, 0.0));
        assert!(max_abs(&(rebuilt - &h).view()) < 1e-13);
        assert!(hermitian_defect(&h) == 0.0);
    }
}
