//! Dense n-dimensional `f64` arrays in row-major order.
//!
//! This is the carrier type for parameters, activations and gradients.
//! Only the handful of operations the optimizers need are provided:
//! elementwise product, inner product and scaled addition. Summation in
//! [`Tensor::dot`] is sequential left-to-right so that training runs are
//! bit-reproducible for a given seed.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from a shape and row-major data.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::CountMismatch {
                left: expected,
                right: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn ones(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![1.0; len],
        }
    }

    /// 1-d tensor from a plain vector.
    pub fn from_vec(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(())
    }

    /// Elementwise product; shapes must match exactly.
    pub fn elementwise_mul(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Inner product over flattened elements, summed sequentially
    /// left-to-right. Shapes may differ as long as element counts agree.
    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        if self.data.len() != other.data.len() {
            return Err(Error::CountMismatch {
                left: self.data.len(),
                right: other.data.len(),
            });
        }
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += a * b;
        }
        Ok(acc)
    }

    /// Returns `alpha * self + y`.
    pub fn axpy(&self, alpha: f64, y: &Tensor) -> Result<Tensor> {
        self.check_same_shape(y)?;
        let data = self
            .data
            .iter()
            .zip(&y.data)
            .map(|(x, y)| alpha * x + y)
            .collect();
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Returns `self - other`.
    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        other.axpy(-1.0, self)
    }

    /// Euclidean norm over flattened elements.
    pub fn norm(&self) -> f64 {
        self.dot(self).expect("same tensor").sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn new_rejects_count_mismatch() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn elementwise_mul_basic() {
        let a = Tensor::from_vec(vec![1.0, 2.0, 3.0]);
        let b = Tensor::from_vec(vec![4.0, 5.0, 6.0]);
        assert_eq!(
            a.elementwise_mul(&b).unwrap().data(),
            &[4.0, 10.0, 18.0]
        );
    }

    #[test]
    fn elementwise_mul_identity() {
        let x = Tensor::from_vec(vec![0.5, -1.25, 7.0]);
        let ones = Tensor::ones(x.shape());
        assert_eq!(x.elementwise_mul(&ones).unwrap(), x);
    }

    #[test]
    fn elementwise_mul_shape_mismatch_reports_both() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[3, 2]);
        match a.elementwise_mul(&b) {
            Err(Error::ShapeMismatch { left, right }) => {
                assert_eq!(left, vec![2, 3]);
                assert_eq!(right, vec![3, 2]);
            }
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn elementwise_mul_matches_scalar_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..1000).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let ta = Tensor::from_vec(a.clone());
        let tb = Tensor::from_vec(b.clone());
        let got = ta.elementwise_mul(&tb).unwrap();
        for i in 0..1000 {
            assert_eq!(got.data()[i], a[i] * b[i]);
        }
    }

    #[test]
    fn dot_basic() {
        let a = Tensor::from_vec(vec![1.0, 2.0]);
        let b = Tensor::from_vec(vec![3.0, 4.0]);
        assert_eq!(a.dot(&b).unwrap(), 11.0);
    }

    #[test]
    fn dot_zeros_and_orthogonal() {
        let x = Tensor::from_vec(vec![3.0, -2.0, 9.0]);
        let z = Tensor::zeros(&[3]);
        assert_eq!(x.dot(&z).unwrap(), 0.0);
        let e1 = Tensor::from_vec(vec![1.0, 0.0]);
        let e2 = Tensor::from_vec(vec![0.0, 1.0]);
        assert_eq!(e1.dot(&e2).unwrap(), 0.0);
    }

    #[test]
    fn dot_flattens_shapes() {
        let a = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(a.dot(&b).unwrap(), 10.0);
        assert!(a.dot(&Tensor::zeros(&[3])).is_err());
    }

    #[test]
    fn axpy_cases() {
        let x = Tensor::from_vec(vec![1.0, -2.0]);
        let y = Tensor::from_vec(vec![10.0, 20.0]);
        assert_eq!(x.axpy(0.0, &y).unwrap(), y);
        assert_eq!(x.axpy(1.0, &Tensor::zeros(&[2])).unwrap(), x);
        assert_eq!(x.axpy(-1.0, &x).unwrap(), Tensor::zeros(&[2]));
    }

    #[test]
    fn operations_are_deterministic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let a = Tensor::from_vec((0..257).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let b = Tensor::from_vec((0..257).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let d1 = a.dot(&b).unwrap();
        let d2 = a.dot(&b).unwrap();
        assert_eq!(d1.to_bits(), d2.to_bits());
        let m1 = a.elementwise_mul(&b).unwrap();
        let m2 = a.elementwise_mul(&b).unwrap();
        assert_eq!(m1, m2);
    }

    proptest! {
        #[test]
        fn mul_commutes(v in proptest::collection::vec(-1e6f64..1e6, 1..64)) {
            let n = v.len() / 2;
            if n == 0 { return Ok(()); }
            let a = Tensor::from_vec(v[..n].to_vec());
            let b = Tensor::from_vec(v[n..2 * n].to_vec());
            prop_assert_eq!(a.elementwise_mul(&b).unwrap(), b.elementwise_mul(&a).unwrap());
        }

        #[test]
        fn dot_self_nonnegative(v in proptest::collection::vec(-1e3f64..1e3, 1..64)) {
            let a = Tensor::from_vec(v.clone());
            let d = a.dot(&a).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert_eq!(d == 0.0, v.iter().all(|&x| x == 0.0));
        }
    }
}
