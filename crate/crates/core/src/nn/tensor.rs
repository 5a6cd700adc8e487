use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {count} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let count = shape.iter().product();
        Self {
            shape,
            data: vec![T::zero(); count],
        }
    }

    pub fn filled(shape: Vec<usize>, value: T) -> Self {
        let count = shape.iter().product();
        Self {
            shape,
            data: vec![value; count],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Size of the last axis.
    pub fn last_dim(&self) -> usize {
        *self.shape.last().unwrap_or(&1)
    }

    /// Number of rows when viewed as `(∏ leading dims) × last_dim`.
    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.last_dim()).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[T] {
        let c = self.last_dim();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Concatenates two tensors with equal leading dims along the last axis.
    pub fn concat_last(&self, other: &Self) -> Result<Self> {
        let (a, b) = (self.last_dim(), other.last_dim());
        if self.shape[..self.shape.len() - 1] != other.shape[..other.shape.len() - 1] {
            return Err(Error::shape("concat needs matching leading dimensions"));
        }
        let rows = self.rows();
        let mut data = Vec::with_capacity(rows * (a + b));
        for i in 0..rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        let mut shape = self.shape.clone();
        *shape.last_mut().unwrap() = a + b;
        Ok(Self { shape, data })
    }

    /// Inverse of [`Tensor::concat_last`]: splits the last axis at `at`.
    pub fn split_last(&self, at: usize) -> Result<(Self, Self)> {
        let c = self.last_dim();
        if at > c {
            return Err(Error::shape("split point beyond last axis"));
        }
        let rows = self.rows();
        let mut left = Vec::with_capacity(rows * at);
        let mut right = Vec::with_capacity(rows * (c - at));
        for i in 0..rows {
            let r = self.row(i);
            left.extend_from_slice(&r[..at]);
            right.extend_from_slice(&r[at..]);
        }
        let lead = &self.shape[..self.shape.len() - 1];
        let mut ls = lead.to_vec();
        ls.push(at);
        let mut rs = lead.to_vec();
        rs.push(c - at);
        Ok((Self { shape: ls, data: left }, Self { shape: rs, data: right }))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), |a, b| a.max(b))
    }
}
