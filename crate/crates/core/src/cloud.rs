use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{sq_dist, Scalar};

/// `n` points in `R^d` stored row-major, with Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> PointCloud<T> {
    /// Builds a cloud from a flat row-major buffer.
    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("point dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(invalid("point cloud must contain at least one point"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(invalid(format!(
                "coordinate buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!(
                "non-finite coordinate in point {} (axis {})",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(invalid("point cloud must contain at least one point"));
        };
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(invalid(format!("point {i} has dimension {}, expected {dim}", r.len())));
            }
            coords.extend_from_slice(r);
        }
        Self::from_flat(dim, coords)
    }

    /// One-dimensional cloud from scalar positions.
    pub fn from_line(xs: &[T]) -> Result<Self> {
        Self::from_flat(1, xs.to_vec())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.coords
    }

    #[inline]
    pub fn sq_dist(&self, i: usize, j: usize) -> T {
        sq_dist(self.point(i), self.point(j))
    }

    /// Sub-cloud with the given indices, in order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        Self::from_flat(self.dim, coords)
    }

    pub fn cast<U: Scalar>(&self) -> PointCloud<U> {
        PointCloud {
            dim: self.dim,
            coords: self.coords.iter().map(|c| U::lit(c.to_f64_lossy())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_nonfinite() {
        assert!(PointCloud::from_rows(&[vec![0.0, 1.0], vec![2.0]]).is_err());
        assert!(PointCloud::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(PointCloud::<f64>::from_flat(2, vec![]).is_err());
        assert!(PointCloud::<f64>::from_flat(0, vec![1.0]).is_err());
    }

    #[test]
    fn row_access() {
        let c = PointCloud::from_rows(&[[0.0, 1.0], [2.0, 3.0]]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.point(1), &[2.0, 3.0]);
        assert_eq!(c.sq_dist(0, 1), 8.0);
    }
}
