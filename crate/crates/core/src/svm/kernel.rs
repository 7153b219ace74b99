use std::sync::Arc;

use rayon::prelude::*;

use potlab_game::Scalar;

use crate::error::SvmError;

fn squared_distance<F: Scalar>(x: &[F], y: &[F]) -> F {
    x.iter().zip(y).fold(F::zero(), |acc, (a, b)| {
        let d = *a - *b;
        acc + d * d
    })
}

/// exp(-γ‖x - y‖²).
pub fn rbf_kernel<F: Scalar>(x: &[F], y: &[F], gamma: F) -> Result<F, SvmError> {
    if x.len() != y.len() {
        return Err(SvmError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    Ok(rbf_unchecked(x, y, gamma))
}

pub(crate) fn rbf_unchecked<F: Scalar>(x: &[F], y: &[F], gamma: F) -> F {
    (-gamma * squared_distance(x, y)).exp()
}

/// Kernel matrix over a point set that can grow one point at a time.
///
/// The initial points share one dense matrix behind an `Arc`, so clones are
/// cheap; each appended point stores its own row against every earlier point.
#[derive(Debug, Clone)]
pub struct Gram<F> {
    gamma: F,
    base_points: Arc<Vec<Vec<F>>>,
    base: Arc<Vec<F>>,
    extra_points: Vec<Arc<Vec<F>>>,
    extra_rows: Vec<Arc<Vec<F>>>,
}

impl<F: Scalar> Gram<F> {
    /// Rows are filled in parallel; every entry is computed the same way
    /// regardless of thread count.
    pub fn new(points: Vec<Vec<F>>, gamma: F) -> Self {
        let n = points.len();
        let mut base = vec![F::zero(); n * n];
        if n > 0 {
            base.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, out) in row.iter_mut().enumerate() {
                    *out = rbf_unchecked(&points[i], &points[j], gamma);
                }
            });
        }
        Self { gamma, base_points: Arc::new(points), base: Arc::new(base), extra_points: Vec::new(), extra_rows: Vec::new() }
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    pub fn base_len(&self) -> usize {
        self.base_points.len()
    }

    pub fn len(&self) -> usize {
        self.base_points.len() + self.extra_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[F] {
        let n = self.base_len();
        if i < n {
            &self.base_points[i]
        } else {
            &self.extra_points[i - n]
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        let n = self.base_len();
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi < n {
            self.base[i * n + j]
        } else {
            self.extra_rows[hi - n][lo]
        }
    }

    /// Writes K(ids[i], ids[t]) for every t into `out`.
    pub fn fill_row(&self, ids: &[usize], i: usize, out: &mut [F]) {
        let n = self.base_len();
        if ids.len() == self.len() && ids.first() == Some(&0) && ids.last() == Some(&(ids.len() - 1)) {
            // all points in order
            return self.fill_full_row(i, out);
        }
        let gi = ids[i];
        if gi < n {
            let row = &self.base[gi * n..(gi + 1) * n];
            for (o, &gt) in out.iter_mut().zip(ids) {
                *o = if gt < n { row[gt] } else { self.extra_rows[gt - n][gi] };
            }
        } else {
            let row = &self.extra_rows[gi - n];
            for (o, &gt) in out.iter_mut().zip(ids) {
                *o = if gt <= gi { row[gt] } else { self.extra_rows[gt - n][gi] };
            }
        }
    }

    fn fill_full_row(&self, i: usize, out: &mut [F]) {
        let n = self.base_len();
        if i < n {
            out[..n].copy_from_slice(&self.base[i * n..(i + 1) * n]);
            for (o, row) in out[n..].iter_mut().zip(&self.extra_rows) {
                *o = row[i];
            }
        } else {
            let own = &self.extra_rows[i - n];
            out[..=i].copy_from_slice(own);
            for (o, row) in out[i + 1..].iter_mut().zip(&self.extra_rows[i + 1 - n..]) {
                *o = row[i];
            }
        }
    }

    pub fn push(&mut self, x: Vec<F>) {
        let m = self.len();
        let mut row: Vec<F> = (0..m).map(|j| rbf_unchecked(&x, self.point(j), self.gamma)).collect();
        row.push(rbf_unchecked(&x, &x, self.gamma));
        self.extra_points.push(Arc::new(x));
        self.extra_rows.push(Arc::new(row));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_vectors_differing_in_m_bits() {
        let x = [1.0, 0.0, 1.0, 1.0, 0.0];
        let y = [0.0, 0.0, 1.0, 0.0, 1.0];
        let k = rbf_kernel(&x, &y, 0.3).unwrap();
        assert!((k - (-0.9f64).exp()).abs() < 1e-15);
        assert_eq!(rbf_kernel(&x, &x, 0.3).unwrap(), 1.0);
        assert!(rbf_kernel(&x[..2], &y, 0.3).is_err());
    }

    #[test]
    fn grown_gram_matches_direct_evaluation() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| (0..4).map(|d| ((i * 7 + d * 3) % 5) as f64 * 0.25).collect()).collect();
        let mut g = Gram::new(pts[..4].to_vec(), 0.7);
        g.push(pts[4].clone());
        g.push(pts[5].clone());
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(g.get(i, j), rbf_kernel(&pts[i], &pts[j], 0.7).unwrap());
            }
        }
        let ids = [5, 0, 3, 4, 1];
        let mut row = [0.0; 5];
        for i in 0..ids.len() {
            g.fill_row(&ids, i, &mut row);
            for t in 0..ids.len() {
                assert_eq!(row[t], g.get(ids[i], ids[t]));
            }
        }
    }
}
