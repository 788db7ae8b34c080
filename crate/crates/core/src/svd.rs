//! Randomized truncated SVD by subspace iteration.
//!
//! The operator is only touched through products with tall dense blocks, so
//! sparse or implicitly centred matrices never need to be materialized.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// A real matrix that can be multiplied with dense blocks from either side.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A * x` for `x` of shape `ncols × k`.
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Aᵀ * y` for `y` of shape `nrows × k`.
    fn apply_transpose(&self, y: &DMatrix<f64>) -> DMatrix<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }
    fn apply_transpose(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(y)
    }
}

/// Binary row-sparse matrix with every column shifted by its mean.
///
/// Represents `M - 1 cᵀ` where `c` holds the column means of the 0/1 matrix `M`.
#[derive(Debug, Clone)]
pub struct CenteredBinaryMatrix {
    rows: Vec<Vec<usize>>,
    ncols: usize,
    col_means: Vec<f64>,
}

impl CenteredBinaryMatrix {
    /// `rows[i]` lists the columns holding a one in row `i`; duplicates are ignored.
    pub fn new(mut rows: Vec<Vec<usize>>, ncols: usize) -> Self {
        let mut col_means = vec![0.0; ncols];
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            for &c in row.iter() {
                assert!(c < ncols, "column {c} out of range");
                col_means[c] += 1.0;
            }
        }
        let n = rows.len().max(1) as f64;
        col_means.iter_mut().for_each(|m| *m /= n);
        CenteredBinaryMatrix {
            rows,
            ncols,
            col_means,
        }
    }

    pub fn col_means(&self) -> &[f64] {
        &self.col_means
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.ncols, |i, j| {
            let one = if self.rows[i].binary_search(&j).is_ok() { 1.0 } else { 0.0 };
            one - self.col_means[j]
        })
    }
}

impl LinearOperator for CenteredBinaryMatrix {
    fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let k = x.ncols();
        // c' x, subtracted from every row
        let shift: Vec<f64> = (0..k)
            .map(|j| self.col_means.iter().enumerate().map(|(c, m)| m * x[(c, j)]).sum())
            .collect();
        DMatrix::from_fn(self.rows.len(), k, |i, j| {
            self.rows[i].iter().map(|&c| x[(c, j)]).sum::<f64>() - shift[j]
        })
    }

    fn apply_transpose(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let k = y.ncols();
        let mut out = DMatrix::zeros(self.ncols, k);
        for (i, row) in self.rows.iter().enumerate() {
            for &c in row {
                for j in 0..k {
                    out[(c, j)] += y[(i, j)];
                }
            }
        }
        for j in 0..k {
            let col_sum: f64 = y.column(j).iter().sum();
            for c in 0..self.ncols {
                out[(c, j)] -= self.col_means[c] * col_sum;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `nrows × rank`
    pub u: DMatrix<f64>,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// `ncols × rank`
    pub v: DMatrix<f64>,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U Σ`, the row embeddings.
    pub fn scaled_u(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.scaled_u() * self.v.transpose()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SvdParams {
    pub oversample: usize,
    pub power_iters: usize,
}

impl Default for SvdParams {
    fn default() -> Self {
        SvdParams {
            oversample: 10,
            power_iters: 4,
        }
    }
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Rank-`rank` SVD of `op`. Components beyond `min(nrows, ncols)` are zero.
///
/// Whenever the sketch covers the smaller dimension the result is exact up to
/// rounding. Signs are fixed so the largest-magnitude entry of each left
/// singular vector is positive.
pub fn randomized_svd<A: LinearOperator + ?Sized>(
    op: &A,
    rank: usize,
    params: SvdParams,
    rng: &mut impl Rng,
) -> TruncatedSvd {
    let (m, n) = (op.nrows(), op.ncols());
    let full = m.min(n);
    let sketch = (rank + params.oversample).min(full);
    let mut u = DMatrix::zeros(m, rank);
    let mut v = DMatrix::zeros(n, rank);
    let mut singular_values = vec![0.0; rank];
    if sketch == 0 {
        return TruncatedSvd { u, singular_values, v };
    }

    let omega = DMatrix::from_fn(n, sketch, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = orthonormal_basis(op.apply(&omega));
    for _ in 0..params.power_iters {
        let z = orthonormal_basis(op.apply_transpose(&q));
        q = orthonormal_basis(op.apply(&z));
    }

    // B = Qᵀ A, computed as (Aᵀ Q)ᵀ
    let b = op.apply_transpose(&q).transpose();
    let svd = b.svd(true, true);
    let small_u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let big_u = &q * &small_u;
    for (out, &k) in order.iter().take(rank.min(full)).enumerate() {
        let mut uc = big_u.column(k).clone_owned();
        let mut vc = v_t.row(k).transpose();
        let pivot = uc.iamax();
        if uc[pivot] < 0.0 {
            uc.neg_mut();
            vc.neg_mut();
        }
        u.set_column(out, &uc);
        v.set_column(out, &vc);
        singular_values[out] = svd.singular_values[k].max(0.0);
    }
    TruncatedSvd { u, singular_values, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn centered_operator_matches_dense() {
        let m = CenteredBinaryMatrix::new(vec![vec![0, 2], vec![1], vec![2, 2], vec![]], 3);
        let dense = m.to_dense();
        let x = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        let y = DMatrix::from_fn(4, 2, |i, j| (i * j) as f64 + 0.25);
        assert!((m.apply(&x) - &dense * &x).norm() < 1e-12);
        assert!((m.apply_transpose(&y) - dense.tr_mul(&y)).norm() < 1e-12);
        for j in 0..3 {
            assert!(dense.column(j).iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn low_rank_plus_noise_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(60, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DMatrix::from_fn(3, 45, |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = DMatrix::from_fn(60, 45, |_, _| 1e-3 * rng.sample::<f64, _>(StandardNormal));
        let mat = a * b + noise;
        let approx = randomized_svd(&mat, 3, SvdParams::default(), &mut rng);
        let mut exact = mat.singular_values().as_slice().to_vec();
        exact.sort_by(|a, b| b.total_cmp(a));
        for k in 0..3 {
            assert!((approx.singular_values[k] - exact[k]).abs() < 1e-6 * exact[0]);
        }
    }

    #[test]
    fn pads_beyond_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mat = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let svd = randomized_svd(&mat, 4, SvdParams::default(), &mut rng);
        assert_eq!(svd.singular_values.len(), 4);
        assert_eq!(&svd.singular_values[2..], &[0.0, 0.0]);
        assert!((svd.reconstruct() - mat).norm() < 1e-12);
    }
}
