//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result, C64};

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending
/// order; column `k` of the returned matrix belongs to eigenvalue `k`.
pub fn eigh(matrix: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(matrix.clone());
    sort_eigen(eig.eigenvalues.as_slice(), &eig.eigenvectors)
}

/// Real symmetric variant of [`eigh`].
pub fn eigh_real(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(matrix.clone());
    let n = matrix.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

fn sort_eigen(values: &[f64], vectors: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = order.iter().map(|&k| values[k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    (sorted, vecs)
}

/// Eigenvalues of a general complex matrix, ordered by real part then
/// imaginary part.
pub fn eigenvalues_general(matrix: &DMatrix<C64>) -> Result<Vec<C64>> {
    let values = matrix
        .clone()
        .eigenvalues()
        .ok_or_else(|| Error::Contract("Schur decomposition did not converge".into()))?;
    let mut v: Vec<C64> = values.iter().copied().collect();
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(v)
}

pub fn hermitian_deviation(matrix: &DMatrix<C64>) -> f64 {
    let n = matrix.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(matrix: &DMatrix<C64>) -> bool {
    let scale = matrix.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
    matrix.is_square() && hermitian_deviation(matrix) <= 1e-12 * scale
}

pub fn to_complex(matrix: &DMatrix<f64>) -> DMatrix<C64> {
    matrix.map(|x| C64::new(x, 0.0))
}

pub fn to_complex_vec(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| C64::new(x, 0.0))
}

/// `max |(U^† U - I)_{ij}|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let prod = u.adjoint() * u;
    let n = prod.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

/// `|<a|b>|` for complex column vectors.
pub fn overlap(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    a.dotc(b).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorts_ascending() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 3.0, 0.0]);
        let (vals, vecs) = eigh(&to_complex(&m));
        assert!((vals[0] + 3.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let residual = to_complex(&m) * vecs.column(1) - vecs.column(1) * C64::new(3.0, 0.0);
        assert!(residual.norm() < 1e-12);
    }

    #[test]
    fn general_eigenvalues_of_damped_pair() {
        // [[0, g], [g, -i k]] has eigenvalues (-ik +- sqrt(4g^2 - k^2)) / 2
        let (g, k) = (2.0, 1.0);
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(g, 0.0), C64::new(g, 0.0), C64::new(0.0, -k)],
        );
        let vals = eigenvalues_general(&m).unwrap();
        let root = (4.0 * g * g - k * k).sqrt() / 2.0;
        assert!((vals[0] - C64::new(-root, -k / 2.0)).norm() < 1e-12);
        assert!((vals[1] - C64::new(root, -k / 2.0)).norm() < 1e-12);
    }
}
