use nalgebra::{DMatrix, SymmetricEigen};

use super::{CovarianceSpec, LdltFactors};
use crate::error::{domain, Error, Result};

/// Upper-unitriangular factorisation `Sigma = M diag(sigma_sq) M^T`, built from
/// the last coordinate upwards so that row `i` of `M` only couples `i` to
/// coordinates `j > i`.
pub fn ldlt(spec: &CovarianceSpec) -> Result<LdltFactors> {
    let s = &spec.sigma_mat;
    let n = s.nrows();
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0; n];
    for j in (0..n).rev() {
        let tail: f64 = (j + 1..n).map(|k| m[(j, k)] * m[(j, k)] * d[k]).sum();
        let pivot = s[(j, j)] - tail;
        if !pivot.is_finite() || pivot <= 0.0 {
            return Err(Error::Factorization { index: j, pivot });
        }
        d[j] = pivot;
        for i in 0..j {
            let tail: f64 = (j + 1..n).map(|k| m[(i, k)] * m[(j, k)] * d[k]).sum();
            m[(i, j)] = (s[(i, j)] - tail) / pivot;
        }
    }
    Ok(LdltFactors { m_mat: m, sigma_sq: d })
}

/// Ground-state covariance of a free scalar field on a periodic chain:
/// `K = (m^2 + 2) I - (S + S^T)`, `Sigma = scale^2 K^(-1/2) / 2`.
pub fn scalar_field_covariance(n_sites: usize, mass: f64, width_scale: f64) -> Result<CovarianceSpec> {
    if n_sites < 2 {
        return domain("scalar field needs at least two sites");
    }
    if !mass.is_finite() || mass <= 0.0 {
        return domain(format!("mass must be positive, got {mass}"));
    }
    if !width_scale.is_finite() || width_scale <= 0.0 {
        return domain(format!("width scale must be positive, got {width_scale}"));
    }
    let mut k = DMatrix::<f64>::identity(n_sites, n_sites) * (mass * mass + 2.0);
    for i in 0..n_sites {
        let next = (i + 1) % n_sites;
        k[(i, next)] -= 1.0;
        k[(next, i)] -= 1.0;
    }
    let eig = SymmetricEigen::new(k);
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let v = &eig.eigenvectors;
    let mut sigma = v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose();
    sigma *= width_scale * width_scale / 2.0;
    // Symmetrise away the eigensolver's rounding.
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    CovarianceSpec::centred(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_factors() {
        let spec = CovarianceSpec::centred(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let f = ldlt(&spec).unwrap();
        assert_eq!(f.m_mat, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]));
        assert_eq!(f.sigma_sq, vec![1.5, 2.0]);
        assert_eq!(f.reconstruct(), spec.sigma_mat);
    }

    #[test]
    fn indefinite_input_fails() {
        let spec = CovarianceSpec::centred(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
        assert!(matches!(ldlt(&spec), Err(Error::Factorization { index: 0, .. })));
    }

    #[test]
    fn scalar_field_rejects_massless() {
        assert!(scalar_field_covariance(3, 0.0, 1.0).is_err());
    }
}
