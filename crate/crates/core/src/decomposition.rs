//! Gram matrix of the filtered signal and the orthogonal transform that
//! separates its excited directions from the directions it never visits.
//!
//! Rank decisions are made on the singular values of a square-root factor
//! `D` with `D·Dᵀ = Z` rather than on the eigenvalues of `Z` itself: the
//! Gram matrix squares the dynamic range of the data and pushes weakly
//! excited but genuine directions below the double-precision floor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kfilter::FilteredTrajectory;
use crate::linalg::{self, Matrix};
use crate::plant::ExtendedSystem;

/// Default relative threshold on the singular values of the square-root
/// factor (equivalently on `sqrt` of the Gram eigenvalues).
pub const DEFAULT_SQRT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("trajectory needs at least two samples")]
    TooShort,
    #[error("the filtered signal has no excited direction")]
    NoExcitation,
    #[error("decomposition does not match trajectory ({0} vs {1} rows)")]
    Mismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, DecompositionError>;

/// Orthogonal split `T_z = [T_a; T_b]` of the composite signal space.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `n_z × n_z` orthogonal, rows ordered by decreasing excitation.
    pub t_z: Matrix,
    /// Number of excited directions.
    pub l: usize,
    /// Nonzero Gram eigenvalues, non-increasing, length `l`.
    pub sigma0: Vec<f64>,
    /// All Gram eigenvalues (squares of the factor's singular values).
    pub spectrum: Vec<f64>,
    pub gram: Matrix,
}

impl Decomposition {
    pub fn n_z(&self) -> usize {
        self.t_z.nrows()
    }

    /// First `l` rows of `T_z`.
    pub fn t_a(&self) -> Matrix {
        self.t_z.rows(0, self.l).into_owned()
    }

    /// Last `n_z − l` rows of `T_z`.
    pub fn t_b(&self) -> Matrix {
        self.t_z.rows(self.l, self.n_z() - self.l).into_owned()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "l": self.l,
            "sigma0": self.sigma0,
            "T_z": linalg::to_rows(&self.t_z),
        })
    }
}

/// Trapezoidal weights on an arbitrary increasing grid.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let h = 0.5 * (times[k] - times[k - 1]);
        w[k - 1] += h;
        w[k] += h;
    }
    w
}

/// `D = [z(t_0)√w_0, …, z(t_N)√w_N]`, so that `D·Dᵀ` is the trapezoidal
/// Gram matrix.
pub fn gram_factor(traj: &FilteredTrajectory) -> Result<Matrix> {
    if traj.len() < 2 {
        return Err(DecompositionError::TooShort);
    }
    let w = trapezoid_weights(&traj.times);
    let mut d = traj.z.clone();
    for (k, mut col) in d.column_iter_mut().enumerate() {
        col *= w[k].sqrt();
    }
    Ok(d)
}

/// Trapezoidal approximation of `∫ z zᵀ dt`, symmetrized.
pub fn gram_matrix(traj: &FilteredTrajectory) -> Result<Matrix> {
    let d = gram_factor(traj)?;
    let g = &d * d.transpose();
    Ok((&g + g.transpose()) * 0.5)
}

/// Eigen-decomposition of a symmetric PSD Gram matrix with rank decided
/// at `rel_tol` relative to the largest eigenvalue.
pub fn algorithm1(gram: &Matrix, rel_tol: f64) -> Decomposition {
    let (u, sv) = linalg::sorted_svd(gram);
    let l = linalg::rank_from_singular_values(&sv, rel_tol);
    Decomposition {
        t_z: u.transpose(),
        l,
        sigma0: sv[..l].to_vec(),
        spectrum: sv,
        gram: gram.clone(),
    }
}

/// Same transform computed from the square-root factor, with rank decided
/// on its singular values at `sqrt_rel_tol`.
pub fn algorithm1_from_factor(factor: &Matrix, sqrt_rel_tol: f64) -> Decomposition {
    let nz = factor.nrows();
    // The thin SVD of the wide factor yields all n_z left singular vectors
    // only when N ≥ n_z; pad otherwise.
    let padded;
    let f = if factor.ncols() >= nz {
        factor
    } else {
        padded = factor.clone().resize_horizontally(nz, 0.0);
        &padded
    };
    let (u, sv) = linalg::sorted_svd(f);
    let l = linalg::rank_from_singular_values(&sv, sqrt_rel_tol);
    let spectrum: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let g = factor * factor.transpose();
    Decomposition {
        t_z: u.transpose(),
        l,
        sigma0: spectrum[..l].to_vec(),
        spectrum,
        gram: (&g + g.transpose()) * 0.5,
    }
}

/// Decomposes a trajectory: Gram factor followed by the rank-revealing SVD.
pub fn decompose(traj: &FilteredTrajectory, sqrt_rel_tol: f64) -> Result<Decomposition> {
    Ok(algorithm1_from_factor(&gram_factor(traj)?, sqrt_rel_tol))
}

/// `(z_a, ż_a) = (T_a z, T_a ż)` on every sample, each `l × N`.
pub fn split_signals(traj: &FilteredTrajectory, dec: &Decomposition) -> Result<(Matrix, Matrix)> {
    if traj.n_z() != dec.n_z() {
        return Err(DecompositionError::Mismatch(traj.n_z(), dec.n_z()));
    }
    if dec.l == 0 {
        return Err(DecompositionError::NoExcitation);
    }
    let t_a = dec.t_a();
    Ok((&t_a * &traj.z, &t_a * &traj.z_dot))
}

/// Block structure of `(T_z A_e T_zᵀ, T_z B_e)` with respect to the split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub a_ba_norm: f64,
    pub b_b_norm: f64,
    /// `None` when the unexcited block is empty.
    pub a_b_abscissa: Option<f64>,
    pub a_e_norm: f64,
}

pub fn verify_decomposition(ext: &ExtendedSystem, dec: &Decomposition) -> DecompositionReport {
    let (l, nz) = (dec.l, dec.n_z());
    let at = &dec.t_z * &ext.a_e * dec.t_z.transpose();
    let bt = &dec.t_z * &ext.b_e;
    let nb = nz - l;
    let a_b_abscissa = (nb > 0)
        .then(|| linalg::spectral_abscissa(&at.view((l, l), (nb, nb)).into_owned()).unwrap_or(f64::NAN));
    DecompositionReport {
        a_ba_norm: at.view((l, 0), (nb, l)).norm(),
        b_b_norm: bt.rows(l, nb).norm(),
        a_b_abscissa,
        a_e_norm: ext.a_e.norm(),
    }
}

/// Angle (rad) by which the reachable subspace of `(A_e, B_e)` fails to
/// lie in the span of the excited directions.
pub fn reachability_angle(ext: &ExtendedSystem, dec: &Decomposition, rel_tol: f64) -> f64 {
    let reach = linalg::reachable_subspace(&ext.a_e, &ext.b_e, rel_tol);
    linalg::containment_angle(&reach, &dec.t_a().transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn traj_from(times: Vec<f64>, f: impl Fn(f64) -> Vec<f64>) -> FilteredTrajectory {
        let nz = f(0.0).len();
        let z = Matrix::from_fn(nz, times.len(), |i, k| f(times[k])[i]);
        FilteredTrajectory {
            z_dot: Matrix::zeros(nz, times.len()),
            times,
            z,
            n: 1,
        }
    }

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn zero_signal_has_zero_gram() {
        let tr = traj_from(grid(1.0, 10), |_| vec![0.0, 0.0]);
        assert_eq!(gram_matrix(&tr).unwrap(), Matrix::zeros(2, 2));
        assert_eq!(algorithm1(&gram_matrix(&tr).unwrap(), 1e-8).l, 0);
        assert_eq!(decompose(&tr, 1e-10).unwrap().l, 0);
    }

    #[test]
    fn sine_cosine_gram() {
        let tr = traj_from(grid(2.0 * PI, 20000), |t| vec![t.sin(), t.cos()]);
        let g = gram_matrix(&tr).unwrap();
        assert!((g - Matrix::identity(2, 2) * PI).amax() < 1e-4);
        let dec = algorithm1(&gram_matrix(&tr).unwrap(), 1e-8);
        assert_eq!(dec.l, 2);
        assert!((&dec.t_z * dec.t_z.transpose() - Matrix::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn exponential_rank_one() {
        let tr = traj_from(grid(1.0, 20000), |t| vec![(-t).exp(), 0.0]);
        let g = gram_matrix(&tr).unwrap();
        let want = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((g[(0, 0)] - want).abs() < 1e-6);
        assert_eq!(g[(1, 1)], 0.0);
        for dec in [algorithm1(&g, 1e-8), decompose(&tr, 1e-10).unwrap()] {
            assert_eq!(dec.l, 1);
            assert!((dec.t_z[(0, 0)].abs() - 1.0).abs() < 1e-12);
            assert!(dec.t_z[(0, 1)].abs() < 1e-12);
            let (za, _) = split_signals(&tr, &dec).unwrap();
            for (k, t) in tr.times.iter().enumerate() {
                assert!((za[(0, k)].abs() - (-t).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_rank_split_is_a_rotation() {
        let tr = traj_from(grid(3.0, 300), |t| vec![t.sin(), (2.0 * t).cos(), 1.0]);
        let dec = decompose(&tr, 1e-10).unwrap();
        assert_eq!(dec.l, 3);
        let (za, _) = split_signals(&tr, &dec).unwrap();
        for k in 0..tr.len() {
            assert!((za.column(k).norm() - tr.z.column(k).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn factor_and_gram_routes_agree() {
        let tr = traj_from(grid(3.0, 3000), |t| vec![t.sin(), (-3.0 * t).exp(), t.sin() + 2.0 * (-3.0 * t).exp()]);
        let a = algorithm1(&gram_matrix(&tr).unwrap(), 1e-8);
        let b = decompose(&tr, 1e-10).unwrap();
        assert_eq!(a.l, 2);
        assert_eq!(b.l, 2);
        for (x, y) in a.sigma0.iter().zip(&b.sigma0) {
            assert!((x - y).abs() < 1e-10 * a.sigma0[0]);
        }
        let d = &b.t_z * &b.gram * b.t_z.transpose();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j && i < b.l { b.sigma0[i] } else { 0.0 };
                assert!((d[(i, j)] - want).abs() <= 1e-8 * b.sigma0[0]);
            }
        }
    }

    #[test]
    fn empty_excitation_rejected_by_split() {
        let tr = traj_from(grid(1.0, 10), |_| vec![0.0]);
        let dec = decompose(&tr, 1e-10).unwrap();
        assert!(matches!(split_signals(&tr, &dec), Err(DecompositionError::NoExcitation)));
        assert!(matches!(
            gram_matrix(&traj_from(vec![0.0], |_| vec![1.0])),
            Err(DecompositionError::TooShort)
        ));
    }

    #[test]
    fn json_shape() {
        let tr = traj_from(grid(1.0, 100), |t| vec![t, 1.0]);
        let v = decompose(&tr, 1e-10).unwrap().to_json();
        assert_eq!(v["l"], 2);
        assert_eq!(v["T_z"].as_array().unwrap().len(), 2);
        assert_eq!(v["sigma0"].as_array().unwrap().len(), 2);
    }
}
