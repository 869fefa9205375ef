//! Kreisselmeier filter bank and offline post-processing of datasets.
//!
//! The filter state `M ∈ R^{n×μ}` (with `μ = (p+m)n`) obeys
//! `Ṁ = F·M + [yᵀ⊗Iₙ  uᵀ⊗Iₙ]`; its vectorization `ξ̂ = vec(M)` obeys
//! `ξ̂' = F_ξ ξ̂ + B_ξ u + L_ξ y`. Post-processing runs the filter together
//! with the auxiliary exponentials `χ' = Λχ`, `χ(0) = 1`, and emits the
//! composite signal `z = (χ, vec M)` along with its right-hand side `ż`.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kron, vec, Matrix};
use crate::simulation::{rk4_step, Dataset, SimulationError};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("filter matrix must be diagonal")]
    NotDiagonal,
    #[error("filter eigenvalues must be negative, got {0}")]
    NotHurwitz(f64),
    #[error("filter eigenvalues must be distinct, {0} is repeated")]
    Repeated(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset times must be strictly increasing (index {0})")]
    NonIncreasingTimes(usize),
    #[error("integration step {step} does not divide sample spacing {spacing}")]
    StepMismatch { step: f64, spacing: f64 },
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FilterError>;

/// Filter parameters plus the vectorized matrices `(F_ξ, B_ξ, L_ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub mu: usize,
    pub n_xi: usize,
    pub f: Matrix,
    pub f_xi: Matrix,
    pub b_xi: Matrix,
    pub l_xi: Matrix,
    lambda: Vec<f64>,
}

/// Validates `f` (diagonal, negative, distinct) and builds the bank.
pub fn build_filter(n: usize, m: usize, p: usize, f: &Matrix) -> Result<FilterBank> {
    if n == 0 || m == 0 || p == 0 {
        return Err(FilterError::Dimension("n, m, p must be positive".into()));
    }
    if f.nrows() != n || f.ncols() != n {
        return Err(FilterError::Dimension(format!(
            "F is {}x{}, expected {n}x{n}",
            f.nrows(),
            f.ncols()
        )));
    }
    if !crate::linalg::is_diagonal(f) {
        return Err(FilterError::NotDiagonal);
    }
    let lambda: Vec<f64> = f.diagonal().iter().copied().collect();
    for (i, &l) in lambda.iter().enumerate() {
        if !(l < 0.0) {
            return Err(FilterError::NotHurwitz(l));
        }
        if lambda[..i].contains(&l) {
            return Err(FilterError::Repeated(l));
        }
    }

    let mu = (p + m) * n;
    let n_xi = n * n * (p + m);
    let f_xi = kron(&Matrix::identity(mu, mu), f);
    let vec_i = Matrix::from_column_slice(n * n, 1, vec(&Matrix::identity(n, n)).as_slice());
    let mut b_xi = Matrix::zeros(n_xi, m);
    b_xi.view_mut((p * n * n, 0), (m * n * n, m))
        .copy_from(&kron(&Matrix::identity(m, m), &vec_i));
    let mut l_xi = Matrix::zeros(n_xi, p);
    l_xi.view_mut((0, 0), (p * n * n, p))
        .copy_from(&kron(&Matrix::identity(p, p), &vec_i));

    Ok(FilterBank {
        n,
        m,
        p,
        mu,
        n_xi,
        f: f.clone(),
        f_xi,
        b_xi,
        l_xi,
        lambda,
    })
}

impl FilterBank {
    /// Dimension of the composite signal `z = (χ, vec M)`.
    pub fn n_z(&self) -> usize {
        self.n + self.n_xi
    }

    /// Diagonal of `F` (equal to `Λ` under the diagonal convention).
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `ξ̂' = F_ξ ξ̂ + B_ξ u + L_ξ y` by dense products.
    pub fn vectorized_rhs(&self, xi: &DVector<f64>, u: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        &self.f_xi * xi + &self.b_xi * u + &self.l_xi * y
    }

    /// Structured evaluation of the vectorized filter, `O(n·μ)`.
    ///
    /// Writes into `out` (length `n_xi`). Off-diagonal entries of each
    /// `n×n` block of `M` receive no input.
    pub fn xi_rhs_into(&self, xi: &[f64], u: &[f64], y: &[f64], out: &mut [f64]) {
        let n = self.n;
        for col in 0..self.mu {
            let k = col / n;
            let j = col % n;
            let input = if k < self.p { y[k] } else { u[k - self.p] };
            let base = col * n;
            for i in 0..n {
                out[base + i] = self.lambda[i] * xi[base + i];
            }
            out[base + j] += input;
        }
    }

    /// Right-hand side of the composite signal `z = (χ, vec M)`.
    pub fn composite_rhs(&self, z: &[f64], u: &[f64], y: &[f64]) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(self.n_z());
        for i in 0..n {
            out[i] = self.lambda[i] * z[i];
        }
        self.xi_rhs_into(&z[n..], u, y, &mut out.as_mut_slice()[n..]);
        out
    }

    /// Initial composite state: `χ(0) = 1`, `vec M(0) = 0`.
    pub fn initial_z(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.n_z());
        z.rows_mut(0, self.n).fill(1.0);
        z
    }
}

/// `F·M + [yᵀ⊗Iₙ  uᵀ⊗Iₙ]` in matrix form.
pub fn filter_rhs(
    bank: &FilterBank,
    m_state: &Matrix,
    u: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<Matrix> {
    let n = bank.n;
    if m_state.nrows() != n || m_state.ncols() != bank.mu || u.len() != bank.m || y.len() != bank.p {
        return Err(FilterError::Dimension(format!(
            "M {}x{}, u {}, y {} for (n,m,p)=({},{},{})",
            m_state.nrows(),
            m_state.ncols(),
            u.len(),
            y.len(),
            n,
            bank.m,
            bank.p
        )));
    }
    let id = Matrix::identity(n, n);
    let yt = Matrix::from_row_slice(1, bank.p, y.as_slice());
    let ut = Matrix::from_row_slice(1, bank.m, u.as_slice());
    let mut forcing = Matrix::zeros(n, bank.mu);
    forcing
        .columns_mut(0, bank.p * n)
        .copy_from(&kron(&yt, &id));
    forcing
        .columns_mut(bank.p * n, bank.m * n)
        .copy_from(&kron(&ut, &id));
    Ok(&bank.f * m_state + forcing)
}

/// `Λ·χ` for a diagonal `Λ`.
pub fn chi_rhs(lambda: &Matrix, chi: &DVector<f64>) -> Result<DVector<f64>> {
    if lambda.nrows() != lambda.ncols() || lambda.nrows() != chi.len() {
        return Err(FilterError::Dimension(format!(
            "Λ is {}x{}, χ has length {}",
            lambda.nrows(),
            lambda.ncols(),
            chi.len()
        )));
    }
    if !crate::linalg::is_diagonal(lambda) {
        return Err(FilterError::NotDiagonal);
    }
    Ok(lambda * chi)
}

/// How `u(t)`, `y(t)` are reconstructed between dataset samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    /// Piecewise-constant hold of the left sample.
    ZeroOrderHold,
    /// Cubic Lagrange interpolation through the four nearest samples.
    #[default]
    Cubic,
}

/// Composite filter signal sampled on the dataset grid.
#[derive(Debug, Clone)]
pub struct FilteredTrajectory {
    pub times: Vec<f64>,
    /// `n_z × N`, one column per time.
    pub z: Matrix,
    /// Analytic right-hand side at each time, `n_z × N`.
    pub z_dot: Matrix,
    pub n: usize,
}

impl FilteredTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_z(&self) -> usize {
        self.z.nrows()
    }

    /// CSV with columns `t, z_1..z_{n_z}, zdot_1..zdot_{n_z}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let nz = self.n_z();
        let mut header = vec!["t".to_string()];
        header.extend((1..=nz).map(|i| format!("z_{i}")));
        header.extend((1..=nz).map(|i| format!("zdot_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.z.column(k).iter().map(|v| v.to_string()));
            row.extend(self.z_dot.column(k).iter().map(|v| v.to_string()));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Lagrange weights for evaluating at `t` through `nodes`.
fn lagrange_weights(nodes: &[f64], t: f64) -> [f64; 4] {
    let mut w = [0.0; 4];
    for (j, &tj) in nodes.iter().enumerate() {
        let mut l = 1.0;
        for (q, &tq) in nodes.iter().enumerate() {
            if q != j {
                l *= (t - tq) / (tj - tq);
            }
        }
        w[j] = l;
    }
    w
}

struct Sampler<'a> {
    data: &'a Dataset,
    mode: Reconstruction,
}

impl Sampler<'_> {
    /// Signals at `t` inside interval `k` (`times[k] ≤ t ≤ times[k+1]`).
    fn at(&self, k: usize, t: f64, right_edge: bool) -> (DVector<f64>, DVector<f64>) {
        let d = self.data;
        match self.mode {
            Reconstruction::ZeroOrderHold => {
                let _ = right_edge;
                (d.u.column(k).into_owned(), d.y.column(k).into_owned())
            }
            Reconstruction::Cubic => {
                let n = d.times.len();
                let width = n.min(4);
                let start = k.saturating_sub(1).min(n - width);
                let nodes = &d.times[start..start + width];
                let w = lagrange_weights(nodes, t);
                let mut u = DVector::zeros(d.u.nrows());
                let mut y = DVector::zeros(d.y.nrows());
                for j in 0..width {
                    u += d.u.column(start + j) * w[j];
                    y += d.y.column(start + j) * w[j];
                }
                (u, y)
            }
        }
    }
}

/// Post-processes a dataset with the default (cubic) reconstruction.
pub fn postprocess(dataset: &Dataset, bank: &FilterBank, step: f64) -> Result<FilteredTrajectory> {
    postprocess_with(dataset, bank, step, Reconstruction::default())
}

/// Integrates the filter and `χ` over the dataset with fixed-step RK4 of
/// size `step`, which must divide every sample spacing.
pub fn postprocess_with(
    dataset: &Dataset,
    bank: &FilterBank,
    step: f64,
    mode: Reconstruction,
) -> Result<FilteredTrajectory> {
    let n_samples = dataset.times.len();
    if n_samples == 0 {
        return Err(FilterError::EmptyDataset);
    }
    if dataset.u.nrows() != bank.m || dataset.y.nrows() != bank.p {
        return Err(FilterError::Dimension(format!(
            "dataset has m={}, p={}; filter expects m={}, p={}",
            dataset.u.nrows(),
            dataset.y.nrows(),
            bank.m,
            bank.p
        )));
    }
    if !(step > 0.0) {
        return Err(FilterError::StepMismatch { step, spacing: 0.0 });
    }
    for k in 1..n_samples {
        if !(dataset.times[k] > dataset.times[k - 1]) {
            return Err(FilterError::NonIncreasingTimes(k));
        }
    }

    let nz = bank.n_z();
    let mut z_out = Matrix::zeros(nz, n_samples);
    let mut zd_out = Matrix::zeros(nz, n_samples);
    let sampler = Sampler {
        data: dataset,
        mode,
    };

    let mut z = bank.initial_z();
    let record = |k: usize, z: &DVector<f64>, z_out: &mut Matrix, zd_out: &mut Matrix| {
        let u = dataset.u.column(k);
        let y = dataset.y.column(k);
        let zd = bank.composite_rhs(z.as_slice(), u.as_slice(), y.as_slice());
        z_out.set_column(k, z);
        zd_out.set_column(k, &zd);
    };
    record(0, &z, &mut z_out, &mut zd_out);

    for k in 0..n_samples - 1 {
        let (t0, t1) = (dataset.times[k], dataset.times[k + 1]);
        let spacing = t1 - t0;
        let substeps = (spacing / step).round().max(1.0);
        if ((substeps * step) - spacing).abs() > 1e-9 * spacing {
            return Err(FilterError::StepMismatch { step, spacing });
        }
        let substeps = substeps as usize;
        let h = spacing / substeps as f64;
        for j in 0..substeps {
            let ts = t0 + j as f64 * h;
            let rhs = |t: f64, state: &DVector<f64>| {
                let edge = t >= t1 - 1e-12 * spacing;
                let (u, y) = sampler.at(k, t, edge);
                bank.composite_rhs(state.as_slice(), u.as_slice(), y.as_slice())
            };
            z = rk4_step(rhs, &z, ts, h)?;
        }
        record(k + 1, &z, &mut z_out, &mut zd_out);
    }

    Ok(FilteredTrajectory {
        times: dataset.times.clone(),
        z: z_out,
        z_dot: zd_out,
        n: bank.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unvec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn scalar_bank_matches_closed_form() {
        let bank = build_filter(1, 1, 1, &diag(&[-2.0])).unwrap();
        assert_eq!(bank.f_xi, diag(&[-2.0, -2.0]));
        assert_eq!(bank.b_xi.as_slice(), &[0.0, 1.0]);
        assert_eq!(bank.l_xi.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn example1_dimensions() {
        let bank = build_filter(3, 2, 2, &diag(&[-20., -36., -45.])).unwrap();
        assert_eq!(bank.n_xi, 36);
        assert_eq!(bank.mu, 12);
        assert_eq!(bank.n_z(), 39);
    }

    #[test]
    fn rejects_bad_filters() {
        assert!(matches!(
            build_filter(2, 1, 1, &diag(&[-1.0, -1.0])),
            Err(FilterError::Repeated(_))
        ));
        assert!(matches!(
            build_filter(2, 1, 1, &diag(&[-1.0, 0.0])),
            Err(FilterError::NotHurwitz(_))
        ));
        let mut f = diag(&[-1.0, -2.0]);
        f[(0, 1)] = 0.5;
        assert!(matches!(
            build_filter(2, 1, 1, &f),
            Err(FilterError::NotDiagonal)
        ));
    }

    #[test]
    fn injection_matrices_have_identity_pattern() {
        for (n, m, p) in [(1, 1, 1), (2, 1, 2), (3, 2, 2), (2, 3, 1)] {
            let f = diag(&(1..=n).map(|k| -(k as f64)).collect::<Vec<_>>());
            let bank = build_filter(n, m, p, &f).unwrap();
            for mat in [&bank.b_xi, &bank.l_xi] {
                assert!(mat.iter().all(|&v| v == 0.0 || v == 1.0));
                for col in mat.column_iter() {
                    assert_eq!(col.sum(), n as f64);
                }
                for row in mat.row_iter() {
                    assert!(row.sum() <= 1.0);
                }
            }
            assert_eq!(bank.b_xi.iter().filter(|&&v| v == 1.0).count(), m * n);
            assert_eq!(bank.l_xi.iter().filter(|&&v| v == 1.0).count(), p * n);
            assert!(bank.b_xi.rows(0, p * n * n).iter().all(|&v| v == 0.0));
            assert!(bank.l_xi.rows(p * n * n, m * n * n).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn matrix_and_vectorized_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bank = build_filter(3, 2, 2, &diag(&[-20., -36., -45.])).unwrap();
        for _ in 0..50 {
            let mm = Matrix::from_fn(3, bank.mu, |_, _| rng.sample(StandardNormal));
            let u = DVector::from_fn(2, |_, _| rng.sample(StandardNormal));
            let y = DVector::from_fn(2, |_, _| rng.sample(StandardNormal));
            let matrix_form = vec(&filter_rhs(&bank, &mm, &u, &y).unwrap());
            let dense = bank.vectorized_rhs(&vec(&mm), &u, &y);
            let mut structured = vec![0.0; bank.n_xi];
            bank.xi_rhs_into(vec(&mm).as_slice(), u.as_slice(), y.as_slice(), &mut structured);
            assert!((&matrix_form - &dense).amax() <= 1e-13);
            assert!((DVector::from_vec(structured) - dense).amax() <= 1e-13);
        }
    }

    #[test]
    fn filter_rhs_scalar_kronecker() {
        let bank = build_filter(1, 1, 1, &diag(&[-2.0])).unwrap();
        let out = filter_rhs(
            &bank,
            &Matrix::zeros(1, 2),
            &DVector::from_vec(vec![2.0]),
            &DVector::from_vec(vec![3.0]),
        )
        .unwrap();
        assert_eq!(out.as_slice(), &[3.0, 2.0]);
        let zero = filter_rhs(&bank, &Matrix::zeros(1, 2), &DVector::zeros(1), &DVector::zeros(1)).unwrap();
        assert_eq!(zero, Matrix::zeros(1, 2));
        assert!(filter_rhs(&bank, &Matrix::zeros(2, 2), &DVector::zeros(1), &DVector::zeros(1)).is_err());
    }

    #[test]
    fn chi_rhs_at_ones_is_diagonal() {
        let lam = diag(&[-20., -36., -45.]);
        let out = chi_rhs(&lam, &DVector::from_element(3, 1.0)).unwrap();
        assert_eq!(out.as_slice(), &[-20., -36., -45.]);
        assert!(chi_rhs(&lam, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn chi_integration_matches_exponential() {
        let lam = [-2.0, -3.5, -5.0];
        let mut chi = DVector::from_element(3, 1.0);
        let h = 1e-3;
        for k in 0..1000 {
            chi = rk4_step(
                |_, c: &DVector<f64>| chi_rhs(&diag(&lam), c).unwrap(),
                &chi,
                k as f64 * h,
                h,
            )
            .unwrap();
        }
        for (c, l) in chi.iter().zip(lam) {
            assert!((c - l.exp()).abs() < 1e-9);
        }
    }

    fn dataset(times: Vec<f64>, u: impl Fn(f64) -> Vec<f64>, y: impl Fn(f64) -> Vec<f64>, m: usize, p: usize) -> Dataset {
        let n = times.len();
        let um = Matrix::from_fn(m, n, |i, k| u(times[k])[i]);
        let ym = Matrix::from_fn(p, n, |i, k| y(times[k])[i]);
        Dataset::new(times, um, ym).unwrap()
    }

    #[test]
    fn unforced_filter_stays_at_rest() {
        let bank = build_filter(2, 1, 1, &diag(&[-3.0, -7.0])).unwrap();
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let ds = dataset(times, |_| vec![0.0], |_| vec![0.0], 1, 1);
        let traj = postprocess(&ds, &bank, 1e-3).unwrap();
        assert!(traj.z.rows(2, bank.n_xi).iter().all(|&v| v == 0.0));
        assert!(traj.z_dot.rows(2, bank.n_xi).iter().all(|&v| v == 0.0));
        assert_eq!(traj.z.column(0).as_slice(), &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        for k in 0..traj.len() {
            assert!(traj.z[(0, k)] > 0.0 && traj.z[(1, k)] > 0.0);
        }
    }

    #[test]
    fn constant_input_reaches_steady_state() {
        let lam = -4.0;
        let ubar = 1.5;
        let bank = build_filter(1, 1, 1, &diag(&[lam])).unwrap();
        let t_end = 2.0;
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.01).collect();
        let ds = dataset(times, |_| vec![ubar], |_| vec![0.0], 1, 1);
        let traj = postprocess(&ds, &bank, 1e-3).unwrap();
        assert!(t_end > 5.0 / lam.abs());
        let steady = -ubar / lam;
        let last = traj.z[(2, traj.len() - 1)];
        assert!((last - steady).abs() / steady < 0.01);
    }

    #[test]
    fn z_dot_is_consistent_with_central_differences() {
        let bank = build_filter(2, 1, 1, &diag(&[-3.0, -5.0])).unwrap();
        let h = 1e-3;
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * h).collect();
        let ds = dataset(times, |t| vec![(3.0 * t).sin()], |t| vec![(1.3 * t).cos()], 1, 1);
        let traj = postprocess(&ds, &bank, h / 4.0).unwrap();
        let scale = traj.z_dot.amax();
        for k in 1..traj.len() - 1 {
            let fd = (traj.z.column(k + 1) - traj.z.column(k - 1)) / (2.0 * h);
            let err = (fd - traj.z_dot.column(k)).amax();
            assert!(err < 1e-4 * scale, "k={k} err={err}");
        }
    }

    #[test]
    fn matrix_and_vector_filters_integrate_identically() {
        let bank = build_filter(2, 1, 2, &diag(&[-3.0, -8.0])).unwrap();
        let h = 1e-3;
        let u = |t: f64| DVector::from_vec(vec![(2.0 * t).sin()]);
        let y = |t: f64| DVector::from_vec(vec![(t).cos(), 0.5 * t]);
        let mut mm = Matrix::zeros(2, bank.mu);
        let mut xi = DVector::zeros(bank.n_xi);
        for k in 0..500 {
            let t = k as f64 * h;
            let mvec = rk4_step(
                |s, v: &DVector<f64>| {
                    let mat = unvec(v, 2, bank.mu).unwrap();
                    vec(&filter_rhs(&bank, &mat, &u(s), &y(s)).unwrap())
                },
                &vec(&mm),
                t,
                h,
            )
            .unwrap();
            mm = unvec(&mvec, 2, bank.mu).unwrap();
            xi = rk4_step(|s, v: &DVector<f64>| bank.vectorized_rhs(v, &u(s), &y(s)), &xi, t, h).unwrap();
        }
        assert!((vec(&mm) - xi).amax() < 1e-12);
    }

    #[test]
    fn postprocess_error_paths() {
        let bank = build_filter(1, 1, 1, &diag(&[-1.0])).unwrap();
        let empty = Dataset {
            times: vec![],
            u: Matrix::zeros(1, 0),
            y: Matrix::zeros(1, 0),
        };
        assert!(matches!(postprocess(&empty, &bank, 0.1), Err(FilterError::EmptyDataset)));
        let bad = Dataset {
            times: vec![0.0, 0.2, 0.1],
            u: Matrix::zeros(1, 3),
            y: Matrix::zeros(1, 3),
        };
        assert!(matches!(
            postprocess(&bad, &bank, 0.1),
            Err(FilterError::NonIncreasingTimes(2))
        ));
        let ok = dataset(vec![0.0, 0.1, 0.2], |_| vec![0.0], |_| vec![0.0], 1, 1);
        assert!(matches!(
            postprocess(&ok, &bank, 0.03),
            Err(FilterError::StepMismatch { .. })
        ));
    }

    #[test]
    fn cubic_reconstruction_is_exact_on_cubics() {
        let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.5).collect();
        let poly = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 0.25 * t * t * t;
        let ds = dataset(times, |t| vec![poly(t)], |t| vec![2.0 * poly(t)], 1, 1);
        let s = Sampler {
            data: &ds,
            mode: Reconstruction::Cubic,
        };
        for k in 0..5 {
            let t = ds.times[k] + 0.37 * 0.5;
            let (u, y) = s.at(k, t, false);
            assert!((u[0] - poly(t)).abs() < 1e-12);
            assert!((y[0] - 2.0 * poly(t)).abs() < 1e-12);
        }
    }
}
