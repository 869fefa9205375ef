//! End-to-end controller synthesis from a single input/output record.
//!
//! Pipeline: filter the data, decompose the filtered signal, check
//! excitation, sample data batches, solve the LMI, and assemble the gain
//! `K_e = [U Q (Z_a Q)⁻¹  0] T_z` acting on the filter state.

use std::fmt;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{self, Decomposition, DEFAULT_SQRT_RANK_TOL};
use crate::kfilter::{self, build_filter, FilterBank, FilterError, FilteredTrajectory, Reconstruction};
use crate::linalg::{self, Matrix, Spectrum};
use crate::lmi::{self, LmiOptions, LmiSolution, StabilizationLmi};
use crate::plant::{ContinuousLtiSystem, ExtendedSystem};
use crate::simulation::Dataset;

/// Filter eigenvalues used by the reference experiment for `n = 3`.
pub const REFERENCE_FILTER: [f64; 3] = [-20.0, -36.0, -40.0];
/// Default sampling period of the data batches (s).
pub const DEFAULT_PERIOD: f64 = 0.01;
/// Largest integration step used when filtering a dataset.
pub const MAX_FILTER_STEP: f64 = 1e-4;

/// Default diagonal filter for state dimension `n`: the reference values
/// for `n = 3`, otherwise log-uniformly spread over `[-45, -20]`.
pub fn default_filter_eigenvalues(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![-20.0],
        3 => REFERENCE_FILTER.to_vec(),
        _ => (0..n)
            .map(|k| -20.0 * (45.0f64 / 20.0).powf(k as f64 / (n - 1) as f64))
            .collect(),
    }
}

pub fn diagonal(values: &[f64]) -> Matrix {
    Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

/// Pipeline stage, used to tag failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Filter,
    Postprocess,
    Decomposition,
    SplitSignals,
    CheckExcitation,
    BuildBatches,
    Lmi,
    ComputeGain,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Filter => "filter",
            Stage::Postprocess => "postprocess",
            Stage::Decomposition => "decomposition",
            Stage::SplitSignals => "split_signals",
            Stage::CheckExcitation => "check_excitation",
            Stage::BuildBatches => "build_batches",
            Stage::Lmi => "lmi",
            Stage::ComputeGain => "compute_gain",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct SynthesisError {
    pub stage: Stage,
    pub message: String,
    /// Partial report up to the failing stage.
    pub report: Box<RunReport>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BatchError {
    #[error("sampling period {0} must be positive")]
    BadPeriod(f64),
    #[error("data batches reach rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },
    #[error("signals are not aligned: {0}")]
    Misaligned(String),
}

#[derive(Debug, Error)]
pub enum GainError {
    #[error("Z_a Q is numerically singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Options for [`synthesize`]. Only `n` is required.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SynthesisConfig {
    pub n: usize,
    /// Diagonal of `F`; defaults to [`default_filter_eigenvalues`].
    pub filter_eigenvalues: Option<Vec<f64>>,
    /// Filter integration step; defaults to the largest divisor of the
    /// sample spacing not exceeding [`MAX_FILTER_STEP`].
    pub filter_step: Option<f64>,
    pub reconstruction: Reconstruction,
    /// Relative rank threshold on the singular values of the Gram factor.
    pub rank_tol: f64,
    /// Threshold on the eigenvalue ratio of the normalized excitation Gram.
    pub excitation_tol: f64,
    /// Relative rank threshold for the sampled data batches.
    pub batch_rank_tol: f64,
    pub period: f64,
    /// Strictness margin; defaults to `1e-6 · max(‖Z_a‖, ‖Ż_a‖)`.
    pub epsilon: Option<f64>,
    pub lmi: LmiOptions,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            n: 1,
            filter_eigenvalues: None,
            filter_step: None,
            reconstruction: Reconstruction::default(),
            rank_tol: DEFAULT_SQRT_RANK_TOL,
            excitation_tol: 1e-10,
            batch_rank_tol: 1e-8,
            period: DEFAULT_PERIOD,
            epsilon: None,
            lmi: LmiOptions::default(),
        }
    }
}

impl SynthesisConfig {
    pub fn for_order(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn filter_matrix(&self) -> Matrix {
        let ev = self
            .filter_eigenvalues
            .clone()
            .unwrap_or_else(|| default_filter_eigenvalues(self.n));
        diagonal(&ev)
    }
}

/// Sampled batches `(Z_a, Ż_a, U)` at instants `sample_times`.
#[derive(Debug, Clone)]
pub struct DataBatches {
    pub z_a: Matrix,
    pub z_a_dot: Matrix,
    pub u: Matrix,
    pub sample_times: Vec<f64>,
    /// Dataset indices of the samples.
    pub indices: Vec<usize>,
    /// Number of samples on the periodic grid before augmentation.
    pub base_samples: usize,
    /// Singular values of the row-normalized `[Z_a; U]`.
    pub singular_values: Vec<f64>,
    /// Row `i` of `z_a` was multiplied by `scale[i]` before sampling.
    pub scale: Vec<f64>,
}

impl DataBatches {
    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }
}

/// `u = K_e [0; vec(M)]` together with the filter it runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub f: Matrix,
    /// `m × n_z`
    pub k_e: Matrix,
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

#[derive(Serialize, Deserialize)]
struct ControllerJson {
    #[serde(rename = "F")]
    f: Vec<Vec<f64>>,
    #[serde(rename = "K_e")]
    k_e: Vec<Vec<f64>>,
    n: usize,
    m: usize,
    p: usize,
}

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("invalid controller: {0}")]
    Invalid(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Controller {
    pub fn new(f: Matrix, k_e: Matrix, n: usize, m: usize, p: usize) -> Result<Self, ControllerError> {
        let c = Self { f, k_e, n, m, p };
        let bank = c.filter_bank()?;
        if c.k_e.shape() != (m, bank.n_z()) {
            return Err(ControllerError::Invalid(format!(
                "K_e is {}x{}, expected {}x{}",
                c.k_e.nrows(),
                c.k_e.ncols(),
                m,
                bank.n_z()
            )));
        }
        Ok(c)
    }

    /// The zero-gain controller on filter `f`.
    pub fn zero(sys: &ContinuousLtiSystem, f: &Matrix) -> Result<Self, ControllerError> {
        let (n, m, p) = sys.dims();
        Self::new(f.clone(), Matrix::zeros(m, n + n * n * (p + m)), n, m, p)
    }

    pub fn filter_bank(&self) -> Result<FilterBank, FilterError> {
        build_filter(self.n, self.m, self.p, &self.f)
    }

    pub fn n_z(&self) -> usize {
        self.k_e.ncols()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ControllerJson {
            f: linalg::to_rows(&self.f),
            k_e: linalg::to_rows(&self.k_e),
            n: self.n,
            m: self.m,
            p: self.p,
        })
        .expect("plain numeric data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ControllerError> {
        let raw: ControllerJson = serde_json::from_str(text)?;
        let conv = |r: &[Vec<f64>]| linalg::from_rows(r).map_err(|e| ControllerError::Invalid(e.to_string()));
        Self::new(conv(&raw.f)?, conv(&raw.k_e)?, raw.n, raw.m, raw.p)
    }

    pub fn load(path: &Path) -> Result<Self, ControllerError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Residuals of the accepted LMI solution.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct LmiReport {
    pub epsilon: f64,
    pub pd_residual: f64,
    pub nd_residual: f64,
    pub symmetry_defect: f64,
    pub margin: f64,
    pub decay_rate: f64,
    pub input_rank: usize,
    pub newton_steps: usize,
}

/// Machine-readable audit trail of a synthesis run.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub n_z: usize,
    pub filter_eigenvalues: Vec<f64>,
    pub filter_step: f64,
    pub dataset_samples: usize,
    /// Number of excited directions.
    pub l: usize,
    pub sigma0: Vec<f64>,
    /// Singular values of the Gram square-root factor (all of them).
    pub factor_singular_values: Vec<f64>,
    pub excitation_ratio: f64,
    /// Number of batch samples.
    #[serde(rename = "N")]
    pub n_samples: usize,
    pub base_samples: usize,
    pub batch_singular_values: Vec<f64>,
    pub lmi: Option<LmiReport>,
    pub za_q_condition: f64,
    pub gain_norm: f64,
    pub warnings: Vec<String>,
    pub failed_stage: Option<Stage>,
}

/// Everything produced by a successful run.
#[derive(Debug, Clone)]
pub struct SynthesisRun {
    pub controller: Controller,
    pub report: RunReport,
    pub trajectory: FilteredTrajectory,
    pub decomposition: Decomposition,
    pub batches: DataBatches,
    pub lmi: LmiSolution,
}

/// Scales every row of `w` to unit energy under `weights` (trapezoid when
/// given, plain sum otherwise). Zero rows stay zero.
fn normalize_rows(w: &Matrix, weights: Option<&[f64]>) -> Matrix {
    let mut out = w.clone();
    for mut row in out.row_iter_mut() {
        let e: f64 = match weights {
            Some(wt) => row.iter().zip(wt).map(|(v, q)| v * v * q).sum(),
            None => row.iter().map(|v| v * v).sum(),
        };
        if e > 0.0 {
            row /= e.sqrt();
        }
    }
    out
}

fn stack(a: &Matrix, b: &Matrix) -> Matrix {
    let mut w = Matrix::zeros(a.nrows() + b.nrows(), a.ncols());
    w.rows_mut(0, a.nrows()).copy_from(a);
    w.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    w
}

/// Ratio of smallest to largest eigenvalue of `∫ w wᵀ dt` for the
/// row-normalized `w = [z_a; u]`.
pub fn excitation_ratio(z_a: &Matrix, u: &Matrix, times: &[f64]) -> f64 {
    if z_a.ncols() != times.len() || u.ncols() != times.len() || times.len() < 2 {
        return 0.0;
    }
    let wts = decomposition::trapezoid_weights(times);
    let mut w = normalize_rows(&stack(z_a, u), Some(&wts));
    for (k, mut col) in w.column_iter_mut().enumerate() {
        col *= wts[k].sqrt();
    }
    let sv = linalg::singular_values(&w);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 && sv.len() == z_a.nrows() + u.nrows() => (lo / hi).powi(2),
        _ => 0.0,
    }
}

/// Interval excitation of `[z_a; u]` over the record.
pub fn check_excitation(z_a: &Matrix, u: &Matrix, times: &[f64], tol: f64) -> bool {
    excitation_ratio(z_a, u, times) > tol
}

fn periodic_indices(times: &[f64], period: f64) -> Vec<usize> {
    let (t0, t_end) = (times[0], times[times.len() - 1]);
    let count = ((t_end - t0) / period + 1e-9).floor() as usize;
    let mut out: Vec<usize> = (0..=count)
        .map(|j| {
            let target = t0 + j as f64 * period;
            let k = times.partition_point(|&t| t < target);
            match k {
                0 => 0,
                k if k >= times.len() => times.len() - 1,
                k if (times[k] - target).abs() <= (target - times[k - 1]).abs() => k,
                k => k - 1,
            }
        })
        .collect();
    out.dedup();
    out
}

/// Samples the signals every `period`, then greedily adds instants until
/// the normalized `[Z_a; U]` has full row rank `l + m`.
pub fn build_batches(
    z_a: &Matrix,
    z_a_dot: &Matrix,
    u: &Matrix,
    times: &[f64],
    period: f64,
    rank_tol: f64,
) -> Result<DataBatches, BatchError> {
    if !(period > 0.0) {
        return Err(BatchError::BadPeriod(period));
    }
    let n = times.len();
    if n == 0 || z_a.ncols() != n || z_a_dot.shape() != z_a.shape() || u.ncols() != n {
        return Err(BatchError::Misaligned(format!(
            "{} times, z_a {}x{}, ż_a {}x{}, u {}x{}",
            n,
            z_a.nrows(),
            z_a.ncols(),
            z_a_dot.nrows(),
            z_a_dot.ncols(),
            u.nrows(),
            u.ncols()
        )));
    }
    let needed = z_a.nrows() + u.nrows();
    // Normalize with the full record so scaling does not depend on the
    // chosen instants.
    let full = normalize_rows(&stack(z_a, u), None);
    let mut idx = periodic_indices(times, period);
    let base = idx.len();
    let select = |idx: &[usize]| full.select_columns(idx.iter());

    let mut chosen = vec![false; n];
    for &k in &idx {
        chosen[k] = true;
    }
    loop {
        let w = select(&idx);
        let (uu, sv) = linalg::sorted_svd(&w);
        let rank = linalg::rank_from_singular_values(&sv, rank_tol);
        if rank >= needed {
            break;
        }
        // Directions the current batch misses, including absent ones when
        // there are fewer samples than rows.
        let missing = uu.columns(rank, uu.ncols() - rank).into_owned();
        let best = (0..n)
            .filter(|&k| !chosen[k])
            .map(|k| (k, (missing.transpose() * full.column(k)).norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((k, score)) if score > 0.0 => {
                chosen[k] = true;
                idx.push(k);
                idx.sort_unstable();
            }
            _ => return Err(BatchError::RankDeficient { rank, needed }),
        }
    }
    let singular_values = linalg::singular_values(&select(&idx));
    Ok(DataBatches {
        z_a: z_a.select_columns(idx.iter()),
        z_a_dot: z_a_dot.select_columns(idx.iter()),
        u: u.select_columns(idx.iter()),
        sample_times: idx.iter().map(|&k| times[k]).collect(),
        indices: idx,
        base_samples: base,
        singular_values,
        scale: vec![1.0; z_a.nrows()],
    })
}

/// `K_e = [U Q (Z_a Q)⁻¹ S  0] T_z` with `S = diag(scale)` undoing the
/// row scaling of the batches.
pub fn compute_gain(q: &Matrix, batches: &DataBatches, dec: &Decomposition) -> Result<Matrix, GainError> {
    let l = dec.l;
    if q.shape() != (batches.len(), l) || batches.z_a.nrows() != l {
        return Err(GainError::Dimension(format!(
            "Q is {}x{}, expected {}x{}",
            q.nrows(),
            q.ncols(),
            batches.len(),
            l
        )));
    }
    if batches.scale.len() != l {
        return Err(GainError::Dimension(format!("{} scale factors for l = {l}", batches.scale.len())));
    }
    let mut k = gain_from_q(q, &batches.z_a, &batches.u)?;
    for (j, s) in batches.scale.iter().enumerate() {
        k.column_mut(j).scale_mut(*s);
    }
    let mut padded = Matrix::zeros(k.nrows(), dec.n_z());
    padded.columns_mut(0, l).copy_from(&k);
    Ok(padded * &dec.t_z)
}

/// `K = U Q (Z_a Q)⁻¹` on the excited coordinates.
pub fn gain_from_q(q: &Matrix, z_a: &Matrix, u: &Matrix) -> Result<Matrix, GainError> {
    let zq = z_a * q;
    if !(linalg::condition_number(&zq) < 1e14) {
        return Err(GainError::Singular);
    }
    let inv = zq.try_inverse().ok_or(GainError::Singular)?;
    Ok(u * q * inv)
}

/// Spectrum of `A_e + B_e K_e`.
pub fn verify_closed_loop(controller: &Controller, ext: &ExtendedSystem) -> linalg::Result<Spectrum> {
    if controller.k_e.shape() != (ext.b_e.ncols(), ext.a_e.nrows()) {
        return Err(linalg::LinalgError::Dimension(format!(
            "K_e is {}x{}, B_e is {}x{}",
            controller.k_e.nrows(),
            controller.k_e.ncols(),
            ext.b_e.nrows(),
            ext.b_e.ncols()
        )));
    }
    linalg::eigvals(&(&ext.a_e + &ext.b_e * &controller.k_e))
}

/// State matrix of the physical interconnection in `(x, vec M)`.
pub fn interconnection_matrix(sys: &ContinuousLtiSystem, controller: &Controller) -> Result<Matrix, FilterError> {
    let bank = controller.filter_bank()?;
    let (n, n_xi) = (controller.n, bank.n_xi);
    let k_m = controller.k_e.columns(n, n_xi);
    let mut a = Matrix::zeros(n + n_xi, n + n_xi);
    a.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    a.view_mut((0, n), (n, n_xi)).copy_from(&(&sys.b * k_m));
    a.view_mut((n, 0), (n_xi, n)).copy_from(&(&bank.l_xi * &sys.c));
    a.view_mut((n, n), (n_xi, n_xi))
        .copy_from(&(&bank.f_xi + &bank.b_xi * k_m));
    Ok(a)
}

fn auto_filter_step(times: &[f64]) -> f64 {
    if times.len() < 2 {
        return MAX_FILTER_STEP;
    }
    let spacing = times[1] - times[0];
    let sub = (spacing / MAX_FILTER_STEP - 1e-9).ceil().max(1.0);
    spacing / sub
}

/// Runs the full data-driven pipeline on `dataset`.
pub fn synthesize(dataset: &Dataset, config: &SynthesisConfig) -> Result<SynthesisRun, SynthesisError> {
    let (n, m, p) = (config.n, dataset.m(), dataset.p());
    let f = config.filter_matrix();
    let mut report = RunReport {
        n,
        m,
        p,
        dataset_samples: dataset.len(),
        filter_eigenvalues: f.diagonal().iter().copied().collect(),
        ..RunReport::default()
    };
    macro_rules! fail {
        ($stage:expr, $msg:expr) => {{
            report.failed_stage = Some($stage);
            return Err(SynthesisError {
                stage: $stage,
                message: $msg.to_string(),
                report: Box::new(report),
            });
        }};
    }

    let bank = match build_filter(n, m, p, &f) {
        Ok(b) => b,
        Err(e) => fail!(Stage::Filter, e),
    };
    report.n_z = bank.n_z();
    let step = config.filter_step.unwrap_or_else(|| auto_filter_step(&dataset.times));
    report.filter_step = step;

    let traj = match kfilter::postprocess_with(dataset, &bank, step, config.reconstruction) {
        Ok(t) => t,
        Err(e) => fail!(Stage::Postprocess, e),
    };
    let dec = match decomposition::decompose(&traj, config.rank_tol) {
        Ok(d) => d,
        Err(e) => fail!(Stage::Decomposition, e),
    };
    report.l = dec.l;
    report.sigma0 = dec.sigma0.clone();
    report.factor_singular_values = dec.spectrum.iter().map(|s| s.sqrt()).collect();

    let (z_a, z_a_dot) = match decomposition::split_signals(&traj, &dec) {
        Ok(v) => v,
        Err(e) => fail!(Stage::SplitSignals, e),
    };
    if dec.l < n {
        report
            .warnings
            .push(format!("only {} excited directions, fewer than n = {n}", dec.l));
    }

    report.excitation_ratio = excitation_ratio(&z_a, &dataset.u, &dataset.times);
    if !(report.excitation_ratio > config.excitation_tol) {
        fail!(
            Stage::CheckExcitation,
            format!(
                "[z_a; u] not interval exciting (eigenvalue ratio {:.3e} ≤ {:.1e})",
                report.excitation_ratio, config.excitation_tol
            )
        );
    }

    // Whiten the excited coordinates: their energies span many decades and
    // the LMI needs Z_a well conditioned to hold its equality exactly.
    let wts = decomposition::trapezoid_weights(&dataset.times);
    let scale: Vec<f64> = z_a
        .row_iter()
        .map(|r| {
            let e: f64 = r.iter().zip(&wts).map(|(v, w)| v * v * w).sum();
            if e > 0.0 { 1.0 / e.sqrt() } else { 1.0 }
        })
        .collect();
    let d = Matrix::from_diagonal(&DVector::from_column_slice(&scale));
    let (z_w, z_w_dot) = (&d * &z_a, &d * &z_a_dot);
    let mut batches =
        match build_batches(&z_w, &z_w_dot, &dataset.u, &dataset.times, config.period, config.batch_rank_tol) {
            Ok(b) => b,
            Err(e) => fail!(Stage::BuildBatches, e),
        };
    batches.scale = scale;
    report.n_samples = batches.len();
    report.base_samples = batches.base_samples;
    report.batch_singular_values = batches.singular_values.clone();

    let mut problem = match StabilizationLmi::new(batches.z_a.clone(), batches.z_a_dot.clone()) {
        Ok(pr) => pr,
        Err(e) => fail!(Stage::Lmi, e),
    };
    if let Some(eps) = config.epsilon {
        problem.epsilon = eps;
    }
    problem.options = LmiOptions {
        max_input_rank: Some(config.lmi.max_input_rank.unwrap_or(m)),
        ..config.lmi
    };
    let sol = match lmi::solve(&problem) {
        Ok(s) => s,
        Err(e) => fail!(Stage::Lmi, e),
    };
    let stats = sol.stats.clone().unwrap_or(lmi::SolverStats {
        margin: f64::NAN,
        decay_rate: f64::NAN,
        input_rank: 0,
        newton_steps: 0,
    });
    report.lmi = Some(LmiReport {
        epsilon: sol.epsilon,
        pd_residual: sol.pd_residual,
        nd_residual: sol.nd_residual,
        symmetry_defect: sol.symmetry_defect,
        margin: stats.margin,
        decay_rate: stats.decay_rate,
        input_rank: stats.input_rank,
        newton_steps: stats.newton_steps,
    });
    if !sol.satisfies(1e-6) {
        fail!(Stage::Lmi, "returned Q violates the certified residual contract");
    }
    if stats.decay_rate < config.lmi.decay_rate {
        report
            .warnings
            .push(format!("decay-rate margin dropped to {}", stats.decay_rate));
    }

    report.za_q_condition = linalg::condition_number(&(&batches.z_a * &sol.q));
    if report.za_q_condition > 1e8 {
        report.warnings.push(format!(
            "Z_a Q is ill conditioned ({:.2e}); excitation may be marginal",
            report.za_q_condition
        ));
    }
    let k_e = match compute_gain(&sol.q, &batches, &dec) {
        Ok(k) => k,
        Err(e) => fail!(Stage::ComputeGain, e),
    };
    report.gain_norm = k_e.norm();
    let controller = match Controller::new(f, k_e, n, m, p) {
        Ok(c) => c,
        Err(e) => fail!(Stage::ComputeGain, e),
    };
    Ok(SynthesisRun {
        controller,
        report,
        trajectory: traj,
        decomposition: dec,
        batches,
        lmi: sol,
    })
}
