//! Fixed-step RK4 simulation: open-loop data generation under multisine
//! excitation, the joint plant/filter system, and the closed loop with an
//! output-feedback controller acting on the filter state.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kfilter::FilterBank;
use crate::linalg::Matrix;
use crate::plant::ContinuousLtiSystem;
use crate::synthesis::Controller;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("state became non-finite at t = {t}")]
    BlowUp { t: f64 },
    #[error("invalid simulation parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimulationError>;

/// Sampled input/output record `{u(t), y(t)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub times: Vec<f64>,
    /// `m × N`
    pub u: Matrix,
    /// `p × N`
    pub y: Matrix,
}

impl Dataset {
    /// Builds a validated dataset.
    pub fn new(times: Vec<f64>, u: Matrix, y: Matrix) -> Result<Self> {
        let ds = Self { times, u, y };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    pub fn p(&self) -> usize {
        self.y.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.u.ncols() != n || self.y.ncols() != n {
            return Err(SimulationError::InvalidDataset(format!(
                "{} times but u has {} and y has {} columns",
                n,
                self.u.ncols(),
                self.y.ncols()
            )));
        }
        if let Some(&t0) = self.times.first() {
            if !(t0 >= 0.0) {
                return Err(SimulationError::InvalidDataset(format!("first time {t0} is negative")));
            }
        }
        if let Some(k) = (1..n).find(|&k| !(self.times[k] > self.times[k - 1])) {
            return Err(SimulationError::InvalidDataset(format!(
                "times not strictly increasing at index {k}"
            )));
        }
        if !self.u.iter().chain(self.y.iter()).all(|v| v.is_finite()) {
            return Err(SimulationError::InvalidDataset("non-finite sample".into()));
        }
        Ok(())
    }

    /// CSV with header `t,u_1..u_m,y_1..y_p`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.m()).map(|i| format!("u_{i}")));
        header.extend((1..=self.p()).map(|i| format!("y_{i}")));
        wr.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.u.column(k).iter().map(|v| v.to_string()));
            row.extend(self.y.column(k).iter().map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the format written by [`Dataset::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        if header.get(0).map(str::trim) != Some("t") {
            return Err(SimulationError::InvalidDataset("first column must be `t`".into()));
        }
        let m = header.iter().filter(|h| h.trim().starts_with("u_")).count();
        let p = header.iter().filter(|h| h.trim().starts_with("y_")).count();
        if m == 0 || p == 0 || header.len() != 1 + m + p {
            return Err(SimulationError::InvalidDataset(format!(
                "expected header t,u_1..u_m,y_1..y_p, got {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut times = Vec::new();
        let mut cols: Vec<f64> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| SimulationError::InvalidDataset(format!("bad number: {e}")))?;
            if vals.len() != 1 + m + p {
                return Err(SimulationError::InvalidDataset("ragged row".into()));
            }
            times.push(vals[0]);
            cols.extend_from_slice(&vals[1..]);
        }
        let n = times.len();
        let all = Matrix::from_column_slice(m + p, n, &cols);
        Self::new(times, all.rows(0, m).into_owned(), all.rows(m, p).into_owned())
    }
}

/// A time-dependent input signal `u(t) ∈ R^m`.
pub trait InputSignal: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64) -> DVector<f64>;
}

/// `a·sin(ω t + φ)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

/// Sum of sinusoids, independently per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultisineInput {
    pub channels: Vec<Vec<Sinusoid>>,
}

pub const SINES_PER_CHANNEL: usize = 4;
pub const DEFAULT_AMP_RANGE: (f64, f64) = (0.5, 2.0);
pub const DEFAULT_FREQ_RANGE: (f64, f64) = (0.5, 20.0);

impl InputSignal for MultisineInput {
    fn dim(&self) -> usize {
        self.channels.len()
    }

    fn eval(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.channels.len(),
            self.channels.iter().map(|ch| {
                ch.iter()
                    .map(|s| s.amplitude * (s.omega * t + s.phase).sin())
                    .sum::<f64>()
            }),
        )
    }
}

/// Zero input of dimension `m`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroInput(pub usize);

impl InputSignal for ZeroInput {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, _t: f64) -> DVector<f64> {
        DVector::zeros(self.0)
    }
}

/// Constant input.
#[derive(Debug, Clone)]
pub struct ConstantInput(pub DVector<f64>);

impl InputSignal for ConstantInput {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn eval(&self, _t: f64) -> DVector<f64> {
        self.0.clone()
    }
}

/// Draws a seeded multisine with [`SINES_PER_CHANNEL`] components per
/// channel. Frequencies within a channel are distinct; all frequencies are
/// distinct across channels as well so the channels are not coherent.
pub fn multisine(m: usize, seed: u64, amp_range: (f64, f64), freq_range: (f64, f64)) -> MultisineInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used: Vec<f64> = Vec::new();
    let min_gap = 1e-3 * (freq_range.1 - freq_range.0).abs().max(1e-9);
    let channels = (0..m)
        .map(|_| {
            (0..SINES_PER_CHANNEL)
                .map(|_| {
                    let amplitude = uniform(&mut rng, amp_range);
                    let mut omega = uniform(&mut rng, freq_range);
                    for _ in 0..100 {
                        if used.iter().all(|w| (w - omega).abs() > min_gap) {
                            break;
                        }
                        omega = uniform(&mut rng, freq_range);
                    }
                    used.push(omega);
                    let phase = rng.random_range(0.0..2.0 * PI);
                    Sinusoid {
                        amplitude,
                        omega,
                        phase,
                    }
                })
                .collect()
        })
        .collect();
    MultisineInput { channels }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// One classical fourth-order Runge–Kutta step of size `h` from `(t, x)`.
pub fn rk4_step<F>(rhs: F, x: &DVector<f64>, t: f64, h: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    if !(h > 0.0) {
        return Err(SimulationError::InvalidParameters(format!("step {h} must be positive")));
    }
    let k1 = rhs(t, x);
    let k2 = rhs(t + 0.5 * h, &(x + &k1 * (0.5 * h)));
    let k3 = rhs(t + 0.5 * h, &(x + &k2 * (0.5 * h)));
    let k4 = rhs(t + h, &(x + &k3 * h));
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(SimulationError::BlowUp { t: t + h })
    }
}

/// Returns `round(a / b)` when `b` divides `a` up to round-off.
fn ratio(a: f64, b: f64, what: &str) -> Result<usize> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(SimulationError::InvalidParameters(format!("{what}: values must be positive")));
    }
    let r = (a / b).round();
    if r < 1.0 || (r * b - a).abs() > 1e-9 * a {
        return Err(SimulationError::InvalidParameters(format!("{what}: {b} does not divide {a}")));
    }
    Ok(r as usize)
}

/// Integrates the plant from `x0` and records `(u, y)` every `record_dt`
/// on `[0, t_d]`.
pub fn simulate_plant(
    sys: &ContinuousLtiSystem,
    x0: &DVector<f64>,
    input: &dyn InputSignal,
    t_d: f64,
    record_dt: f64,
    int_dt: f64,
) -> Result<Dataset> {
    let (n, m, p) = sys.dims();
    if x0.len() != n || input.dim() != m {
        return Err(SimulationError::InvalidParameters(format!(
            "x0 has length {}, input has dimension {}; plant is n={n}, m={m}",
            x0.len(),
            input.dim()
        )));
    }
    let records = ratio(t_d, record_dt, "record grid")?;
    let sub = ratio(record_dt, int_dt, "integration grid")?;
    let h = record_dt / sub as f64;

    let mut times = Vec::with_capacity(records + 1);
    let mut u = Matrix::zeros(m, records + 1);
    let mut y = Matrix::zeros(p, records + 1);
    let mut x = x0.clone();
    let rhs = |t: f64, x: &DVector<f64>| &sys.a * x + &sys.b * input.eval(t);
    for k in 0..=records {
        let t = k as f64 * record_dt;
        times.push(t);
        u.set_column(k, &input.eval(t));
        y.set_column(k, &(&sys.c * &x));
        if k < records {
            for j in 0..sub {
                x = rk4_step(rhs, &x, t + j as f64 * h, h)?;
            }
        }
    }
    Dataset::new(times, u, y)
}

/// Joint plant/filter trajectory sampled on the integration grid.
#[derive(Debug, Clone)]
pub struct JointTrajectory {
    pub times: Vec<f64>,
    /// `n × N`
    pub x: Matrix,
    /// `n_ξ × N`, columns are `vec(M(t))`.
    pub xi: Matrix,
}

/// Integrates plant and filter together from `(x0, M0)`, recording every
/// `record_every` steps of size `int_dt` on `[0, t_end]`.
pub fn simulate_plant_with_filter(
    sys: &ContinuousLtiSystem,
    bank: &FilterBank,
    x0: &DVector<f64>,
    m0: &Matrix,
    input: &dyn InputSignal,
    t_end: f64,
    int_dt: f64,
    record_every: usize,
) -> Result<JointTrajectory> {
    let (n, m, _p) = sys.dims();
    if bank.n != n || bank.m != m || bank.p != sys.c.nrows() {
        return Err(SimulationError::InvalidParameters("filter does not match plant".into()));
    }
    if m0.nrows() != n || m0.ncols() != bank.mu || x0.len() != n {
        return Err(SimulationError::InvalidParameters("initial condition shapes".into()));
    }
    let steps = ratio(t_end, int_dt, "integration grid")?;
    let every = record_every.max(1);
    let n_rec = steps / every + 1;
    let mut times = Vec::with_capacity(n_rec);
    let mut xs = Matrix::zeros(n, n_rec);
    let mut xis = Matrix::zeros(bank.n_xi, n_rec);

    let mut state = DVector::zeros(n + bank.n_xi);
    state.rows_mut(0, n).copy_from(x0);
    state.rows_mut(n, bank.n_xi).copy_from_slice(m0.as_slice());
    let rhs = |t: f64, s: &DVector<f64>| {
        let x = s.rows(0, n);
        let u = input.eval(t);
        let y = &sys.c * x;
        let mut out = DVector::zeros(n + bank.n_xi);
        out.rows_mut(0, n).copy_from(&(&sys.a * x + &sys.b * &u));
        bank.xi_rhs_into(&s.as_slice()[n..], u.as_slice(), y.as_slice(), &mut out.as_mut_slice()[n..]);
        out
    };
    let mut rec = 0;
    for k in 0..=steps {
        let t = k as f64 * int_dt;
        if k % every == 0 && rec < n_rec {
            times.push(t);
            xs.set_column(rec, &state.rows(0, n));
            xis.set_column(rec, &state.rows(n, bank.n_xi));
            rec += 1;
        }
        if k < steps {
            state = rk4_step(rhs, &state, t, int_dt)?;
        }
    }
    Ok(JointTrajectory { times, x: xs, xi: xis })
}

/// Closed-loop trajectory of plant plus filter-based controller.
#[derive(Debug, Clone)]
pub struct ClosedLoopTrajectory {
    pub times: Vec<f64>,
    /// `n × N`
    pub x: Matrix,
    pub x_norm: Vec<f64>,
    /// Frobenius norm of the filter state.
    pub m_norm: Vec<f64>,
    /// `m × N`
    pub u: Matrix,
}

impl ClosedLoopTrajectory {
    /// CSV with columns `t, |x|, x_1..x_n, ||M||_F`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "x_norm".to_string()];
        header.extend((1..=self.x.nrows()).map(|i| format!("x_{i}")));
        header.push("m_norm".into());
        wr.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string(), self.x_norm[k].to_string()];
            row.extend(self.x.column(k).iter().map(|v| v.to_string()));
            row.push(self.m_norm[k].to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Simulates the plant in feedback with `u = K_e [0; vec(M)]`, `M(0) = 0`,
/// recording every `record_every` integration steps.
pub fn simulate_closed_loop(
    sys: &ContinuousLtiSystem,
    controller: &Controller,
    x0: &DVector<f64>,
    t_end: f64,
    int_dt: f64,
    record_every: usize,
) -> Result<ClosedLoopTrajectory> {
    let (n, m, p) = sys.dims();
    if (controller.n, controller.m, controller.p) != (n, m, p) || x0.len() != n {
        return Err(SimulationError::InvalidParameters(format!(
            "controller dims ({}, {}, {}) do not match plant ({n}, {m}, {p})",
            controller.n, controller.m, controller.p
        )));
    }
    let bank = controller
        .filter_bank()
        .map_err(|e| SimulationError::InvalidParameters(e.to_string()))?;
    let n_xi = bank.n_xi;
    let k_m = controller.k_e.columns(n, n_xi).into_owned();

    let steps = ratio(t_end, int_dt, "integration grid")?;
    let every = record_every.max(1);
    let n_rec = steps / every + 1;
    let mut out = ClosedLoopTrajectory {
        times: Vec::with_capacity(n_rec),
        x: Matrix::zeros(n, n_rec),
        x_norm: Vec::with_capacity(n_rec),
        m_norm: Vec::with_capacity(n_rec),
        u: Matrix::zeros(m, n_rec),
    };

    let mut state = DVector::zeros(n + n_xi);
    state.rows_mut(0, n).copy_from(x0);
    let rhs = |_t: f64, s: &DVector<f64>| {
        let x = s.rows(0, n);
        let xi = s.rows(n, n_xi);
        let u = &k_m * xi;
        let y = &sys.c * x;
        let mut d = DVector::zeros(n + n_xi);
        d.rows_mut(0, n).copy_from(&(&sys.a * x + &sys.b * &u));
        bank.xi_rhs_into(&s.as_slice()[n..], u.as_slice(), y.as_slice(), &mut d.as_mut_slice()[n..]);
        d
    };
    let mut rec = 0;
    for k in 0..=steps {
        let t = k as f64 * int_dt;
        if k % every == 0 && rec < n_rec {
            let x = state.rows(0, n);
            let xi = state.rows(n, n_xi);
            out.times.push(t);
            out.x.set_column(rec, &x);
            out.x_norm.push(x.norm());
            out.m_norm.push(xi.norm());
            out.u.set_column(rec, &(&k_m * xi));
            rec += 1;
        }
        if k < steps {
            state = rk4_step(rhs, &state, t, int_dt)?;
        }
    }
    Ok(out)
}
