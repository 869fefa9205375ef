//! The data-based stabilization LMI: find `Q` with `Z_a Q` symmetric
//! positive definite and `Ż_a Q + Qᵀ Ż_aᵀ` negative definite.
//!
//! The symmetry constraint is eliminated by parametrizing
//! `Q = Z_a⁺ P + V_g S_g⁻¹ Y`, where `P` is symmetric and `U_g S_g V_gᵀ` is
//! the SVD of the component of `Ż_a` orthogonal to the row space of
//! `Z_a`. Then `Z_a Q = P` and `Ż_a Q = D P + U_g Y` with `D = Ż_a Z_a⁺`,
//! and the problem becomes a standard state-feedback LMI in `(P, Y)`. It is
//! solved with a decay-rate margin, an upper bound `P ⪯ I` and a box bound
//! on `Y`, maximizing the smallest slack.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use nalgebra::DVector;

use crate::linalg::{self, Matrix};
use crate::sdp::{LmiBlock, Sdp, SdpError, SdpOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmiError {
    #[error("LMI infeasible (best slack {margin:.3e} after {newton_steps} Newton steps)")]
    Infeasible { margin: f64, newton_steps: usize },
    #[error("invalid LMI data: {0}")]
    InvalidData(String),
    #[error("solver failure: {0}")]
    Solver(#[from] SdpError),
}

pub type Result<T> = std::result::Result<T, LmiError>;

/// Tunables of the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmiOptions {
    /// Requested decay rate of the a-block closed loop; falls back to zero
    /// when infeasible.
    pub decay_rate: f64,
    /// Box bound on the entries of `Y` (normalized units).
    pub gain_bound: f64,
    /// Upper bound on the rank of the input-driven direction set (the input
    /// dimension when known).
    pub max_input_rank: Option<usize>,
    /// Relative threshold for the rank of `Ż_a` off the row space of `Z_a`.
    pub range_tol: f64,
    /// Smallest normalized slack accepted as strictly feasible.
    pub feasibility_tol: f64,
}

impl Default for LmiOptions {
    fn default() -> Self {
        Self {
            decay_rate: 1.0,
            gain_bound: 1e3,
            max_input_rank: None,
            range_tol: 1e-9,
            feasibility_tol: 1e-9,
        }
    }
}

/// Batch data and strictness margin.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationLmi {
    /// `l × N`
    pub z_a: Matrix,
    /// `l × N`
    pub z_a_dot: Matrix,
    pub epsilon: f64,
    pub options: LmiOptions,
}

#[derive(Serialize, Deserialize)]
struct LmiJson {
    z_a: Vec<Vec<f64>>,
    z_a_dot: Vec<Vec<f64>>,
    epsilon: f64,
    #[serde(default)]
    options: LmiOptions,
}

impl StabilizationLmi {
    /// Builds the problem with the default margin
    /// `ε = 1e-6 · max(‖Z_a‖, ‖Ż_a‖)`.
    pub fn new(z_a: Matrix, z_a_dot: Matrix) -> Result<Self> {
        let epsilon = default_epsilon(&z_a, &z_a_dot);
        let p = Self {
            z_a,
            z_a_dot,
            epsilon,
            options: LmiOptions::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_options(mut self, options: LmiOptions) -> Self {
        self.options = options;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (l, n) = self.z_a.shape();
        if l == 0 || self.z_a_dot.shape() != (l, n) {
            return Err(LmiError::InvalidData(format!(
                "Z_a is {}x{}, Ż_a is {}x{}",
                l,
                n,
                self.z_a_dot.nrows(),
                self.z_a_dot.ncols()
            )));
        }
        if l > n {
            return Err(LmiError::InvalidData(format!("l = {l} exceeds N = {n}")));
        }
        if !self.z_a.iter().chain(self.z_a_dot.iter()).all(|v| v.is_finite()) {
            return Err(LmiError::InvalidData("non-finite entry".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(LmiError::InvalidData("epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LmiJson {
            z_a: linalg::to_rows(&self.z_a),
            z_a_dot: linalg::to_rows(&self.z_a_dot),
            epsilon: self.epsilon,
            options: self.options,
        })
        .expect("plain numeric data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LmiJson = serde_json::from_str(text).map_err(|e| LmiError::InvalidData(e.to_string()))?;
        let conv = |r: &[Vec<f64>]| linalg::from_rows(r).map_err(|e| LmiError::InvalidData(e.to_string()));
        let p = Self {
            z_a: conv(&raw.z_a)?,
            z_a_dot: conv(&raw.z_a_dot)?,
            epsilon: raw.epsilon,
            options: raw.options,
        };
        p.validate()?;
        Ok(p)
    }
}

pub fn default_epsilon(z_a: &Matrix, z_a_dot: &Matrix) -> f64 {
    let s = |m: &Matrix| linalg::singular_values(m).first().copied().unwrap_or(0.0);
    1e-6 * s(z_a).max(s(z_a_dot))
}

/// Solver bookkeeping for audit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolverStats {
    pub margin: f64,
    pub decay_rate: f64,
    pub input_rank: usize,
    pub newton_steps: usize,
}

/// A candidate `Q` together with independently recomputed residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiSolution {
    /// `N × l`
    pub q: Matrix,
    /// Smallest eigenvalue of the symmetric part of `Z_a Q`.
    pub pd_residual: f64,
    /// Largest eigenvalue of `Ż_a Q + Qᵀ Ż_aᵀ`.
    pub nd_residual: f64,
    /// `‖Z_a Q − (Z_a Q)ᵀ‖_F`
    pub symmetry_defect: f64,
    pub za_q_norm: f64,
    pub epsilon: f64,
    pub stats: Option<SolverStats>,
}

impl LmiSolution {
    /// Whether all three constraints hold with margin `ε (1 − slack_tol)`.
    pub fn satisfies(&self, slack_tol: f64) -> bool {
        let e = self.epsilon * (1.0 - slack_tol);
        self.pd_residual >= e && self.nd_residual <= -e && self.symmetry_defect <= 1e-8 * self.za_q_norm
    }
}

/// Recomputes the residuals of `q` by direct dense algebra.
pub fn certify(problem: &StabilizationLmi, q: &Matrix) -> LmiSolution {
    let zq = &problem.z_a * q;
    let zdq = &problem.z_a_dot * q;
    let pd = linalg::symmetric_eigenvalues(&zq).first().copied().unwrap_or(f64::NAN);
    let nd = linalg::symmetric_eigenvalues(&(&zdq + zdq.transpose()))
        .last()
        .copied()
        .unwrap_or(f64::NAN);
    LmiSolution {
        q: q.clone(),
        pd_residual: pd,
        nd_residual: nd,
        symmetry_defect: (&zq - zq.transpose()).norm(),
        za_q_norm: zq.norm(),
        epsilon: problem.epsilon,
        stats: None,
    }
}

/// Reduced data of the parametrization `Q = Z_a⁺P + V S⁻¹ Y`.
struct Reduced {
    pinv: Matrix,
    d: Matrix,
    e: Matrix,
    /// `V_g S_g⁻¹`, `N × r`
    w: Matrix,
}

fn reduce(z_a: &Matrix, z_a_dot: &Matrix, options: &LmiOptions) -> Result<Reduced> {
    let l = z_a.nrows();
    let scale = linalg::singular_values(z_a)[0];
    if !(scale > 0.0) {
        return Err(LmiError::Infeasible {
            margin: 0.0,
            newton_steps: 0,
        });
    }
    let zs = z_a / scale;
    let zds = z_a_dot / scale;

    let svd = linalg::thin_svd(&zs.transpose());
    // zsᵀ = V₁ S U₁ᵀ
    let (v1, u1) = (&svd.u, &svd.v);
    if svd.s[l - 1] <= 1e-13 {
        // Z_a Q can never be positive definite.
        return Err(LmiError::Infeasible {
            margin: 0.0,
            newton_steps: 0,
        });
    }
    let s_inv = Matrix::from_diagonal(&DVector::from_iterator(l, svd.s.iter().map(|s| 1.0 / s)));
    let pinv = v1 * s_inv * u1.transpose();
    let d = &zds * &pinv;

    let off = &zds - (&zds * v1) * v1.transpose();
    let (n_cols, max_r) = (z_a.ncols(), options.max_input_rank);
    let sv_ref = linalg::singular_values(&zds).first().copied().unwrap_or(0.0);
    let g = linalg::thin_svd(&off.transpose());
    // offᵀ = V_g S_g U_gᵀ
    let mut r = g
        .s
        .iter()
        .filter(|&&s| s > options.range_tol * sv_ref)
        .count()
        .min(n_cols - l);
    if let Some(mr) = max_r {
        r = r.min(mr);
    }
    let e = g.v.columns(0, r).into_owned();
    let w = Matrix::from_fn(n_cols, r, |i, j| g.u[(i, j)] / g.s[j]);
    Ok(Reduced {
        pinv,
        d,
        e,
        w,
    })
}

/// Index of the `(a, b)` entry (`a ≤ b`) of a symmetric `l × l` matrix.
fn sym_index(l: usize, a: usize, b: usize) -> usize {
    a * l - a * (a + 1) / 2 + b
}

fn sym_basis(l: usize, a: usize, b: usize) -> Matrix {
    let mut e = Matrix::zeros(l, l);
    e[(a, b)] = 1.0;
    e[(b, a)] = 1.0;
    e
}

struct Layout {
    l: usize,
    r: usize,
    n_p: usize,
}

impl Layout {
    fn y(&self, i: usize, j: usize) -> usize {
        self.n_p + j * self.r + i
    }
    fn s(&self) -> usize {
        self.n_p + self.r * self.l
    }
    fn len(&self) -> usize {
        self.s() + 1
    }
}

fn build_sdp(red: &Reduced, alpha: f64, bound: f64) -> (Sdp, Layout) {
    let l = red.d.nrows();
    let r = red.e.ncols();
    let lay = Layout {
        l,
        r,
        n_p: l * (l + 1) / 2,
    };
    let id = Matrix::identity(l, l);
    let mut pd = LmiBlock::new(Matrix::zeros(l, l));
    let mut decay = LmiBlock::new(Matrix::zeros(l, l));
    let mut upper = LmiBlock::new(id.clone());
    for a in 0..l {
        for b in a..l {
            let k = sym_index(l, a, b);
            let e = sym_basis(l, a, b);
            let de = &red.d * &e;
            decay.add(k, -(&de + de.transpose()) - &e * (2.0 * alpha));
            pd.add(k, e.clone());
            upper.add(k, -e);
        }
    }
    for i in 0..r {
        for j in 0..l {
            // E · Y with Y = e_i e_jᵀ
            let mut ey = Matrix::zeros(l, l);
            ey.column_mut(j).copy_from(&red.e.column(i));
            decay.add(lay.y(i, j), -(&ey + ey.transpose()));
        }
    }
    pd.add(lay.s(), -id.clone());
    decay.add(lay.s(), -id);

    let mut blocks = vec![pd, decay, upper];
    for i in 0..r {
        for j in 0..l {
            for sign in [1.0, -1.0] {
                let mut b = LmiBlock::new(Matrix::from_element(1, 1, bound));
                b.add(lay.y(i, j), Matrix::from_element(1, 1, sign));
                blocks.push(b);
            }
        }
    }
    let mut c = DVector::zeros(lay.len());
    c[lay.s()] = 1.0;
    (Sdp { c, blocks }, lay)
}

fn solve_reduced(red: &Reduced, alpha: f64, bound: f64) -> Result<(Matrix, Matrix, f64, usize)> {
    let (sdp, lay) = build_sdp(red, alpha, bound);
    let l = lay.l;
    let mut x0 = DVector::zeros(lay.len());
    for a in 0..l {
        x0[sym_index(l, a, a)] = 0.5;
    }
    let smin = sdp.blocks[..2]
        .iter()
        .map(|b| linalg::symmetric_eigenvalues(&b.eval(&x0))[0])
        .fold(f64::INFINITY, f64::min);
    x0[lay.s()] = smin - 1.0;
    let opts = SdpOptions {
        gap_tol: 1e-7,
        ..SdpOptions::default()
    };
    let sol = sdp.maximize(x0, &opts)?;
    let x = &sol.x;
    let p = Matrix::from_fn(l, l, |a, b| x[sym_index(l, a.min(b), a.max(b))]);
    let y = Matrix::from_fn(lay.r, l, |i, j| x[lay.y(i, j)]);
    Ok((p, y, x[lay.s()], sol.newton_steps))
}

/// Coordinate changes applied after the first solve.
const MAX_RECENTER: usize = 3;
/// Normalized slack beyond which recentering stops.
const GOOD_MARGIN: f64 = 1e-2;

/// One solve in the coordinates `z' = T z`.
struct Pass {
    /// `Q` for the original coordinates.
    q: Matrix,
    /// `P` in the transformed, scaled coordinates.
    p: Matrix,
    stats: SolverStats,
}

fn solve_in(problem: &StabilizationLmi, t: &Matrix, red: &Reduced, alpha: f64) -> Result<Pass> {
    let (p, y, margin, steps) = solve_reduced(red, alpha, problem.options.gain_bound)?;
    // T Z Q' is symmetric, hence so is Z Q' T⁻ᵀ = T⁻¹ (T Z Q') T⁻ᵀ.
    let q_t = &red.pinv * &p + &red.w * &y;
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| LmiError::InvalidData("singular coordinate transform".into()))?;
    Ok(Pass {
        q: q_t * t_inv.transpose(),
        p,
        stats: SolverStats {
            margin,
            decay_rate: alpha,
            input_rank: red.e.ncols(),
            newton_steps: steps,
        },
    })
}

fn worst_residual(sol: &LmiSolution) -> f64 {
    sol.pd_residual.min(-sol.nd_residual)
}

/// `P^{-1/2}` with the spectrum of `P` clipped from below.
fn recentering(p: &Matrix) -> Matrix {
    let eig = nalgebra::SymmetricEigen::new((p + p.transpose()) * 0.5);
    let top = eig.eigenvalues.amax();
    let floor = (top * 1e-12).max(f64::MIN_POSITIVE);
    let d = eig.eigenvalues.map(|v| 1.0 / v.max(floor).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Finds `Q` meeting the three constraints with margin `ε`, or reports
/// infeasibility.
///
/// Each solve is followed by a change of coordinates to `P^{-1/2} z` and a
/// new solve. This removes the conditioning that the normalization `P ⪯ I`
/// imposes when the data's natural Lyapunov matrix is far from isotropic.
pub fn solve(problem: &StabilizationLmi) -> Result<LmiSolution> {
    problem.validate()?;
    let opts = &problem.options;
    let target = opts.decay_rate.max(0.0);
    let l = problem.z_a.nrows();
    let mut t = Matrix::identity(l, l);
    let mut best: Option<(LmiSolution, SolverStats)> = None;
    let mut best_margin = f64::NEG_INFINITY;
    let mut total_steps = 0;
    for pass in 0..=MAX_RECENTER {
        let red = reduce(&(&t * &problem.z_a), &(&t * &problem.z_a_dot), opts)?;
        // The first pass only has to find a P to recenter on.
        let rates: &[f64] = if pass == 0 || target == 0.0 { &[0.0] } else { &[target, 0.0] };
        let mut chosen: Option<Pass> = None;
        for &alpha in rates {
            let run = solve_in(problem, &t, &red, alpha)?;
            total_steps += run.stats.newton_steps;
            best_margin = best_margin.max(run.stats.margin);
            let feasible = run.stats.margin > opts.feasibility_tol;
            chosen = Some(run);
            if feasible {
                break;
            }
        }
        let run = chosen.expect("at least one rate");
        if run.stats.margin > opts.feasibility_tol {
            let sol = certify(problem, &run.q);
            let improves = match &best {
                None => true,
                Some((_, bs)) => (run.stats.decay_rate, run.stats.margin) > (bs.decay_rate, bs.margin),
            };
            if improves && worst_residual(&sol) > 0.0 {
                best = Some((sol, run.stats.clone()));
            }
            if run.stats.margin >= GOOD_MARGIN && run.stats.decay_rate >= target {
                break;
            }
        }
        t = recentering(&run.p) * t;
    }
    let Some((sol, mut stats)) = best else {
        return Err(LmiError::Infeasible {
            margin: best_margin,
            newton_steps: total_steps,
        });
    };
    stats.newton_steps = total_steps;
    let worst = worst_residual(&sol);
    let goal = problem.epsilon * (1.0 + 1e-3);
    let q = if worst < goal { &sol.q * (goal / worst) } else { sol.q };
    let mut sol = certify(problem, &q);
    sol.stats = Some(stats);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> Matrix {
        Matrix::from_row_slice(1, v.len(), v)
    }

    #[test]
    fn hand_instance_certificate() {
        let p = StabilizationLmi::new(row(&[1.0, 1.0]), row(&[1.0, -2.0])).unwrap();
        let c = certify(&p, &Matrix::from_column_slice(2, 1, &[0.0, 1.0]));
        assert_eq!(c.pd_residual, 1.0);
        assert_eq!(c.nd_residual, -4.0);
        assert_eq!(c.symmetry_defect, 0.0);
        assert!(c.satisfies(1e-3));
        let zero = certify(&p, &Matrix::zeros(2, 1));
        assert_eq!(zero.pd_residual, 0.0);
        assert!(!zero.satisfies(1e-3));
    }

    #[test]
    fn hand_instance_is_solved() {
        let p = StabilizationLmi::new(row(&[1.0, 1.0]), row(&[1.0, -2.0])).unwrap();
        let sol = solve(&p).unwrap();
        assert!(sol.satisfies(1e-6), "{sol:?}");
        assert_eq!(sol.q.shape(), (2, 1));
    }

    #[test]
    fn contradictory_scalar_is_infeasible() {
        let p = StabilizationLmi::new(row(&[1.0]), row(&[1.0])).unwrap();
        assert!(matches!(solve(&p), Err(LmiError::Infeasible { .. })));
        let c = certify(&p, &Matrix::from_element(1, 1, 0.7));
        assert!(!c.satisfies(1e-3));
    }

    #[test]
    fn scaling_q_preserves_contract_direction() {
        let p = StabilizationLmi::new(row(&[1.0, 1.0]), row(&[1.0, -2.0])).unwrap();
        let q = Matrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let a = certify(&p, &q);
        let b = certify(&p, &(&q * 3.0));
        assert!((b.pd_residual - 3.0 * a.pd_residual).abs() < 1e-12);
        assert!((b.nd_residual - 3.0 * a.nd_residual).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed_data() {
        assert!(StabilizationLmi::new(Matrix::zeros(2, 1), Matrix::zeros(2, 1)).is_err());
        assert!(StabilizationLmi::new(row(&[1.0, 2.0]), row(&[1.0])).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = StabilizationLmi::new(row(&[1.0, 1.0]), row(&[1.0, -2.0])).unwrap();
        assert_eq!(StabilizationLmi::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn random_stabilizable_data_yields_stabilizing_parametrization() {
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let (l, m, n) = (4, 2, 20);
            let mut g = |r, c| Matrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
            let a = g(l, l) + Matrix::identity(l, l);
            let b = g(l, m);
            let z = g(l, n);
            let u = g(m, n);
            let zd = &a * &z + &b * &u;
            let p = StabilizationLmi::new(z.clone(), zd.clone()).unwrap();
            let sol = solve(&p).unwrap();
            assert!(sol.satisfies(1e-6));
            let k = &u * &sol.q * (&z * &sol.q).try_inverse().unwrap();
            assert!(linalg::is_hurwitz(&(&a + &b * k), 0.0));
        }
    }
}
