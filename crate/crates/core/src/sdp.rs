//! Small dense semidefinite programs solved by a log-det barrier method.
//!
//! Problems have the form `maximize cᵀx` subject to a list of linear matrix
//! inequalities `F₀ + Σᵢ xᵢFᵢ ⪰ 0`. Each block stores only its nonzero
//! coefficient matrices, so scalar linear inequalities are 1×1 blocks with
//! a single term. A strictly feasible starting point is required.

use nalgebra::{Cholesky, DVector, Dyn};
use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("starting point is not strictly feasible")]
    InfeasibleStart,
    #[error("Newton system is singular")]
    SingularNewton,
    #[error("iteration budget of {0} Newton steps exhausted")]
    Budget(usize),
}

/// `F₀ + Σ xᵢFᵢ ⪰ 0` with only the nonzero `Fᵢ` listed.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub f0: Matrix,
    pub terms: Vec<(usize, Matrix)>,
}

impl LmiBlock {
    pub fn new(f0: Matrix) -> Self {
        Self { f0, terms: Vec::new() }
    }

    pub fn add(&mut self, var: usize, fi: Matrix) {
        if fi.iter().any(|&v| v != 0.0) {
            self.terms.push((var, fi));
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> Matrix {
        let mut s = self.f0.clone();
        for (i, fi) in &self.terms {
            let xi = x[*i];
            s.zip_apply(fi, |v, f| *v += xi * f);
        }
        s
    }

    /// Columns `vec(F_i)` in term order.
    fn stacked(&self) -> Matrix {
        let d = self.dim();
        let mut m = Matrix::zeros(d * d, self.terms.len());
        for (a, (_, fi)) in self.terms.iter().enumerate() {
            m.column_mut(a).copy_from_slice(fi.as_slice());
        }
        m
    }

    fn dim(&self) -> usize {
        self.f0.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct Sdp {
    pub c: DVector<f64>,
    pub blocks: Vec<LmiBlock>,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Stop once the duality-gap bound `Σ dim / t` falls below this.
    pub gap_tol: f64,
    /// Newton decrement threshold for each centering step.
    pub newton_tol: f64,
    /// Barrier parameter growth factor.
    pub growth: f64,
    pub max_newton: usize,
    /// Newton steps allowed per centering before the barrier weight grows
    /// anyway.
    pub max_centering: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-10,
            newton_tol: 1e-10,
            growth: 20.0,
            max_newton: 2000,
            max_centering: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub newton_steps: usize,
}

fn cholesky(s: Matrix) -> Option<Cholesky<f64, Dyn>> {
    if !s.iter().all(|v| v.is_finite()) {
        return None;
    }
    s.cholesky()
}

impl Sdp {
    fn dim_total(&self) -> usize {
        self.blocks.iter().map(LmiBlock::dim).sum()
    }

    /// Barrier objective `−t cᵀx − Σ log det F(x)`; `None` outside the
    /// interior.
    fn barrier(&self, x: &DVector<f64>, t: f64) -> Option<f64> {
        let mut v = -t * self.c.dot(x);
        for b in &self.blocks {
            let ch = cholesky(b.eval(x))?;
            v -= 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        }
        Some(v)
    }

    fn gradient_hessian(&self, x: &DVector<f64>, t: f64, stacked: &[Matrix]) -> Option<(DVector<f64>, Matrix)> {
        let k = self.c.len();
        let mut g = -&self.c * t;
        let mut h = Matrix::zeros(k, k);
        for (b, fs) in self.blocks.iter().zip(stacked) {
            let d = b.dim();
            let l_inv = cholesky(b.eval(x))?.l().try_inverse()?;
            // With S = L Lᵀ and W_i = L⁻¹ F_i L⁻ᵀ, tr(S⁻¹F_i) = tr(W_i) and
            // tr(S⁻¹F_i S⁻¹F_j) = ⟨W_i, W_j⟩; vec(W_i) = (L⁻¹ ⊗ L⁻¹) vec(F_i).
            let phi = if d == 1 {
                fs * (l_inv[(0, 0)] * l_inv[(0, 0)])
            } else {
                l_inv.kronecker(&l_inv) * fs
            };
            for (a, (i, _)) in b.terms.iter().enumerate() {
                g[*i] -= (0..d).map(|p| phi[(p * d + p, a)]).sum::<f64>();
            }
            let gram = phi.tr_mul(&phi);
            for (a, (i, _)) in b.terms.iter().enumerate() {
                for (bb, (j, _)) in b.terms.iter().enumerate() {
                    h[(*i, *j)] += gram[(a, bb)];
                }
            }
        }
        Some((g, h))
    }

    /// Barrier path-following from the strictly feasible point `x0`.
    pub fn maximize(&self, x0: DVector<f64>, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
        if self.barrier(&x0, 1.0).is_none() {
            return Err(SdpError::InfeasibleStart);
        }
        let nb = self.dim_total() as f64;
        let stacked: Vec<Matrix> = self.blocks.iter().map(LmiBlock::stacked).collect();
        let mut x = x0;
        let mut t = 1.0;
        let mut steps = 0;
        loop {
            for _ in 0..opts.max_centering {
                if steps >= opts.max_newton {
                    return Err(SdpError::Budget(steps));
                }
                let (g, h) = self.gradient_hessian(&x, t, &stacked).ok_or(SdpError::InfeasibleStart)?;
                let dx = solve_spd(h, &g).ok_or(SdpError::SingularNewton)?;
                steps += 1;
                let decrement = -g.dot(&dx);
                if decrement / 2.0 < opts.newton_tol {
                    break;
                }
                let f0 = self.barrier(&x, t).ok_or(SdpError::InfeasibleStart)?;
                let slope = g.dot(&dx);
                let mut step = 1.0;
                let mut moved = false;
                while step >= 1e-14 {
                    let trial = &x + &dx * step;
                    if let Some(v) = self.barrier(&trial, t) {
                        if v <= f0 + 0.25 * step * slope {
                            moved = trial != x;
                            x = trial;
                            break;
                        }
                    }
                    step *= 0.5;
                }
                // No representable progress: the centering is as good as
                // floating point allows.
                if !moved {
                    break;
                }
            }
            if nb / t < opts.gap_tol {
                break;
            }
            t *= opts.growth;
        }
        Ok(SdpSolution {
            objective: self.c.dot(&x),
            x,
            newton_steps: steps,
        })
    }
}

/// Solves `H dx = −g` for symmetric positive definite `H`, with a small
/// diagonal shift if the factorization fails.
fn solve_spd(h: Matrix, g: &DVector<f64>) -> Option<DVector<f64>> {
    let rhs = -g;
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(&rhs));
    }
    let scale = h.diagonal().amax().max(1e-300);
    let mut shift = 1e-14 * scale;
    for _ in 0..10 {
        let mut hs = h.clone();
        for i in 0..hs.nrows() {
            hs[(i, i)] += shift;
        }
        if let Some(ch) = hs.cholesky() {
            return Some(ch.solve(&rhs));
        }
        shift *= 100.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(f0: f64, terms: &[(usize, f64)]) -> LmiBlock {
        let mut b = LmiBlock::new(Matrix::from_element(1, 1, f0));
        for &(i, v) in terms {
            b.add(i, Matrix::from_element(1, 1, v));
        }
        b
    }

    #[test]
    fn linear_program_on_a_box() {
        // maximize x0 + 2 x1 on [0,1]^2
        let sdp = Sdp {
            c: DVector::from_vec(vec![1.0, 2.0]),
            blocks: vec![
                scalar(0.0, &[(0, 1.0)]),
                scalar(1.0, &[(0, -1.0)]),
                scalar(0.0, &[(1, 1.0)]),
                scalar(1.0, &[(1, -1.0)]),
            ],
        };
        let sol = sdp.maximize(DVector::from_vec(vec![0.5, 0.5]), &SdpOptions::default()).unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-8);
    }

    #[test]
    fn largest_eigenvalue_bound() {
        // maximize s subject to A − sI ⪰ 0: s* = λ_min(A)
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let mut blk = LmiBlock::new(a.clone());
        blk.add(0, -Matrix::identity(2, 2));
        let sdp = Sdp {
            c: DVector::from_vec(vec![1.0]),
            blocks: vec![blk],
        };
        let sol = sdp.maximize(DVector::from_vec(vec![0.0]), &SdpOptions::default()).unwrap();
        let want = (5.0 - 5f64.sqrt()) / 2.0;
        assert!((sol.objective - want).abs() < 1e-8);
    }

    #[test]
    fn infeasible_start_is_reported() {
        let sdp = Sdp {
            c: DVector::from_vec(vec![1.0]),
            blocks: vec![scalar(-1.0, &[(0, 1.0)])],
        };
        assert_eq!(
            sdp.maximize(DVector::from_vec(vec![0.0]), &SdpOptions::default()).unwrap_err(),
            SdpError::InfeasibleStart
        );
    }
}
