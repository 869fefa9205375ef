//! The true plant and the model-based objects built from it.
//!
//! None of this is visible to the data-driven pipeline. It exists to
//! generate data and to check the pipeline's intermediate results against
//! the exact filter embedding, the non-minimal realization and the
//! extended system driven by the filter and the decaying exponentials.

use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kfilter::{build_filter, FilterBank, FilterError};
use crate::linalg::{self, condition_number, eigvals, kron, vec, LinalgError, Matrix};

/// Largest condition number accepted for the similarity `T`.
pub const MAX_EMBEDDING_COND: f64 = 1e8;
const EMBEDDING_ATTEMPTS: usize = 10;
const SAMPLING_ATTEMPTS: usize = 100;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("filter spectrum overlaps plant spectrum (distance {0:.3e})")]
    SpectrumOverlap(f64),
    #[error("no well-conditioned embedding after {0} draws; is (C, A) observable?")]
    Unobservable(usize),
    #[error("no minimal system drawn after {0} attempts")]
    SamplingFailure(usize),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid system file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PlantError>;

/// `ẋ = Ax + Bu`, `y = Cx`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLtiSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
}

impl ContinuousLtiSystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n || b.nrows() != n || c.ncols() != n || b.ncols() == 0 || c.nrows() == 0 {
            return Err(PlantError::Dimension(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if !a.iter().chain(b.iter()).chain(c.iter()).all(|v| v.is_finite()) {
            return Err(PlantError::Dimension("non-finite entry".into()));
        }
        Ok(Self { a, b, c })
    }

    /// The three-state, two-input, two-output unstable benchmark plant.
    pub fn example1() -> Self {
        Self {
            a: Matrix::from_row_slice(3, 3, &[1., 2., 0., 0., 2., 1., 3., 0., 1.]),
            b: Matrix::from_row_slice(3, 2, &[1., 0., 0., 1., 1., 2.]),
            c: Matrix::from_row_slice(2, 3, &[1., 0., 2., 0., 1., 1.]),
        }
    }

    /// `(n, m, p)`
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.nrows(), self.b.ncols(), self.c.nrows())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SystemJson = serde_json::from_str(text)?;
        let conv = |rows: &[Vec<f64>]| linalg::from_rows(rows);
        Self::new(conv(&raw.a)?, conv(&raw.b)?, conv(&raw.c)?)
    }

    pub fn to_json(&self) -> String {
        let raw = SystemJson {
            a: linalg::to_rows(&self.a),
            b: linalg::to_rows(&self.b),
            c: linalg::to_rows(&self.c),
        };
        serde_json::to_string_pretty(&raw).expect("plain numeric data serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Kalman tests `(controllable, observable)` at relative rank tolerance.
pub fn check_minimality(sys: &ContinuousLtiSystem, tol: f64) -> (bool, bool) {
    let n = sys.a.nrows();
    let ctrb = linalg::reachable_subspace(&sys.a, &sys.b, tol).ncols() == n;
    let obsv = linalg::reachable_subspace(&sys.a.transpose(), &sys.c.transpose(), tol).ncols() == n;
    (ctrb, obsv)
}

/// `T`, `L` with `T(A − LC)T⁻¹ = F`, and `θ = [vec(TL); vec(TB)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub t_mat: Matrix,
    pub t_inv: Matrix,
    pub l_mat: Matrix,
    pub theta: DVector<f64>,
    pub f: Matrix,
}

/// Solves `X A − F X = G C` for random `G` until `X` is well conditioned.
pub fn luenberger_embedding(sys: &ContinuousLtiSystem, f: &Matrix, seed: u64) -> Result<Embedding> {
    let (n, _m, p) = sys.dims();
    build_filter(n, sys.b.ncols(), p, f)?;

    let plant_spec = eigvals(&sys.a)?;
    let scale = 1.0 + sys.a.norm() + f.norm();
    let gap = plant_spec
        .eigenvalues
        .iter()
        .flat_map(|z| f.diagonal().iter().map(move |&l| (z - l).norm()).collect::<Vec<_>>())
        .fold(f64::INFINITY, f64::min);
    if gap <= 1e-8 * scale {
        return Err(PlantError::SpectrumOverlap(gap));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..EMBEDDING_ATTEMPTS {
        let mut g = Matrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let mut x = linalg::solve_sylvester(&sys.a, f, &(&g * &sys.c))?;
        // F is diagonal, so scaling row i of G scales row i of X and leaves
        // L unchanged; equilibrate the rows to keep T well conditioned.
        for i in 0..n {
            let r = x.row(i).norm();
            if r > 0.0 {
                x.row_mut(i).scale_mut(1.0 / r);
                g.row_mut(i).scale_mut(1.0 / r);
            }
        }
        if condition_number(&x) >= MAX_EMBEDDING_COND {
            continue;
        }
        let Some(t_inv) = x.clone().try_inverse() else {
            continue;
        };
        let l_mat = &t_inv * &g;
        let tb = &x * &sys.b;
        let mut theta = DVector::zeros(g.len() + tb.len());
        theta.rows_mut(0, g.len()).copy_from(&vec(&g));
        theta.rows_mut(g.len(), tb.len()).copy_from(&vec(&tb));
        return Ok(Embedding {
            t_mat: x,
            t_inv,
            l_mat,
            theta,
            f: f.clone(),
        });
    }
    Err(PlantError::Unobservable(EMBEDDING_ATTEMPTS))
}

/// Filter-based non-minimal realization of the plant.
#[derive(Debug, Clone)]
pub struct NonMinimalRealization {
    pub a_xi: Matrix,
    pub b_xi: Matrix,
    pub c_xi: Matrix,
    pub f_xi: Matrix,
    pub l_xi: Matrix,
    /// `n × n_ξ` map with `x = Π ξ`.
    pub pi: Matrix,
}

pub fn canonical_realization(sys: &ContinuousLtiSystem, emb: &Embedding) -> Result<NonMinimalRealization> {
    let (n, m, p) = sys.dims();
    let bank = build_filter(n, m, p, &emb.f)?;
    let theta_t = Matrix::from_row_slice(1, emb.theta.len(), emb.theta.as_slice());
    let pi = kron(&theta_t, &emb.t_inv);
    let c_xi = &sys.c * &pi;
    let a_xi = &bank.f_xi + &bank.l_xi * &c_xi;
    Ok(NonMinimalRealization {
        a_xi,
        b_xi: bank.b_xi,
        c_xi,
        f_xi: bank.f_xi,
        l_xi: bank.l_xi,
        pi,
    })
}

/// Dynamics of `χ` (the decaying exponentials) stacked with the filter.
#[derive(Debug, Clone)]
pub struct ExtendedSystem {
    pub a_e: Matrix,
    pub b_e: Matrix,
    pub gamma: Matrix,
}

impl ExtendedSystem {
    pub fn n_z(&self) -> usize {
        self.a_e.nrows()
    }
}

/// Builds `(A_e, B_e)` for an experiment started at `x0` with `M(0) = 0`.
pub fn extended_system(
    sys: &ContinuousLtiSystem,
    emb: &Embedding,
    nmr: &NonMinimalRealization,
    x0: &DVector<f64>,
) -> Result<ExtendedSystem> {
    let (n, m, _p) = sys.dims();
    if x0.len() != n {
        return Err(PlantError::Dimension(format!("x0 has length {}, expected {n}", x0.len())));
    }
    let n_xi = nmr.a_xi.nrows();
    let gamma = Matrix::from_diagonal(&(&emb.t_mat * x0));
    let mut a_e = Matrix::zeros(n + n_xi, n + n_xi);
    a_e.view_mut((0, 0), (n, n)).copy_from(&emb.f);
    a_e.view_mut((n, 0), (n_xi, n))
        .copy_from(&(&nmr.l_xi * &sys.c * &emb.t_inv * &gamma));
    a_e.view_mut((n, n), (n_xi, n_xi)).copy_from(&nmr.a_xi);
    let mut b_e = Matrix::zeros(n + n_xi, m);
    b_e.view_mut((n, 0), (n_xi, m)).copy_from(&nmr.b_xi);
    Ok(ExtendedSystem { a_e, b_e, gamma })
}

/// Everything model-based about one experiment, bundled.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub embedding: Embedding,
    pub realization: NonMinimalRealization,
    pub extended: ExtendedSystem,
    pub bank: FilterBank,
}

impl Oracle {
    pub fn new(sys: &ContinuousLtiSystem, f: &Matrix, x0: &DVector<f64>, seed: u64) -> Result<Self> {
        let (n, m, p) = sys.dims();
        let embedding = luenberger_embedding(sys, f, seed)?;
        let realization = canonical_realization(sys, &embedding)?;
        let extended = extended_system(sys, &embedding, &realization, x0)?;
        Ok(Self {
            bank: build_filter(n, m, p, f)?,
            embedding,
            realization,
            extended,
        })
    }
}

/// Draws standard-normal `(A, B, C)` until the triple is minimal.
pub fn random_minimal_system(n: usize, m: usize, p: usize, seed: u64) -> Result<ContinuousLtiSystem> {
    if n == 0 || m == 0 || p == 0 {
        return Err(PlantError::Dimension("n, m, p must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    for _ in 0..SAMPLING_ATTEMPTS {
        let sys = ContinuousLtiSystem::new(draw(n, n), draw(n, m), draw(p, n))?;
        if check_minimality(&sys, linalg::DEFAULT_RANK_TOL) == (true, true) {
            return Ok(sys);
        }
    }
    Err(PlantError::SamplingFailure(SAMPLING_ATTEMPTS))
}
