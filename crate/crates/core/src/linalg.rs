//! Dense real linear-algebra primitives.
//!
//! Everything here is a pure function over [`nalgebra::DMatrix<f64>`]. Rank
//! decisions use a relative singular-value threshold so that they are
//! invariant under scaling of the input.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

/// Dense, column-major real matrix.
pub type Matrix = DMatrix<f64>;

/// Default relative threshold for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("Sylvester equation is singular: spectra overlap (gap {gap:.3e})")]
    SingularSylvester { gap: f64 },
    #[error("matrix is numerically singular")]
    Singular,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

fn ensure_square(a: &Matrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Stacks the columns of `a` into one column vector.
pub fn vec(a: &Matrix) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`]: reshapes a column vector into a `rows × cols` matrix.
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> Result<Matrix> {
    if v.len() != rows * cols {
        return Err(LinalgError::Dimension(format!(
            "cannot reshape length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(Matrix::from_column_slice(rows, cols, v.as_slice()))
}

// Padé coefficients and 1-norm thresholds for scaling and squaring
// (Higham, "The scaling and squaring method for the matrix exponential revisited").
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068e0;
const THETA13: f64 = 5.371920351148152e0;

fn norm1(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade_low(a: &Matrix, coeffs: &[f64]) -> (Matrix, Matrix) {
    let n = a.nrows();
    let a2 = a * a;
    let mut pow = Matrix::identity(n, n);
    let mut u_inner = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    for k in 0..coeffs.len() / 2 {
        v += &pow * coeffs[2 * k];
        u_inner += &pow * coeffs[2 * k + 1];
        pow = &pow * &a2;
    }
    (a * u_inner, v)
}

fn pade13(a: &Matrix) -> (Matrix, Matrix) {
    let b = &PADE13;
    let n = a.nrows();
    let id = Matrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * u_hi + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let v_hi = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * v_hi + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

/// Matrix exponential `e^{a t}` by scaling and squaring with a diagonal
/// Padé approximant (degree up to 13).
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix> {
    ensure_square(a)?;
    let at = a * t;
    let nrm = norm1(&at);
    let (u, v, squarings) = if nrm <= THETA3 {
        let (u, v) = pade_low(&at, &PADE3);
        (u, v, 0)
    } else if nrm <= THETA5 {
        let (u, v) = pade_low(&at, &PADE5);
        (u, v, 0)
    } else if nrm <= THETA7 {
        let (u, v) = pade_low(&at, &PADE7);
        (u, v, 0)
    } else if nrm <= THETA9 {
        let (u, v) = pade_low(&at, &PADE9);
        (u, v, 0)
    } else {
        let s = ((nrm / THETA13).log2().ceil()).max(0.0) as i32;
        let scaled = &at * 2f64.powi(-s);
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(LinalgError::Singular)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Eigenvalues of a real square matrix together with the spectral abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by decreasing real part, then decreasing imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub abscissa: f64,
}

impl Spectrum {
    fn from_unsorted(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|x, y| {
            y.re.partial_cmp(&x.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(y.im.partial_cmp(&x.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        let abscissa = eigenvalues
            .iter()
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            eigenvalues,
            abscissa,
        }
    }

    pub fn is_hurwitz(&self) -> bool {
        self.abscissa < 0.0
    }

    /// Eigenvalues with non-negative real part.
    pub fn unstable(&self) -> impl Iterator<Item = &Complex64> {
        self.eigenvalues.iter().filter(|e| e.re >= 0.0)
    }
}

/// All eigenvalues of `a` via the real Schur form.
pub fn eigvals(a: &Matrix) -> Result<Spectrum> {
    ensure_square(a)?;
    if a.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NoConvergence);
    }
    let balanced = balance(a);
    let n = a.nrows();
    let mut shift = 0.0;
    let mut schur = Schur::try_new(balanced.clone(), SCHUR_EPS, SCHUR_MAX_ITER);
    // The QR iteration deflates relative to the diagonal only and has no
    // exceptional shifts, so it can stall near zero eigenvalues or on
    // cycles. A diagonal shift plus an orthogonal similarity avoids both.
    let mut attempt = 0;
    while schur.is_none() && attempt < 4 {
        attempt += 1;
        shift = balanced.norm() * attempt as f64;
        let q = rotation_mix(n, attempt);
        let shifted = &q * &balanced * q.transpose() + Matrix::identity(n, n) * shift;
        schur = Schur::try_new(shifted, SCHUR_EPS, SCHUR_MAX_ITER);
    }
    let ev = schur.ok_or(LinalgError::NoConvergence)?.complex_eigenvalues();
    let mut eigenvalues: Vec<Complex64> = ev.iter().map(|z| z - shift).collect();
    // Real input: enforce exact conjugate symmetry of the pairs.
    for e in eigenvalues.iter_mut() {
        if e.im.abs() <= 1e-14 * (1.0 + e.re.abs()) {
            e.im = 0.0;
        }
    }
    Ok(Spectrum::from_unsorted(eigenvalues))
}

/// Diagonal similarity by powers of two equalizing row and column norms.
fn balance(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut b = a.clone();
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&k| k != i).map(|k| b[(k, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&k| k != i).map(|k| b[(i, k)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / 2.0 {
                f *= 2.0;
                cc *= 2.0;
                rr /= 2.0;
            }
            while cc >= rr * 2.0 {
                f /= 2.0;
                cc /= 2.0;
                rr *= 2.0;
            }
            if (cc + rr) < 0.95 * (c + r) {
                changed = true;
                b.column_mut(i).scale_mut(f);
                b.row_mut(i).scale_mut(1.0 / f);
            }
        }
        if !changed {
            break;
        }
    }
    b
}

/// Deterministic orthogonal matrix: a product of plane rotations.
fn rotation_mix(n: usize, seed: usize) -> Matrix {
    let mut q = Matrix::identity(n, n);
    for i in 0..n.saturating_sub(1) {
        let angle = 0.37 * seed as f64 + 0.61 * i as f64;
        let (s, c) = angle.sin_cos();
        for k in 0..n {
            let (x, y) = (q[(i, k)], q[(i + 1, k)]);
            q[(i, k)] = c * x - s * y;
            q[(i + 1, k)] = s * x + c * y;
        }
    }
    q
}

/// Maximum real part over the spectrum of `a`.
pub fn spectral_abscissa(a: &Matrix) -> Result<f64> {
    Ok(eigvals(a)?.abscissa)
}

/// True iff the spectral abscissa of `a` is below `-margin`.
pub fn is_hurwitz(a: &Matrix, margin: f64) -> bool {
    match eigvals(a) {
        Ok(s) => s.abscissa < -margin,
        Err(_) => false,
    }
}

/// Left singular vectors, sorted singular values and numerical rank.
#[derive(Debug, Clone)]
pub struct SvdRank {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

/// Count of singular values above `rel_tol · σ₁` (zero when `σ₁ = 0`).
pub fn rank_from_singular_values(sv: &[f64], rel_tol: f64) -> usize {
    let s1 = sv.first().copied().unwrap_or(0.0);
    if s1 <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * s1).count()
}

/// Thin singular value decomposition `a = U diag(s) Vᵀ`, `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `rows × k`, orthonormal columns.
    pub u: Matrix,
    /// Non-increasing, length `k`.
    pub s: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub v: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD of a tall matrix (`rows ≥ cols`).
fn jacobi_tall(a: &Matrix) -> ThinSvd {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = Matrix::identity(n, n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let smax = norms.iter().copied().fold(0.0, f64::max);
    let mut u = Matrix::zeros(m, n);
    let mut filled = 0;
    for &j in &order {
        if norms[j] > 0.0 && norms[j] > f64::MIN_POSITIVE * smax.max(1.0) {
            u.set_column(filled, &(w.column(j) / norms[j]));
            filled += 1;
        }
    }
    complete_basis(&mut u, filled);
    ThinSvd {
        u,
        s: order.iter().map(|&j| norms[j]).collect(),
        v: Matrix::from_fn(n, n, |r, c| v[(r, order[c])]),
    }
}

/// Fills columns `filled..` of `u` with unit vectors orthogonal to all
/// previous columns.
fn complete_basis(u: &mut Matrix, mut filled: usize) {
    let m = u.nrows();
    let mut e = 0;
    while filled < u.ncols() && e < m {
        let mut cand = DVector::zeros(m);
        cand[e] = 1.0;
        for _ in 0..2 {
            for j in 0..filled {
                let proj = u.column(j).dot(&cand);
                cand -= u.column(j) * proj;
            }
        }
        let nrm = cand.norm();
        if nrm > 1e-8 {
            u.set_column(filled, &(cand / nrm));
            filled += 1;
        }
        e += 1;
    }
}

/// Thin SVD by one-sided Jacobi rotations, accurate to working precision
/// even for rank-deficient input.
pub fn thin_svd(a: &Matrix) -> ThinSvd {
    if a.nrows() >= a.ncols() {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose());
        ThinSvd {
            u: t.v,
            s: t.s,
            v: t.u,
        }
    }
}

/// Singular values in non-increasing order with the matching left vectors.
pub fn sorted_svd(a: &Matrix) -> (Matrix, Vec<f64>) {
    let ThinSvd { u, s, .. } = thin_svd(a);
    (u, s)
}

/// SVD with a numerical rank decision.
///
/// For a square input the returned `u` is a full orthogonal basis.
pub fn svd_rank(a: &Matrix, rel_tol: f64) -> SvdRank {
    let (u, singular_values) = sorted_svd(a);
    let rank = rank_from_singular_values(&singular_values, rel_tol);
    SvdRank {
        u,
        singular_values,
        rank,
    }
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    thin_svd(a).s
}

pub fn numerical_rank(a: &Matrix, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    rank_from_singular_values(&singular_values(a), rel_tol)
}

/// 2-norm condition number; infinite for rank-deficient input.
pub fn condition_number(a: &Matrix) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Orthonormal basis of the column space of `a` at relative tolerance.
pub fn orth(a: &Matrix, rel_tol: f64) -> Matrix {
    if a.ncols() == 0 {
        return Matrix::zeros(a.nrows(), 0);
    }
    let SvdRank { u, rank, .. } = svd_rank(a, rel_tol);
    u.columns(0, rank).into_owned()
}

/// Largest principal angle (radians) by which `sub` fails to lie inside
/// the column space of `sup`. Both arguments must have orthonormal columns.
pub fn containment_angle(sub: &Matrix, sup: &Matrix) -> f64 {
    if sub.ncols() == 0 {
        return 0.0;
    }
    let residual = if sup.ncols() == 0 {
        sub.clone()
    } else {
        sub - sup * (sup.transpose() * sub)
    };
    let s = singular_values(&residual).first().copied().unwrap_or(0.0);
    s.min(1.0).asin()
}

/// Moore–Penrose pseudo-inverse with relative singular-value cutoff.
pub fn pinv(a: &Matrix, rel_tol: f64) -> Matrix {
    let ThinSvd { u, s, v } = thin_svd(a);
    let cutoff = rel_tol * s.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(a.ncols(), a.nrows());
    for (i, &si) in s.iter().enumerate() {
        if si > cutoff {
            out += v.column(i) * u.column(i).transpose() / si;
        }
    }
    out
}

/// Unique `X` with `X·a − f·X = q`.
///
/// Both coefficient matrices are reduced to complex Schur form and the
/// resulting triangular equation is solved column by column.
pub fn solve_sylvester(a: &Matrix, f: &Matrix, q: &Matrix) -> Result<Matrix> {
    ensure_square(a)?;
    ensure_square(f)?;
    let (rows, cols) = (f.nrows(), a.nrows());
    if q.nrows() != rows || q.ncols() != cols {
        return Err(LinalgError::Dimension(format!(
            "q is {}x{}, expected {rows}x{cols}",
            q.nrows(),
            q.ncols()
        )));
    }
    let to_c = |m: &Matrix| m.map(|x| Complex64::new(x, 0.0));
    let (ua, ta) = Schur::try_new(to_c(a), SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or(LinalgError::NoConvergence)?
        .unpack();
    let (uf, tf) = Schur::try_new(to_c(f), SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or(LinalgError::NoConvergence)?
        .unpack();

    let scale = 1.0 + a.norm() + f.norm();
    let mut gap = f64::INFINITY;
    for j in 0..cols {
        for i in 0..rows {
            gap = gap.min((ta[(j, j)] - tf[(i, i)]).norm());
        }
    }
    if gap <= 1e-10 * scale {
        return Err(LinalgError::SingularSylvester { gap });
    }

    // Y·Ta − Tf·Y = C with C = Ufᴴ q Ua.
    let c = uf.adjoint() * to_c(q) * &ua;
    let mut y = DMatrix::<Complex64>::zeros(rows, cols);
    for j in 0..cols {
        let mut rhs: DVector<Complex64> = c.column(j).into_owned();
        for k in 0..j {
            let coef = ta[(k, j)];
            rhs -= y.column(k) * coef;
        }
        // (ta_jj I − Tf) y_j = rhs, upper triangular.
        let d = ta[(j, j)];
        let mut col = DVector::<Complex64>::zeros(rows);
        for i in (0..rows).rev() {
            let mut acc = rhs[i];
            for k in i + 1..rows {
                acc += tf[(i, k)] * col[k];
            }
            col[i] = acc / (d - tf[(i, i)]);
        }
        y.set_column(j, &col);
    }
    let x = &uf * y * ua.adjoint();
    Ok(x.map(|z| z.re))
}

/// PBH stabilizability test: `[λI − a | b]` has full row rank for every
/// eigenvalue `λ` of `a` with non-negative real part.
pub fn pbh_stabilizable(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    pbh_min_ratio(a, b).map(|r| r > tol).unwrap_or(false)
}

/// Smallest ratio `σ_min/σ_max` of `[λI − a | b]` over the closed right
/// half-plane eigenvalues of `a`; `+∞` if `a` is Hurwitz.
pub fn pbh_min_ratio(a: &Matrix, b: &Matrix) -> Result<f64> {
    ensure_square(a)?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(LinalgError::Dimension(format!(
            "b has {} rows, expected {n}",
            b.nrows()
        )));
    }
    let spec = eigvals(a)?;
    let mut worst = f64::INFINITY;
    for lam in spec.unstable() {
        // Real embedding [[X, −Y], [Y, X]] of X + iY has every singular
        // value of the complex matrix twice.
        let cols = n + b.ncols();
        let mut re = Matrix::zeros(n, cols);
        re.view_mut((0, 0), (n, n)).copy_from(&(Matrix::identity(n, n) * lam.re - a));
        re.view_mut((0, n), (n, b.ncols())).copy_from(b);
        let mut im = Matrix::zeros(n, cols);
        im.view_mut((0, 0), (n, n)).copy_from(&(Matrix::identity(n, n) * lam.im));
        let mut m = Matrix::zeros(2 * n, 2 * cols);
        m.view_mut((0, 0), (n, cols)).copy_from(&re);
        m.view_mut((0, cols), (n, cols)).copy_from(&(-&im));
        m.view_mut((n, 0), (n, cols)).copy_from(&im);
        m.view_mut((n, cols), (n, cols)).copy_from(&re);
        let sv = singular_values(&m);
        let hi = sv.first().copied().unwrap_or(0.0);
        let lo = sv.last().copied().unwrap_or(0.0);
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        worst = worst.min(ratio);
    }
    Ok(worst)
}

/// `[b, ab, …, a^{n−1}b]`.
pub fn controllability_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = Matrix::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        out.columns_mut(k * m, m).copy_from(&blk);
        blk = a * blk;
    }
    out
}

/// Orthonormal basis of the smallest `a`-invariant subspace containing the
/// columns of `b` (the reachable subspace of the pair).
pub fn reachable_subspace(a: &Matrix, b: &Matrix, rel_tol: f64) -> Matrix {
    let mut basis = orth(b, rel_tol);
    loop {
        if basis.ncols() == 0 {
            return basis;
        }
        let grown = {
            let image = a * &basis;
            let mut w = Matrix::zeros(a.nrows(), basis.ncols() * 2);
            w.columns_mut(0, basis.ncols()).copy_from(&basis);
            w.columns_mut(basis.ncols(), basis.ncols()).copy_from(&image);
            orth(&w, rel_tol)
        };
        if grown.ncols() <= basis.ncols() {
            return basis;
        }
        basis = grown;
    }
}

/// Eigenvalues of a symmetric matrix, non-decreasing.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn is_diagonal(a: &Matrix) -> bool {
    a.nrows() == a.ncols()
        && (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || a[(i, j)] == 0.0))
}

/// Builds a dense matrix from row-major nested vectors.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    if nr == 0 || nc == 0 {
        return Err(LinalgError::Dimension("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != nc) {
        return Err(LinalgError::Dimension("ragged rows".into()));
    }
    Ok(Matrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Row-major nested vectors, the inverse of [`from_rows`].
pub fn to_rows(a: &Matrix) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}
