//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p ddstab --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ddstab::campaign::{run_campaign, CampaignSpec};
use ddstab::decomposition::{reachability_angle, verify_decomposition};
use ddstab::kfilter::{build_filter, filter_rhs};
use ddstab::linalg::{self, eigvals, expm, pbh_min_ratio, Matrix};
use ddstab::lmi::{self, StabilizationLmi};
use ddstab::plant::{canonical_realization, luenberger_embedding, random_minimal_system, ContinuousLtiSystem, Oracle};
use ddstab::simulation::{
    multisine, rk4_step, simulate_closed_loop, simulate_plant, simulate_plant_with_filter, DEFAULT_AMP_RANGE,
    DEFAULT_FREQ_RANGE,
};
use ddstab::synthesis::{diagonal, gain_from_q, synthesize, verify_closed_loop, SynthesisConfig};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const EXPERIMENT_SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn example1_spectrum() -> Outcome {
    let sys = ContinuousLtiSystem::example1();
    let spec = eigvals(&sys.a).unwrap();
    let want = [
        Complex64::new(3.2188, 0.0),
        Complex64::new(0.3906, 1.5274),
        Complex64::new(0.3906, -1.5274),
    ];
    let err = want
        .iter()
        .map(|w| spec.eigenvalues.iter().map(|z| (z - w).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    outcome(err <= 1e-3, format!("max eigenvalue error {err:.2e}"))
}

fn pbh() -> Outcome {
    let sys = ContinuousLtiSystem::example1();
    let f = diagonal(&[-20.0, -36.0, -40.0]);
    let emb = luenberger_embedding(&sys, &f, EXPERIMENT_SEED).unwrap();
    let nmr = canonical_realization(&sys, &emb).unwrap();
    let n_xi = nmr.a_xi.nrows();
    let spec = eigvals(&nmr.a_xi).unwrap();
    let mut worst_rank = n_xi;
    for lam in spec.unstable() {
        let mut re = Matrix::zeros(n_xi, n_xi + nmr.b_xi.ncols());
        re.view_mut((0, 0), (n_xi, n_xi))
            .copy_from(&(Matrix::identity(n_xi, n_xi) * lam.re - &nmr.a_xi));
        re.view_mut((0, n_xi), (n_xi, nmr.b_xi.ncols())).copy_from(&nmr.b_xi);
        let mut emb2 = Matrix::zeros(2 * n_xi, 2 * re.ncols());
        let im = Matrix::identity(n_xi, n_xi) * lam.im;
        emb2.view_mut((0, 0), (n_xi, re.ncols())).copy_from(&re);
        emb2.view_mut((n_xi, re.ncols()), (n_xi, re.ncols())).copy_from(&re);
        emb2.view_mut((0, re.ncols()), (n_xi, n_xi)).copy_from(&(-&im));
        emb2.view_mut((n_xi, 0), (n_xi, n_xi)).copy_from(&im);
        worst_rank = worst_rank.min(linalg::numerical_rank(&emb2, 1e-10) / 2);
    }
    let ratio = pbh_min_ratio(&nmr.a_xi, &nmr.b_xi).unwrap();
    let ok = linalg::pbh_stabilizable(&nmr.a_xi, &nmr.b_xi, 1e-10) && worst_rank == n_xi && n_xi == 36;
    outcome(
        ok,
        format!(
            "{} unstable eigenvalues, min rank {worst_rank} of {n_xi}, min sigma ratio {ratio:.2e}",
            spec.unstable().count()
        ),
    )
}

fn lemma1_identity() -> Outcome {
    let sys = ContinuousLtiSystem::example1();
    let f = diagonal(&[-20.0, -36.0, -45.0]);
    let bank = build_filter(3, 2, 2, &f).unwrap();
    let emb = luenberger_embedding(&sys, &f, EXPERIMENT_SEED).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(EXPERIMENT_SEED);
    let x0 = DVector::from_fn(3, |_, _| rng.sample(StandardNormal));
    let m0 = randn(&mut rng, 3, bank.mu);
    let input = multisine(2, EXPERIMENT_SEED, DEFAULT_AMP_RANGE, DEFAULT_FREQ_RANGE);
    let traj = simulate_plant_with_filter(&sys, &bank, &x0, &m0, &input, 3.0, 1e-4, 10).unwrap();
    let beta0 = &emb.t_mat * &x0 - &m0 * &emb.theta;
    let mut worst: f64 = 0.0;
    for (k, &t) in traj.times.iter().enumerate() {
        let m = Matrix::from_column_slice(3, bank.mu, traj.xi.column(k).as_slice());
        let decay = expm(&f, t).unwrap() * &beta0;
        let r = &emb.t_mat * traj.x.column(k) - &m * &emb.theta - decay;
        worst = worst.max(r.norm());
    }
    let bound = 1e-6 * (1.0 + x0.norm());
    outcome(worst <= bound, format!("max residual {worst:.2e} (bound {bound:.2e})"))
}

fn vectorization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(EXPERIMENT_SEED);
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let (n, m, p) = (1 + trial % 3, 1 + (trial / 3) % 2, 1 + (trial / 6) % 2);
        let lam: Vec<f64> = (0..n).map(|i| -1.0 - i as f64 * 1.7 - rng.random::<f64>()).collect();
        let bank = build_filter(n, m, p, &diagonal(&lam)).unwrap();
        let mm = randn(&mut rng, n, bank.mu);
        let u = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
        let y = DVector::from_fn(p, |_, _| rng.sample(StandardNormal));
        let a = filter_rhs(&bank, &mm, &u, &y).unwrap();
        let b = bank.vectorized_rhs(&linalg::vec(&mm), &u, &y);
        worst = worst.max((linalg::vec(&a) - b).amax());
    }
    outcome(worst <= 1e-13, format!("max discrepancy {worst:.2e} over 1000 triples"))
}

fn realization_relations() -> Outcome {
    let mut systems = vec![ContinuousLtiSystem::example1()];
    for s in 0..20 {
        let (n, m, p) = (1 + s % 3, 1 + (s / 3) % 2, 1 + (s / 6) % 2);
        systems.push(random_minimal_system(n, m, p, 100 + s as u64).unwrap());
    }
    let mut worst: f64 = 0.0;
    for (i, sys) in systems.iter().enumerate() {
        let n = sys.a.nrows();
        // Filter poles at the plant's scale keep T, and hence Π, well conditioned.
        let ev: Vec<f64> = (0..n).map(|k| -2.0 - 2.0 * k as f64).collect();
        let emb = luenberger_embedding(sys, &diagonal(&ev), i as u64).unwrap();
        let r = canonical_realization(sys, &emb).unwrap();
        let e1 = (&sys.a * &r.pi - &r.pi * &r.a_xi).norm();
        let e2 = (&sys.b - &r.pi * &r.b_xi).norm();
        let e3 = (&r.c_xi - &sys.c * &r.pi).norm();
        worst = worst.max(e1).max(e2).max(e3);
    }
    outcome(worst <= 1e-8, format!("max Frobenius residual {worst:.2e} over 21 systems"))
}

struct Example1Run {
    sys: ContinuousLtiSystem,
    oracle: Oracle,
    run: ddstab::synthesis::SynthesisRun,
}

fn example1_run() -> Result<Example1Run, String> {
    let sys = ContinuousLtiSystem::example1();
    let mut rng = ChaCha8Rng::seed_from_u64(EXPERIMENT_SEED);
    let x0 = DVector::from_fn(3, |_, _| rng.sample(StandardNormal));
    let input = multisine(2, EXPERIMENT_SEED, DEFAULT_AMP_RANGE, DEFAULT_FREQ_RANGE);
    let data = simulate_plant(&sys, &x0, &input, 3.0, 1e-3, 1e-4).map_err(|e| e.to_string())?;
    let config = SynthesisConfig {
        filter_eigenvalues: Some(vec![-20.0, -36.0, -40.0]),
        period: 0.01,
        ..SynthesisConfig::for_order(3)
    };
    let run = synthesize(&data, &config).map_err(|e| format!("{}: {}", e.stage, e.message))?;
    let oracle = Oracle::new(&sys, &config.filter_matrix(), &x0, EXPERIMENT_SEED).map_err(|e| e.to_string())?;
    Ok(Example1Run { sys, oracle, run })
}

fn decomposition(ex: &Result<Example1Run, String>) -> Outcome {
    let ex = match ex {
        Ok(e) => e,
        Err(e) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let rep = verify_decomposition(&ex.oracle.extended, &ex.run.decomposition);
    let angle = reachability_angle(&ex.oracle.extended, &ex.run.decomposition, 1e-10);
    let ab = rep.a_b_abscissa.unwrap_or(f64::NEG_INFINITY);
    let ok = rep.a_ba_norm <= 1e-5 * rep.a_e_norm && rep.b_b_norm <= 1e-8 && ab < 0.0 && angle <= 1e-6;
    outcome(
        ok,
        format!(
            "l = {}, |A_ba| = {:.2e} (bound {:.2e}), |B_b| = {:.2e}, abscissa(A_b) = {ab:.3}, angle = {angle:.2e}",
            ex.run.decomposition.l,
            rep.a_ba_norm,
            1e-5 * rep.a_e_norm,
            rep.b_b_norm
        ),
    )
}

fn end_to_end(ex: &Result<Example1Run, String>) -> Outcome {
    let ex = match ex {
        Ok(e) => e,
        Err(e) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let spec = verify_closed_loop(&ex.run.controller, &ex.oracle.extended).unwrap();
    let x0 = DVector::from_vec(vec![-1.0, 1.0, 2.0]);
    let traj = simulate_closed_loop(&ex.sys, &ex.run.controller, &x0, 10.0, 1e-4, 1000).unwrap();
    let last = *traj.x_norm.last().unwrap();
    let shape = ex.run.controller.k_e.shape();
    let ok = spec.is_hurwitz() && spec.abscissa < 0.0 && last <= 1e-2 * x0.norm() && shape == (2, 39);
    outcome(
        ok,
        format!(
            "K_e {}x{}, abscissa {:.4}, |x(10)|/|x0| = {:.2e}",
            shape.0,
            shape.1,
            spec.abscissa,
            last / x0.norm()
        ),
    )
}

fn scalar_lmi() -> Outcome {
    let row = |v: &[f64]| Matrix::from_row_slice(1, v.len(), v);
    let (z, zd, u) = (row(&[1.0, 1.0]), row(&[1.0, -2.0]), row(&[0.0, -3.0]));
    // Data identify a = 1, b = 1.
    let q = Matrix::from_column_slice(2, 1, &[0.0, 1.0]);
    let k = gain_from_q(&q, &z, &u).unwrap()[(0, 0)];
    let closed = 1.0 + k;
    let problem = StabilizationLmi::new(z.clone(), zd.clone()).unwrap();
    let solved = lmi::solve(&problem).unwrap();
    let implied = (&zd * &solved.q)[(0, 0)] / (&z * &solved.q)[(0, 0)];
    let contradictory = StabilizationLmi::new(row(&[1.0]), row(&[1.0])).unwrap();
    let infeasible = matches!(lmi::solve(&contradictory), Err(lmi::LmiError::Infeasible { .. }));
    let ok = (closed + 2.0).abs() <= 1e-9 && solved.satisfies(0.0) && implied < 0.0 && infeasible;
    outcome(
        ok,
        format!("a+bK = {closed}, solver closed loop {implied:.3}, contradictory instance infeasible: {infeasible}"),
    )
}

fn monte_carlo() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, m, p) in [(2, 1, 1), (2, 2, 1), (3, 2, 2)] {
        let s = run_campaign(&CampaignSpec {
            n,
            m,
            p,
            trials: 50,
            seed: 2024,
            ..CampaignSpec::default()
        });
        let bad_stage = s
            .outcomes
            .iter()
            .filter_map(|o| o.failed_stage.as_deref())
            .filter(|st| *st != "check_excitation")
            .count();
        ok &= s.successes >= 45 && s.feasible_not_hurwitz == 0 && bad_stage == 0;
        parts.push(format!("({n},{m},{p}) {}/50 {:?}", s.successes, s.failure_stages));
    }
    outcome(ok, parts.join(", "))
}

fn integrator_order() -> Outcome {
    let a = ContinuousLtiSystem::example1().a;
    let x0 = DVector::from_vec(vec![1.0, -1.0, 0.5]);
    let t_end = 1.0;
    let exact = expm(&a, t_end).unwrap() * &x0;
    let err = |h: f64| {
        let steps = (t_end / h).round() as usize;
        let mut x = x0.clone();
        for k in 0..steps {
            x = rk4_step(|_, s: &DVector<f64>| &a * s, &x, k as f64 * h, h).unwrap();
        }
        (x - &exact).norm()
    };
    let ratio = err(0.01) / err(0.005);
    outcome((12.0..=20.0).contains(&ratio), format!("error ratio {ratio:.2}"))
}

fn main() -> ExitCode {
    let mut all = true;
    // `prior` is time already spent on shared work the criterion depends on.
    let mut report = |id: usize, name: &str, limit: Duration, prior: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let took = prior + start.elapsed();
        let pass = o.pass && took <= limit;
        all &= pass;
        println!(
            "criterion {id:>2} [{}] {name}: {} ({:.3} s, limit {:.3} s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            limit.as_secs_f64()
        );
    };
    let ms = Duration::from_millis;
    let s = Duration::from_secs;
    let zero = Duration::ZERO;
    report(1, "example spectrum", ms(1), zero, &mut example1_spectrum);
    report(2, "PBH stabilizability of the realization", s(1), zero, &mut pbh);
    report(3, "filter reconstruction identity", s(5), zero, &mut lemma1_identity);
    report(4, "vectorized filter equivalence", s(1), zero, &mut vectorization);
    report(5, "realization relations", s(5), zero, &mut realization_relations);
    let start = Instant::now();
    let pipeline = example1_run();
    let pipeline_time = start.elapsed();
    report(6, "data-based decomposition", s(10), pipeline_time, &mut || decomposition(&pipeline));
    report(7, "end-to-end stabilization", s(60), pipeline_time, &mut || end_to_end(&pipeline));
    report(8, "scalar LMI oracle", s(1), zero, &mut scalar_lmi);
    report(9, "Monte Carlo", s(600), zero, &mut monte_carlo);
    report(10, "RK4 order", s(5), zero, &mut integrator_order);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
