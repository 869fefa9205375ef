//! Monte Carlo validation: random minimal plants, one experiment each,
//! synthesis from the recorded data, and an oracle check of the closed loop.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::plant::{random_minimal_system, Oracle};
use crate::simulation::{multisine, simulate_plant, DEFAULT_AMP_RANGE, DEFAULT_FREQ_RANGE};
use crate::synthesis::{synthesize, verify_closed_loop, SynthesisConfig};

/// Experiment and synthesis settings shared by all trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub trials: usize,
    pub seed: u64,
    pub t_d: f64,
    pub record_dt: f64,
    pub int_dt: f64,
    /// Template; `n` is overwritten per campaign.
    pub synthesis: SynthesisConfig,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        Self {
            n: 2,
            m: 1,
            p: 1,
            trials: 50,
            seed: 0,
            t_d: 3.0,
            record_dt: 1e-3,
            int_dt: 1e-4,
            synthesis: SynthesisConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrialOutcome {
    pub index: usize,
    pub seed: u64,
    /// Stage that rejected the trial, if any.
    pub failed_stage: Option<String>,
    pub message: Option<String>,
    pub lmi_feasible: bool,
    pub abscissa: Option<f64>,
    pub hurwitz: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CampaignSummary {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub trials: usize,
    pub seed: u64,
    pub successes: usize,
    pub success_rate: f64,
    /// Trials where the LMI was feasible but the loop was not Hurwitz.
    pub feasible_not_hurwitz: usize,
    pub abscissa_quantiles: Option<Quantiles>,
    pub failure_stages: BTreeMap<String, usize>,
    pub outcomes: Vec<TrialOutcome>,
}

fn trial_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs trial `index` of `spec`.
pub fn run_trial(spec: &CampaignSpec, index: usize) -> TrialOutcome {
    let seed = trial_seed(spec.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = TrialOutcome {
        index,
        seed,
        failed_stage: None,
        message: None,
        lmi_feasible: false,
        abscissa: None,
        hurwitz: false,
    };
    let fail = |out: &mut TrialOutcome, stage: &str, msg: String| {
        out.failed_stage = Some(stage.to_string());
        out.message = Some(msg);
    };

    let sys = match random_minimal_system(spec.n, spec.m, spec.p, rng.random()) {
        Ok(s) => s,
        Err(e) => {
            fail(&mut out, "system", e.to_string());
            return out;
        }
    };
    let x0 = DVector::from_fn(spec.n, |_, _| rng.sample(StandardNormal));
    let input = multisine(spec.m, rng.random(), DEFAULT_AMP_RANGE, DEFAULT_FREQ_RANGE);
    let data = match simulate_plant(&sys, &x0, &input, spec.t_d, spec.record_dt, spec.int_dt) {
        Ok(d) => d,
        Err(e) => {
            fail(&mut out, "simulate", e.to_string());
            return out;
        }
    };
    let config = SynthesisConfig {
        n: spec.n,
        ..spec.synthesis.clone()
    };
    let run = match synthesize(&data, &config) {
        Ok(r) => r,
        Err(e) => {
            fail(&mut out, e.stage.as_str(), e.message);
            return out;
        }
    };
    out.lmi_feasible = true;
    let oracle = match Oracle::new(&sys, &config.filter_matrix(), &x0, rng.random()) {
        Ok(o) => o,
        Err(e) => {
            fail(&mut out, "oracle", e.to_string());
            return out;
        }
    };
    match verify_closed_loop(&run.controller, &oracle.extended) {
        Ok(spec) => {
            out.abscissa = Some(spec.abscissa);
            out.hurwitz = spec.is_hurwitz();
            if !out.hurwitz {
                fail(&mut out, "verify", format!("closed-loop abscissa {}", spec.abscissa));
            }
        }
        Err(e) => fail(&mut out, "verify", e.to_string()),
    }
    out
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Runs all trials in parallel; the result does not depend on scheduling.
pub fn run_campaign(spec: &CampaignSpec) -> CampaignSummary {
    let outcomes: Vec<TrialOutcome> = (0..spec.trials).into_par_iter().map(|i| run_trial(spec, i)).collect();
    let successes = outcomes.iter().filter(|o| o.hurwitz).count();
    let mut failure_stages = BTreeMap::new();
    for o in &outcomes {
        if let Some(s) = &o.failed_stage {
            *failure_stages.entry(s.clone()).or_insert(0) += 1;
        }
    }
    let mut absc: Vec<f64> = outcomes.iter().filter_map(|o| o.abscissa).collect();
    absc.sort_by(f64::total_cmp);
    let abscissa_quantiles = (!absc.is_empty()).then(|| Quantiles {
        min: absc[0],
        q25: quantile(&absc, 0.25),
        median: quantile(&absc, 0.5),
        q75: quantile(&absc, 0.75),
        max: absc[absc.len() - 1],
    });
    CampaignSummary {
        n: spec.n,
        m: spec.m,
        p: spec.p,
        trials: spec.trials,
        seed: spec.seed,
        successes,
        success_rate: if spec.trials == 0 {
            0.0
        } else {
            successes as f64 / spec.trials as f64
        },
        feasible_not_hurwitz: outcomes.iter().filter(|o| o.lmi_feasible && !o.hurwitz).count(),
        abscissa_quantiles,
        failure_stages,
        outcomes,
    }
}
