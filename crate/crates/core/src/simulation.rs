//! Simulated SEU agents facing elicitation mechanisms.
//!
//! A simulated agent holds a ground-truth joint belief over `S x T` and
//! money-linear utilities with state-dependent slopes. Asked directly about
//! `S` under a quadratic scoring rule, she shades her report toward the
//! states where money matters more to her; asked about `T` given each state
//! of a suitable proxy, she reports truthfully. The harness runs both routes
//! side by side and measures how far each lands from the truth.
//!
//! The optional motivated tilt distorts the agent's belief itself:
//! within every proxy outcome `t`, `pi(s|t)` is reweighted by `w(s)^lambda`
//! where `w` are the agent's state weights against a state-independent
//! representation (proportional to her slopes). The prior over `T` is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::identification::{
    debias_identify_binary, grether_update, identify, GretherParams, InconsistencyPolicy, Tolerances,
};
use crate::probability::{Belief, ConditionalFamily, JointBelief};
use crate::proxy::{build_influential_action, check_p3, ProxySpec, DEFAULT_P3_TOL};
use crate::seu::state_weights;

/// Largest condition number accepted for randomly drawn conditional families.
pub const MAX_SAMPLED_CONDITION: f64 = 1e4;

/// Floor added to every Dirichlet draw before normalizing.
const CELL_FLOOR: f64 = 0.01;

/// A simulated agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSpec {
    pub truth_joint: JointBelief,
    /// Marginal utility of money per state, aligned with the joint's rows.
    pub gamma: Vec<f64>,
    pub grether: Option<GretherParams>,
    /// Motivated-belief intensity; zero is the rational benchmark.
    pub motivated_tilt: f64,
}

impl AgentSpec {
    pub fn new(truth_joint: JointBelief, gamma: Vec<f64>) -> Result<Self> {
        let agent = AgentSpec {
            truth_joint,
            gamma,
            grether: None,
            motivated_tilt: 0.0,
        };
        agent.validate()?;
        Ok(agent)
    }

    pub fn validate(&self) -> Result<()> {
        let labels = self.truth_joint.row_labels();
        if self.gamma.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                found: self.gamma.len(),
            });
        }
        for (label, &g) in labels.iter().zip(&self.gamma) {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::NonpositiveSlope {
                    label: label.clone(),
                    value: g,
                });
            }
        }
        if !(self.motivated_tilt >= 0.0) || !self.motivated_tilt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "motivated tilt {} must be >= 0",
                self.motivated_tilt
            )));
        }
        if let Some(p) = self.grether {
            p.validate()?;
        }
        Ok(())
    }

    /// The joint belief the agent actually holds, after the motivated tilt.
    pub fn held_joint(&self) -> Result<JointBelief> {
        if self.motivated_tilt == 0.0 {
            return Ok(self.truth_joint.clone());
        }
        let mu = self.truth_joint.marginal_rows();
        mu.require_full_support()?;
        // State-independent representation of the agent: mu_bar ∝ mu * gamma.
        let masses: Vec<f64> = mu.weights().iter().zip(&self.gamma).map(|(m, g)| m * g).collect();
        let mu_bar = Belief::from_masses(mu.labels().to_vec(), &masses)?;
        let w = state_weights(&mu_bar, &mu)?;
        let tilt: Vec<f64> = w.weights().iter().map(|x| x.powf(self.motivated_tilt)).collect();

        let j = &self.truth_joint;
        let columns: Vec<Vec<f64>> = (0..j.n_cols())
            .map(|t| {
                let column: Vec<f64> = (0..j.n_rows()).map(|s| j.cell(s, t)).collect();
                let mass: f64 = column.iter().sum();
                let tilted: Vec<f64> = column.iter().zip(&tilt).map(|(c, w)| c * w).collect();
                let z: f64 = tilted.iter().sum();
                if z > 0.0 {
                    tilted.iter().map(|x| mass * x / z).collect()
                } else {
                    column
                }
            })
            .collect();
        let rows = (0..j.n_rows())
            .map(|s| columns.iter().map(|c| c[s]).collect())
            .collect();
        JointBelief::new(j.row_labels().to_vec(), j.col_labels().to_vec(), rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    QuadraticScoringRule,
}

/// A direct elicitation mechanism over `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    /// Flat fee scale of the payment.
    pub stake: f64,
}

impl MechanismSpec {
    pub fn quadratic(stake: f64) -> Result<Self> {
        if !(stake > 0.0) || !stake.is_finite() {
            return Err(Error::InvalidParameter(format!("stake must be positive, got {stake}")));
        }
        Ok(MechanismSpec {
            kind: MechanismKind::QuadraticScoringRule,
            stake,
        })
    }

    /// Payment `stake * (1 - sum_j (1{j = realized} - r_j)^2)`.
    pub fn payment(&self, report: &[f64], realized: usize) -> f64 {
        let penalty: f64 = report
            .iter()
            .enumerate()
            .map(|(j, r)| {
                let hit = if j == realized { 1.0 } else { 0.0 };
                (hit - r).powi(2)
            })
            .sum();
        self.stake * (1.0 - penalty)
    }

    /// Expected utility of a report for an agent with belief `mu` and
    /// money slopes `gamma`.
    pub fn expected_utility(&self, mu: &[f64], gamma: &[f64], report: &[f64]) -> f64 {
        mu.iter()
            .zip(gamma)
            .enumerate()
            .map(|(s, (m, g))| m * g * self.payment(report, s))
            .sum()
    }
}

/// Best response to the quadratic scoring rule: `r(s) ∝ mu(s) gamma_s`.
/// Independent of the stake.
pub fn qsr_optimal_report(mu: &Belief, gamma: &[f64]) -> Result<Belief> {
    mu.require_full_support()?;
    if gamma.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            found: gamma.len(),
        });
    }
    for (label, &g) in mu.labels().iter().zip(gamma) {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::NonpositiveSlope {
                label: label.clone(),
                value: g,
            });
        }
    }
    if gamma.iter().all(|&g| g == gamma[0]) {
        return Ok(mu.clone());
    }
    let masses: Vec<f64> = mu.weights().iter().zip(gamma).map(|(m, g)| m * g).collect();
    Belief::from_masses(mu.labels().to_vec(), &masses)
}

/// The report the agent gives when asked directly about `S`.
pub fn simulate_direct_elicitation(agent: &AgentSpec, mech: &MechanismSpec, event: &[String]) -> Result<Belief> {
    agent.validate()?;
    match mech.kind {
        MechanismKind::QuadraticScoringRule => {}
    }
    let mu = agent.held_joint()?.condition_on_event(event)?;
    qsr_optimal_report(&mu, &agent.gamma)
}

/// Conditional reports `pi_T(.|s)` from a suitable proxy: truthful (or
/// Grether-distorted if the agent updates that way), optionally perturbed
/// by Gaussian noise in log-odds (binary `T`) or log coordinates.
pub fn simulate_conditional_elicitation(agent: &AgentSpec, noise_sigma: f64, seed: u64) -> Result<ConditionalFamily> {
    agent.validate()?;
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise sigma {noise_sigma} must be >= 0"
        )));
    }
    let held = agent.held_joint()?;
    let exact = match agent.grether {
        None => held.conditional_family()?,
        Some(params) => {
            let by_outcome = held
                .col_labels()
                .iter()
                .map(|t| held.condition_on_event(&[t]))
                .collect::<Result<Vec<_>>>()?;
            let likelihoods = ConditionalFamily::new(held.col_labels().to_vec(), by_outcome)?;
            grether_update(&held.marginal_cols(), &likelihoods, params)?
        }
    };
    if noise_sigma == 0.0 {
        return Ok(exact);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let rows = exact
        .rows()
        .iter()
        .map(|row| {
            row.require_full_support()?;
            let labels = row.labels().to_vec();
            let w = row.weights();
            if w.len() == 2 {
                let log_odds = (w[0] / w[1]).ln() + normal.sample(&mut rng);
                let p = 1.0 / (1.0 + (-log_odds).exp());
                Belief::new(labels, vec![p, 1.0 - p])
            } else {
                let logs: Vec<f64> = w.iter().map(|x| x.ln() + normal.sample(&mut rng)).collect();
                let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let masses: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
                Belief::from_masses(labels, &masses)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ConditionalFamily::new(exact.state_labels().to_vec(), rows)
}

/// Direct report versus proxy identification for one agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub naive_report: Belief,
    pub identified_mu: Belief,
    pub truth_mu: Belief,
    pub naive_l1: f64,
    pub proxy_l1: f64,
    pub residual_norm: f64,
    pub seed: u64,
}

/// Runs both routes for one agent. Noisy reports rarely satisfy the
/// total-probability system exactly, so inconsistency is recorded in the
/// residual rather than treated as failure. If the agent updates in the
/// Grether form, identification inverts it with her parameters (binary
/// `S` and `T` only).
pub fn run_pipeline(
    agent: &AgentSpec,
    proxy: &ProxySpec,
    mech: &MechanismSpec,
    noise_sigma: f64,
    seed: u64,
) -> Result<PipelineReport> {
    if !agent.truth_joint.marginal_cols().same_support(proxy.prior()) {
        return Err(Error::LabelMismatch(
            "proxy labels differ from the agent's proxy outcomes".into(),
        ));
    }
    let event = proxy.uninformative_event();
    let truth_mu = agent.truth_joint.condition_on_event(event)?;
    let naive_report = simulate_direct_elicitation(agent, mech, event)?;
    let elicited = simulate_conditional_elicitation(agent, noise_sigma, seed)?;
    let tol = Tolerances {
        on_inconsistent: InconsistencyPolicy::Warn,
        ..Tolerances::default()
    };
    let (identified_mu, residual_norm) = match agent.grether {
        Some(params) if params != GretherParams::BAYES => {
            let r = debias_identify_binary(proxy.prior(), &elicited, params, event)?;
            (r.mu, 0.0)
        }
        _ => {
            let r = identify(proxy, &elicited, &tol)?;
            (r.mu, r.diagnostics.residual_norm)
        }
    };
    Ok(PipelineReport {
        naive_l1: naive_report.l1_distance(&truth_mu)?,
        proxy_l1: identified_mu.l1_distance(&truth_mu)?,
        naive_report,
        identified_mu,
        truth_mu,
        residual_norm,
        seed,
    })
}

/// Per-trial seed derived from the master seed, independent of scheduling.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(trial.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws a full-support `K x N` joint whose conditional family passes the
/// rank test with condition number at most [`MAX_SAMPLED_CONDITION`].
pub fn sample_joint<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize) -> Result<JointBelief> {
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= K <= N, got K = {k}, N = {n}"
        )));
    }
    let rows: Vec<String> = (1..=k).map(|i| format!("s{i}")).collect();
    let cols: Vec<String> = (1..=n).map(|i| format!("t{i}")).collect();
    for _ in 0..10_000 {
        let raw: Vec<f64> = (0..k * n)
            .map(|_| <Exp1 as Distribution<f64>>::sample(&Exp1, rng) + CELL_FLOOR)
            .collect();
        let total: f64 = raw.iter().sum();
        let table = raw.chunks(n).map(|r| r.iter().map(|v| v / total).collect()).collect();
        let joint = JointBelief::new(rows.clone(), cols.clone(), table)?;
        let p3 = check_p3(&joint.conditional_family()?, DEFAULT_P3_TOL);
        if p3.independent && p3.condition_number <= MAX_SAMPLED_CONDITION {
            return Ok(joint);
        }
    }
    Err(Error::NotIdentifiable("could not draw a well-conditioned joint".into()))
}

/// Settings for a batch of random instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub n_trials: usize,
    pub k: usize,
    pub n: usize,
    /// Range of the money slope for each state, drawn uniformly.
    pub gamma_ranges: Vec<(f64, f64)>,
    pub noise_sigma: f64,
    pub motivated_tilt: f64,
    pub stake: f64,
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n < self.k {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= K <= N, got K = {}, N = {}",
                self.k, self.n
            )));
        }
        if self.gamma_ranges.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                found: self.gamma_ranges.len(),
            });
        }
        if let Some((lo, hi)) = self.gamma_ranges.iter().find(|(lo, hi)| !(*lo > 0.0 && lo <= hi)) {
            return Err(Error::InvalidParameter(format!("bad slope range [{lo}, {hi}]")));
        }
        if !(self.noise_sigma >= 0.0 && self.motivated_tilt >= 0.0) {
            return Err(Error::InvalidParameter("noise and tilt must be nonnegative".into()));
        }
        MechanismSpec::quadratic(self.stake)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub naive_l1: Option<f64>,
    pub proxy_l1: Option<f64>,
    /// `ok` or the error code of a failed trial.
    pub status: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

impl Stats {
    /// Fixed-order summary; `None` for an empty sample.
    fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let median = if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        };
        Some(Stats {
            mean,
            median,
            max: sorted[m - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n_ok: usize,
    pub n_failed: usize,
    pub naive_l1: Option<Stats>,
    pub proxy_l1: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTable {
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
}

impl SimulationTable {
    fn from_rows(rows: Vec<TrialRow>) -> Self {
        let naive: Vec<f64> = rows.iter().filter_map(|r| r.naive_l1).collect();
        let proxy: Vec<f64> = rows.iter().filter_map(|r| r.proxy_l1).collect();
        let summary = Summary {
            n_ok: naive.len(),
            n_failed: rows.len() - naive.len(),
            naive_l1: Stats::of(&naive),
            proxy_l1: Stats::of(&proxy),
        };
        SimulationTable { rows, summary }
    }
}

fn trial_row(trial: usize, seed: u64, outcome: Result<PipelineReport>) -> TrialRow {
    match outcome {
        Ok(r) => TrialRow {
            trial,
            seed,
            naive_l1: Some(r.naive_l1),
            proxy_l1: Some(r.proxy_l1),
            status: "ok".into(),
        },
        Err(e) => TrialRow {
            trial,
            seed,
            naive_l1: None,
            proxy_l1: None,
            status: e.code().into(),
        },
    }
}

/// One random instance: a sampled joint, slopes from the configured
/// ranges and a single uninformative outcome.
fn random_trial(config: &MonteCarloConfig, seed: u64) -> Result<PipelineReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let joint = sample_joint(&mut rng, config.k, config.n)?;
    let gamma: Vec<f64> = config
        .gamma_ranges
        .iter()
        .map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
        .collect();
    let e = rng.random_range(0..config.n);
    let proxy = build_influential_action(joint.marginal_cols(), &joint.col_labels()[e].clone())?;
    let agent = AgentSpec {
        truth_joint: joint,
        gamma,
        grether: None,
        motivated_tilt: config.motivated_tilt,
    };
    agent.validate()?;
    let mech = MechanismSpec::quadratic(config.stake)?;
    run_pipeline(&agent, &proxy, &mech, config.noise_sigma, splitmix64(seed))
}

/// Runs `n_trials` random instances; trial `i` uses `trial_seed(master_seed, i)`.
/// Trials run in parallel and are reported in index order.
pub fn monte_carlo(config: &MonteCarloConfig, master_seed: u64) -> Result<SimulationTable> {
    config.validate()?;
    let rows = (0..config.n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(master_seed, i as u64);
            trial_row(i, seed, random_trial(config, seed))
        })
        .collect();
    Ok(SimulationTable::from_rows(rows))
}

/// Repeats the pipeline for one fixed agent; trials differ only in the
/// report-noise seed.
pub fn replicate_pipeline(
    agent: &AgentSpec,
    proxy: &ProxySpec,
    mech: &MechanismSpec,
    noise_sigma: f64,
    n_trials: usize,
    master_seed: u64,
) -> SimulationTable {
    let rows = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(master_seed, i as u64);
            trial_row(i, seed, run_pipeline(agent, proxy, mech, noise_sigma, seed))
        })
        .collect();
    SimulationTable::from_rows(rows)
}
