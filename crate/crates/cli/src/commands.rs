use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use proxy_beliefs_core::identification::{
    calibrate_grether, debias_identify_binary, debias_with_uncertainty, identify, Calibration, IdentificationResult,
    Tolerances, DEFAULT_GRID,
};
use proxy_beliefs_core::probability::Belief;
use proxy_beliefs_core::proxy::{check_cardinality, check_p3, DEFAULT_P3_TOL};
use proxy_beliefs_core::seu::{rank_states, recover_actual_utilities, state_weights_from_representation};
use proxy_beliefs_core::simulation::{monte_carlo, replicate_pipeline, MechanismSpec, SimulationTable};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::scenario::{self, ScenarioFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Compact decimal for human-readable output.
pub fn num(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn listing(b: &Belief) -> String {
    b.iter()
        .map(|(l, w)| format!("{l}={}", num(w)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

/// Shortest representation that parses back to the same value.
fn cell(x: f64) -> String {
    format!("{x:?}")
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Parse(format!("csv: {e}"))
}

/// Outcome of `validate`: the printed report and whether every check passed.
pub struct Validation {
    pub report: String,
    pub passed: bool,
}

pub fn validate(s: &ScenarioFile) -> Validation {
    let mut report = String::new();
    let mut passed = true;

    match s.proxy_prior() {
        Ok(prior) => writeln!(report, "P1 prior: ok ({})", listing(&prior)).unwrap(),
        Err(e) => {
            passed = false;
            writeln!(report, "P1 prior: FAILED ({e})").unwrap();
        }
    }
    match s.proxy_spec() {
        Ok(spec) => {
            writeln!(
                report,
                "P2 uninformative event: {{{}}}",
                spec.uninformative_event().join(", ")
            )
            .unwrap();
            writeln!(
                report,
                "suitable proxy (declared): {}",
                if spec.suitable { "yes" } else { "no" }
            )
            .unwrap();
        }
        Err(e) if passed => {
            passed = false;
            writeln!(report, "P2 uninformative event: FAILED ({e})").unwrap();
        }
        Err(_) => {}
    }

    let (k, n) = (s.states.len(), s.proxy.labels.len());
    if check_cardinality(k, n) {
        writeln!(report, "cardinality: ok ({k} states, {n} proxy outcomes)").unwrap();
    } else {
        passed = false;
        writeln!(report, "cardinality: FAILED ({k} states but only {n} proxy outcomes)").unwrap();
    }

    let family = if s.has_elicited() {
        Some(s.elicited())
    } else if s.ground_truth.is_some() {
        Some(s.truth_joint().and_then(|j| Ok(j.conditional_family()?)))
    } else {
        None
    };
    match family {
        None => writeln!(report, "P3: not checked (no conditionals in scenario)").unwrap(),
        Some(Err(e)) => {
            passed = false;
            writeln!(report, "P3: FAILED ({e})").unwrap();
        }
        Some(Ok(family)) => {
            let p3 = check_p3(&family, DEFAULT_P3_TOL);
            let detail = format!(
                "rank {}, min singular value {:e}, condition number {:e}",
                p3.rank, p3.min_singular_value, p3.condition_number
            );
            if p3.independent {
                writeln!(report, "P3: ok ({detail})").unwrap();
            } else {
                passed = false;
                writeln!(report, "P3 violated ({detail})").unwrap();
            }
        }
    }
    if let Some(e) = s.agent().err().filter(|_| s.ground_truth.is_some()) {
        passed = false;
        writeln!(report, "ground truth: FAILED ({e})").unwrap();
    }
    writeln!(report, "{}", if passed { "valid" } else { "invalid" }).unwrap();
    Validation { report, passed }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOutput {
    pub rank: usize,
    pub min_singular_value: f64,
    pub condition_number: f64,
    pub residual_norm: f64,
    pub clamped: bool,
    pub inconsistent: bool,
}

/// JSON form of an identification result; vectors follow `states`,
/// matrix rows follow `states` and columns `proxy_labels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifyOutput {
    pub states: Vec<String>,
    pub proxy_labels: Vec<String>,
    pub uninformative_event: Vec<String>,
    #[serde(rename = "pi_S")]
    pub pi_s: Vec<f64>,
    pub joint: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    /// `pi_S(.|t)` for every proxy outcome with positive mass.
    pub posteriors: BTreeMap<String, Vec<f64>>,
    pub diagnostics: DiagnosticsOutput,
}

impl IdentifyOutput {
    fn from_result(r: &IdentificationResult) -> Self {
        let d = &r.diagnostics;
        IdentifyOutput {
            states: r.joint.row_labels().to_vec(),
            proxy_labels: r.joint.col_labels().to_vec(),
            uninformative_event: r.uninformative_event.clone(),
            pi_s: r.pi_s.weights().to_vec(),
            joint: r.joint.to_rows(),
            mu: r.mu.weights().to_vec(),
            posteriors: r
                .posteriors
                .iter()
                .map(|(t, b)| (t.clone(), b.weights().to_vec()))
                .collect(),
            diagnostics: DiagnosticsOutput {
                rank: d.rank,
                min_singular_value: d.min_singular_value,
                condition_number: d.condition_number,
                residual_norm: d.residual_norm,
                clamped: d.clamped,
                inconsistent: d.inconsistent,
            },
        }
    }
}

fn run_identify(s: &ScenarioFile, tol: f64) -> Result<IdentificationResult, CliError> {
    Ok(identify(&s.proxy_spec()?, &s.elicited()?, &Tolerances::with_tol(tol))?)
}

pub fn identify_cmd(s: &ScenarioFile, format: Format, tol: f64) -> Result<String, CliError> {
    let out = IdentifyOutput::from_result(&run_identify(s, tol)?);
    match format {
        Format::Json => to_json(&out),
        Format::Csv => {
            let mut buf = Vec::new();
            {
                let mut w = csv_writer(&mut buf);
                let mut header = vec!["state".to_string(), "pi_S".into(), "mu".into()];
                header.extend(out.proxy_labels.iter().map(|t| format!("joint_{t}")));
                header.extend(out.proxy_labels.iter().map(|t| format!("posterior_{t}")));
                w.write_record(&header).map_err(csv_error)?;
                for (i, state) in out.states.iter().enumerate() {
                    let mut rec = vec![state.clone(), cell(out.pi_s[i]), cell(out.mu[i])];
                    rec.extend(out.joint[i].iter().map(|&x| cell(x)));
                    rec.extend(
                        out.proxy_labels
                            .iter()
                            .map(|t| out.posteriors.get(t).map_or(String::new(), |p| cell(p[i]))),
                    );
                    w.write_record(&rec).map_err(csv_error)?;
                }
                w.flush().map_err(|e| CliError::Parse(e.to_string()))?;
            }
            String::from_utf8(buf).map_err(|e| CliError::Parse(e.to_string()))
        }
        Format::Text => Err(CliError::Usage("identify writes json or csv".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOutput {
    pub states: Vec<String>,
    pub mu: Vec<f64>,
    /// `given` when the scenario states the actual belief, else `identified`.
    pub mu_source: String,
    pub canonical_slopes: Vec<f64>,
    pub canonical_intercepts: Vec<f64>,
    pub reference_state: String,
    /// Canonical slope of each state over that of the reference state.
    pub slope_ratios: Vec<f64>,
    /// `mu_bar(s) / mu(s)`; absent without a state-independent representation.
    pub weights: Option<Vec<f64>>,
    /// Indifference classes, highest weight first.
    pub ranking: Option<Vec<Vec<String>>>,
}

pub fn recover_utility_cmd(s: &ScenarioFile, format: Format, tol: f64) -> Result<String, CliError> {
    let rep = s
        .representation()?
        .ok_or_else(|| CliError::Scenario("recover-utility needs a representation or mu_bar".into()))?;
    let (mu, source) = match &s.mu {
        Some(m) => (s.belief_over_states(m, "mu")?, "given"),
        None if s.has_elicited() => (run_identify(s, tol)?.mu, "identified"),
        None => {
            return Err(CliError::Scenario(
                "recover-utility needs mu or elicited_conditionals".into(),
            ))
        }
    };
    let class = recover_actual_utilities(&rep, &mu)?;
    let labels = rep.labels().to_vec();
    let reference = labels.last().cloned().unwrap_or_default();
    let slopes = class.canonical().slopes().to_vec();
    let ratios = labels
        .iter()
        .map(|l| class.slope_ratio(l, &reference))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = state_weights_from_representation(&rep, &mu).ok();
    let out = RecoveryOutput {
        states: labels.clone(),
        mu: class.belief().weights().to_vec(),
        mu_source: source.to_string(),
        canonical_slopes: slopes,
        canonical_intercepts: class.canonical().intercepts().to_vec(),
        reference_state: reference.clone(),
        slope_ratios: ratios,
        weights: weights.as_ref().map(|w| w.weights().to_vec()),
        ranking: weights.as_ref().map(rank_states),
    };
    match format {
        Format::Json => to_json(&out),
        Format::Csv => Err(CliError::Usage("recover-utility writes text or json".into())),
        Format::Text => {
            let mut t = String::new();
            writeln!(t, "actual belief ({}): {}", out.mu_source, listing(class.belief())).unwrap();
            writeln!(t, "canonical utilities u_s(q) = intercept + slope * q:").unwrap();
            for (i, l) in labels.iter().enumerate() {
                writeln!(
                    t,
                    "  {l}: slope {}, intercept {}",
                    num(out.canonical_slopes[i]),
                    num(out.canonical_intercepts[i])
                )
                .unwrap();
            }
            writeln!(t, "slope ratios against {reference}:").unwrap();
            for (l, r) in labels.iter().zip(&out.slope_ratios) {
                writeln!(t, "  {l}/{reference} = {}", num(*r)).unwrap();
            }
            match (&out.weights, &out.ranking) {
                (Some(w), Some(ranking)) => {
                    writeln!(t, "state weights w(s):").unwrap();
                    for (l, x) in labels.iter().zip(w) {
                        writeln!(t, "  {l}: {}", num(*x)).unwrap();
                    }
                    let classes: Vec<String> = ranking.iter().map(|c| c.join(" ~ ")).collect();
                    writeln!(t, "ranking: {}", classes.join(" > ")).unwrap();
                }
                _ => writeln!(t, "state weights: unavailable (no state-independent representation)").unwrap(),
            }
            Ok(t)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasOutput {
    pub states: Vec<String>,
    pub c: f64,
    pub d: f64,
    pub c_interval: Option<(f64, f64)>,
    pub d_interval: Option<(f64, f64)>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub deltas: [f64; 2],
    /// Range of `mu` of the first state over the parameter confidence box.
    pub mu_interval: Option<(f64, f64)>,
    pub grid_skipped: Option<usize>,
}

pub fn debias_cmd(s: &ScenarioFile, format: Format) -> Result<String, CliError> {
    let prior = s.proxy_prior()?;
    let elicited = s.elicited()?;
    let event = &s.proxy.uninformative_event;
    let calibration: Option<Calibration> = match s.calibration()? {
        Some(obs) => Some(calibrate_grether(&obs)?),
        None => None,
    };
    let params = match (&calibration, s.grether) {
        (Some(c), _) => c.params,
        (None, Some(p)) => p,
        (None, None) => return Err(CliError::Scenario("debias needs grether or calibration_data".into())),
    };
    let (point, interval) = match &calibration {
        Some(c) => {
            let iv = debias_with_uncertainty(
                &prior,
                &elicited,
                params,
                c.c_interval,
                c.d_interval,
                event,
                DEFAULT_GRID,
            )?;
            (iv.point.clone(), Some(iv))
        }
        None => (debias_identify_binary(&prior, &elicited, params, event)?, None),
    };
    let out = DebiasOutput {
        states: point.mu.labels().to_vec(),
        c: params.c,
        d: params.d,
        c_interval: calibration.as_ref().map(|c| c.c_interval),
        d_interval: calibration.as_ref().map(|c| c.d_interval),
        mu: point.mu.weights().to_vec(),
        nu: point.nu.weights().to_vec(),
        deltas: point.deltas,
        mu_interval: interval.as_ref().map(|i| i.mu_interval),
        grid_skipped: interval.as_ref().map(|i| i.skipped),
    };
    match format {
        Format::Json => to_json(&out),
        Format::Csv => Err(CliError::Usage("debias writes text or json".into())),
        Format::Text => {
            let mut t = String::new();
            match (&out.c_interval, &out.d_interval) {
                (Some(ci), Some(di)) => {
                    writeln!(t, "calibrated c = {} (95% CI {}, {})", num(out.c), num(ci.0), num(ci.1)).unwrap();
                    writeln!(t, "calibrated d = {} (95% CI {}, {})", num(out.d), num(di.0), num(di.1)).unwrap();
                }
                _ => writeln!(t, "c = {}, d = {}", num(out.c), num(out.d)).unwrap(),
            }
            writeln!(t, "deltas: {}, {}", num(out.deltas[0]), num(out.deltas[1])).unwrap();
            writeln!(t, "mu: {}", listing(&point.mu)).unwrap();
            writeln!(t, "nu: {}", listing(&point.nu)).unwrap();
            if let (Some((lo, hi)), Some(skipped)) = (out.mu_interval, out.grid_skipped) {
                writeln!(
                    t,
                    "mu({}) over the parameter box: [{}, {}]",
                    out.states[0],
                    num(lo),
                    num(hi)
                )
                .unwrap();
                if skipped > 0 {
                    writeln!(t, "warning: {skipped} grid points left the simplex and were skipped").unwrap();
                }
            }
            Ok(t)
        }
    }
}

/// Per-trial CSV: `trial,seed,naive_L1,proxy_L1,status`.
pub fn simulation_csv(table: &SimulationTable) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(["trial", "seed", "naive_L1", "proxy_L1", "status"])
            .map_err(csv_error)?;
        let opt = |x: Option<f64>| x.map_or(String::new(), cell);
        for r in &table.rows {
            w.write_record([
                r.trial.to_string(),
                r.seed.to_string(),
                opt(r.naive_l1),
                opt(r.proxy_l1),
                r.status.clone(),
            ])
            .map_err(csv_error)?;
        }
        w.flush().map_err(|e| CliError::Parse(e.to_string()))?;
    }
    Ok(buf)
}

pub fn simulation_summary(table: &SimulationTable) -> String {
    let s = &table.summary;
    let mut t = String::new();
    writeln!(t, "trials: {} (ok {}, failed {})", table.rows.len(), s.n_ok, s.n_failed).unwrap();
    for (name, stats) in [("naive_L1", s.naive_l1), ("proxy_L1", s.proxy_l1)] {
        match stats {
            Some(x) => writeln!(
                t,
                "{name}: mean {}, median {}, max {}",
                num(x.mean),
                num(x.median),
                num(x.max)
            )
            .unwrap(),
            None => writeln!(t, "{name}: no successful trials").unwrap(),
        }
    }
    t
}

pub fn simulate(s: &ScenarioFile, trials: Option<usize>, seed: Option<u64>) -> Result<SimulationTable, CliError> {
    let trials = trials.or(s.trials).unwrap_or(100);
    let seed = seed.or(s.seed).unwrap_or(0);
    if s.ground_truth.is_some() {
        let agent = s.agent()?;
        let proxy = s.proxy_spec()?;
        let mech = MechanismSpec::quadratic(s.stake())?;
        Ok(replicate_pipeline(&agent, &proxy, &mech, s.noise_sigma(), trials, seed))
    } else if let Some(config) = s.monte_carlo_config(trials)? {
        Ok(monte_carlo(&config, seed)?)
    } else {
        Err(CliError::Scenario("simulate needs ground_truth or monte_carlo".into()))
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn scenario_list() -> Result<String, CliError> {
    Ok(scenario::list()?.into_iter().map(|n| n + "\n").collect())
}

pub fn scenario_show(name: &str) -> Result<String, CliError> {
    Ok(scenario::read_text(name)?.1)
}
