//! Scenario files: one JSON document per scenario, label-keyed throughout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proxy_beliefs_core::identification::{CalibrationObservation, GretherParams};
use proxy_beliefs_core::probability::{Belief, ConditionalFamily, JointBelief};
use proxy_beliefs_core::proxy::{ProxyFamily, ProxySpec};
use proxy_beliefs_core::seu::{SeuRepresentation, StateUtilities};
use proxy_beliefs_core::simulation::{AgentSpec, MonteCarloConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Overrides the directory bundled scenarios are read from.
pub const SCENARIO_DIR_ENV: &str = "PROXY_BELIEFS_SCENARIO_DIR";

pub const BUNDLED: [(&str, &str); 6] = [
    ("wife-drug", include_str!("../scenarios/wife-drug.json")),
    ("wife-expert", include_str!("../scenarios/wife-expert.json")),
    ("ceo-sampling", include_str!("../scenarios/ceo-sampling.json")),
    ("election-evidence", include_str!("../scenarios/election-evidence.json")),
    ("contest-training", include_str!("../scenarios/contest-training.json")),
    (
        "freerider-inspection",
        include_str!("../scenarios/freerider-inspection.json"),
    ),
];

pub type Labeled = BTreeMap<String, f64>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub states: Vec<String>,
    pub proxy: ProxyDto,
    /// Reported `pi_T(.|s)`, keyed by state then proxy outcome.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elicited_conditionals: Option<BTreeMap<String, Labeled>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grether: Option<GretherParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_data: Option<Vec<CalibrationDto>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruthDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloDto>,
    /// Any SEU representation of the agent, for utility recovery.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<RepresentationDto>,
    /// Belief of a state-independent representation; shorthand for a
    /// representation with unit slopes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_bar: Option<Labeled>,
    /// Actual belief, when known; otherwise it is identified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Labeled>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stake: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyDto {
    pub labels: Vec<String>,
    pub prior: Labeled,
    pub uninformative_event: Vec<String>,
    pub family: ProxyFamily,
    #[serde(default = "yes")]
    pub suitable: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationDto {
    /// Prior probability of the first hypothesis.
    pub prior: f64,
    /// `P(signal | h1) / P(signal | h2)`.
    pub likelihood_ratio: f64,
    /// Reported posterior probability of the first hypothesis.
    pub reported_posterior: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthDto {
    /// Joint belief over states and proxy outcomes, keyed by state.
    pub joint: BTreeMap<String, Labeled>,
    /// Marginal utility of money per state.
    pub gamma: Labeled,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloDto {
    pub k: usize,
    pub n: usize,
    pub gamma_ranges: Vec<(f64, f64)>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationDto {
    pub belief: Labeled,
    pub slopes: Labeled,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercepts: Option<Labeled>,
}

/// Values of `map` in `labels` order; the key sets must match exactly.
fn ordered(map: &Labeled, labels: &[String], what: &str) -> Result<Vec<f64>, CliError> {
    if let Some(extra) = map.keys().find(|k| !labels.contains(k)) {
        return Err(CliError::Scenario(format!("{what}: unknown label '{extra}'")));
    }
    labels
        .iter()
        .map(|l| {
            map.get(l)
                .copied()
                .ok_or_else(|| CliError::Scenario(format!("{what}: missing label '{l}'")))
        })
        .collect()
}

fn table(
    map: &BTreeMap<String, Labeled>,
    rows: &[String],
    cols: &[String],
    what: &str,
) -> Result<Vec<Vec<f64>>, CliError> {
    if let Some(extra) = map.keys().find(|k| !rows.contains(k)) {
        return Err(CliError::Scenario(format!("{what}: unknown state '{extra}'")));
    }
    rows.iter()
        .map(|s| {
            let row = map
                .get(s)
                .ok_or_else(|| CliError::Scenario(format!("{what}: missing state '{s}'")))?;
            ordered(row, cols, &format!("{what}.{s}"))
        })
        .collect()
}

impl ScenarioFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{origin}: {e}")))
    }

    /// Structural checks that do not depend on the command.
    pub fn check(&self) -> Result<(), CliError> {
        if self.elicited_conditionals.is_some() && self.ground_truth.is_some() {
            return Err(CliError::Scenario(
                "elicited_conditionals and ground_truth are mutually exclusive".into(),
            ));
        }
        Ok(())
    }

    pub fn proxy_prior(&self) -> Result<Belief, CliError> {
        let p = &self.proxy;
        Ok(Belief::new(
            p.labels.clone(),
            ordered(&p.prior, &p.labels, "proxy.prior")?,
        )?)
    }

    pub fn proxy_spec(&self) -> Result<ProxySpec, CliError> {
        let mut spec = ProxySpec::new(
            self.proxy_prior()?,
            self.proxy.uninformative_event.clone(),
            self.proxy.family,
        )?;
        spec.suitable = self.proxy.suitable;
        Ok(spec)
    }

    pub fn has_elicited(&self) -> bool {
        self.elicited_conditionals.is_some()
    }

    pub fn elicited(&self) -> Result<ConditionalFamily, CliError> {
        let rows = self
            .elicited_conditionals
            .as_ref()
            .ok_or_else(|| CliError::Scenario("scenario has no elicited_conditionals".into()))?;
        let m = table(rows, &self.states, &self.proxy.labels, "elicited_conditionals")?;
        Ok(ConditionalFamily::from_matrix(
            self.states.clone(),
            self.proxy.labels.clone(),
            m,
        )?)
    }

    pub fn truth_joint(&self) -> Result<JointBelief, CliError> {
        let truth = self.require_truth()?;
        let m = table(&truth.joint, &self.states, &self.proxy.labels, "ground_truth.joint")?;
        Ok(JointBelief::new(self.states.clone(), self.proxy.labels.clone(), m)?)
    }

    fn require_truth(&self) -> Result<&GroundTruthDto, CliError> {
        self.ground_truth
            .as_ref()
            .ok_or_else(|| CliError::Scenario("scenario has no ground_truth".into()))
    }

    pub fn agent(&self) -> Result<AgentSpec, CliError> {
        let truth = self.require_truth()?;
        let mut agent = AgentSpec::new(
            self.truth_joint()?,
            ordered(&truth.gamma, &self.states, "ground_truth.gamma")?,
        )?;
        agent.motivated_tilt = truth.lambda;
        agent.grether = self.grether;
        agent.validate()?;
        Ok(agent)
    }

    pub fn noise_sigma(&self) -> f64 {
        self.ground_truth.as_ref().map_or(0.0, |t| t.noise_sigma)
    }

    pub fn monte_carlo_config(&self, trials: usize) -> Result<Option<MonteCarloConfig>, CliError> {
        let Some(mc) = &self.monte_carlo else { return Ok(None) };
        let config = MonteCarloConfig {
            n_trials: trials,
            k: mc.k,
            n: mc.n,
            gamma_ranges: mc.gamma_ranges.clone(),
            noise_sigma: mc.noise_sigma,
            motivated_tilt: mc.lambda,
            stake: self.stake(),
        };
        config.validate()?;
        Ok(Some(config))
    }

    pub fn stake(&self) -> f64 {
        self.stake.unwrap_or(100.0)
    }

    pub fn belief_over_states(&self, map: &Labeled, what: &str) -> Result<Belief, CliError> {
        Ok(Belief::new(self.states.clone(), ordered(map, &self.states, what)?)?)
    }

    /// The representation to start utility recovery from, if any.
    pub fn representation(&self) -> Result<Option<SeuRepresentation>, CliError> {
        let k = self.states.len();
        if let Some(rep) = &self.representation {
            let belief = self.belief_over_states(&rep.belief, "representation.belief")?;
            let slopes = ordered(&rep.slopes, &self.states, "representation.slopes")?;
            let intercepts = match &rep.intercepts {
                Some(i) => ordered(i, &self.states, "representation.intercepts")?,
                None => vec![0.0; k],
            };
            let utilities = StateUtilities::new(self.states.clone(), intercepts, slopes)?;
            return Ok(Some(SeuRepresentation::new(utilities, belief)?));
        }
        if let Some(mu_bar) = &self.mu_bar {
            let belief = self.belief_over_states(mu_bar, "mu_bar")?;
            let utilities = StateUtilities::linear(self.states.clone(), vec![1.0; k])?;
            return Ok(Some(SeuRepresentation::new(utilities, belief)?));
        }
        Ok(None)
    }

    pub fn calibration(&self) -> Result<Option<Vec<CalibrationObservation>>, CliError> {
        let Some(data) = &self.calibration_data else {
            return Ok(None);
        };
        let binary = |p: f64| Belief::new(["h1", "h2"], vec![p, 1.0 - p]);
        data.iter()
            .map(|d| {
                Ok(CalibrationObservation {
                    prior: binary(d.prior)?,
                    likelihood_ratio: d.likelihood_ratio,
                    reported_posterior: binary(d.reported_posterior)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()
            .map(Some)
    }
}

/// Where a `--scenario` argument resolved to.
pub enum Source {
    File(PathBuf),
    Bundled(&'static str, &'static str),
}

fn scenario_dir() -> Option<PathBuf> {
    std::env::var_os(SCENARIO_DIR_ENV).map(PathBuf::from)
}

/// Names of the available scenarios, in listing order.
pub fn list() -> Result<Vec<String>, CliError> {
    match scenario_dir() {
        None => Ok(BUNDLED.iter().map(|(n, _)| n.to_string()).collect()),
        Some(dir) => {
            let entries = std::fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))?;
            let mut names = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| CliError::io(&dir, e))?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                        names.push(stem.to_string());
                    }
                }
            }
            names.sort();
            Ok(names)
        }
    }
}

/// An existing file path wins; otherwise the argument names a scenario in
/// the override directory or the bundled set.
pub fn resolve(arg: &str) -> Result<Source, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(Source::File(path.to_path_buf()));
    }
    if let Some(dir) = scenario_dir() {
        let candidate = dir.join(format!("{arg}.json"));
        if candidate.is_file() {
            return Ok(Source::File(candidate));
        }
    } else if let Some((name, text)) = BUNDLED.iter().find(|(n, _)| *n == arg) {
        return Ok(Source::Bundled(name, text));
    }
    Err(CliError::io(
        path,
        std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or scenario"),
    ))
}

/// Raw text of a scenario argument.
pub fn read_text(arg: &str) -> Result<(String, String), CliError> {
    match resolve(arg)? {
        Source::File(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
            Ok((p.display().to_string(), text))
        }
        Source::Bundled(name, text) => Ok((name.to_string(), text.to_string())),
    }
}

pub fn load(arg: &str) -> Result<ScenarioFile, CliError> {
    let (origin, text) = read_text(arg)?;
    let scenario = ScenarioFile::parse(&text, &origin)?;
    scenario.check()?;
    Ok(scenario)
}
