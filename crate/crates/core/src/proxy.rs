//! Proxies for a state space: construction, validation and the rank test.
//!
//! A proxy `T` works when its prior is commonly known, some event `E` of
//! `T` leaves the belief about `S` untouched, and the conditionals
//! `pi_T(.|s)` are linearly independent across states. Only the first and
//! last conditions can be checked from elicited data; the uninformative
//! event is an assumption, testable only against a simulated ground truth.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::{Belief, ConditionalFamily, JointBelief};

/// Default threshold on the smallest singular value of the conditional family.
pub const DEFAULT_P3_TOL: f64 = 1e-8;

/// Label of the informative source in a stochastic-evidence proxy.
pub const EXPERT: &str = "expert";
/// Label of the uninformative source in a stochastic-evidence proxy.
pub const CHARLATAN: &str = "charlatan";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxyFamily {
    /// A randomized intervention; the no-action outcome is uninformative.
    InfluentialAction,
    /// A signal whose source is informative with a known probability.
    StochasticEvidence,
    /// A population partition with a known distribution; all of `T` is uninformative.
    RandomSampling,
    Custom,
}

/// A proxy `T` for the state space: outcomes, commonly known prior and the
/// uninformative event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxySpec {
    prior: Belief,
    uninformative_event: Vec<String>,
    family: ProxyFamily,
    /// Declared, not inferred: whether the agent has no stakes in `T`
    /// once `S` is known. Choice data can only ever reject this.
    pub suitable: bool,
}

impl ProxySpec {
    pub fn new(prior: Belief, uninformative_event: Vec<String>, family: ProxyFamily) -> Result<Self> {
        if uninformative_event.is_empty() {
            return Err(Error::InvalidParameter("uninformative event is empty".into()));
        }
        for (i, label) in uninformative_event.iter().enumerate() {
            if prior.index_of(label).is_none() {
                return Err(Error::UnknownLabel(label.clone()));
            }
            if uninformative_event[..i].contains(label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(ProxySpec {
            prior,
            uninformative_event,
            family,
            suitable: true,
        })
    }

    pub fn labels(&self) -> &[String] {
        self.prior.labels()
    }

    pub fn prior(&self) -> &Belief {
        &self.prior
    }

    pub fn uninformative_event(&self) -> &[String] {
        &self.uninformative_event
    }

    pub fn family(&self) -> ProxyFamily {
        self.family
    }

    /// Whether the uninformative event is all of `T`.
    pub fn event_is_whole_proxy(&self) -> bool {
        self.uninformative_event.len() == self.prior.len()
    }
}

/// Outcome of the linear-independence test on a conditional family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P3Report {
    pub independent: bool,
    pub rank: usize,
    pub min_singular_value: f64,
    pub condition_number: f64,
}

/// Identification needs at least as many proxy outcomes as states.
pub fn check_cardinality(n_states: usize, n_outcomes: usize) -> bool {
    n_outcomes >= n_states
}

/// Rank and conditioning of the `K x N` matrix of conditionals, from its
/// singular values. With `K > N` the `K - N` missing singular values are
/// zero, so the family is never independent.
pub fn check_p3(family: &ConditionalFamily, tol: f64) -> P3Report {
    let k = family.n_states();
    let n = family.n_outcomes();
    let m = DMatrix::from_fn(k, n, |r, c| family.rows()[r].weights()[c]);
    let sv = m.svd(false, false).singular_values;
    let max_sv = sv.iter().copied().fold(0.0, f64::max);
    let mut min_sv = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if k > n {
        min_sv = 0.0;
    }
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let condition_number = if min_sv > 0.0 { max_sv / min_sv } else { f64::INFINITY };
    P3Report {
        independent: rank == k && min_sv > tol,
        rank,
        min_singular_value: min_sv,
        condition_number,
    }
}

/// Simulation-only check of the uninformative event: the belief about `S`
/// conditional on `E` under the true joint must equal the true `mu`.
pub fn check_p2_against_truth(
    joint_truth: &JointBelief,
    spec: &ProxySpec,
    mu_truth: &Belief,
    tol: f64,
) -> Result<bool> {
    let conditional = joint_truth.condition_on_event(spec.uninformative_event())?;
    Ok(conditional.max_abs_diff(mu_truth)? <= tol)
}

pub fn build_influential_action(action_prior: Belief, no_action_label: &str) -> Result<ProxySpec> {
    if action_prior.index_of(no_action_label).is_none() {
        return Err(Error::UnknownLabel(no_action_label.to_string()));
    }
    ProxySpec::new(
        action_prior,
        vec![no_action_label.to_string()],
        ProxyFamily::InfluentialAction,
    )
}

pub fn build_random_sampling(demographic_dist: Belief) -> Result<ProxySpec> {
    let event = demographic_dist.labels().to_vec();
    ProxySpec::new(demographic_dist, event, ProxyFamily::RandomSampling)
}

/// Evidence whose source is informative with probability
/// `informative_prob`, stated among the sources that produced the realized
/// signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticEvidenceParams {
    pub informative_prob: f64,
    /// Probability that the informative source emits the realized signal,
    /// per state. Only needed to simulate an agent's joint belief.
    pub expert_accuracy: Vec<(String, f64)>,
    /// Probability that the uninformative source emits the realized signal,
    /// the same in every state.
    pub charlatan_rate: f64,
}

impl StochasticEvidenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.informative_prob > 0.0 && self.informative_prob < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "informative probability must lie in (0, 1), got {}",
                self.informative_prob
            )));
        }
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(self.charlatan_rate) {
            return Err(Error::InvalidParameter(format!(
                "charlatan rate {} outside [0, 1]",
                self.charlatan_rate
            )));
        }
        if let Some((label, p)) = self.expert_accuracy.iter().find(|(_, p)| !in_unit(*p)) {
            return Err(Error::InvalidParameter(format!(
                "accuracy {p} for '{label}' outside [0, 1]"
            )));
        }
        Ok(())
    }

    /// The agent's joint belief over `S x {expert, charlatan}` after seeing
    /// the signal, when her belief before it is `mu`: the expert's signal
    /// moves her to `nu(s) ∝ mu(s) acc(s)`, the charlatan's leaves `mu`.
    pub fn agent_joint(&self, mu: &Belief) -> Result<JointBelief> {
        self.validate()?;
        let acc = self.accuracy_in(mu.labels())?;
        let masses: Vec<f64> = mu.weights().iter().zip(&acc).map(|(m, a)| m * a).collect();
        let nu = Belief::from_masses(mu.labels().to_vec(), &masses)?;
        let rho = self.informative_prob;
        let rows = nu
            .weights()
            .iter()
            .zip(mu.weights())
            .map(|(n, m)| vec![rho * n, (1.0 - rho) * m])
            .collect();
        JointBelief::new(mu.labels().to_vec(), [EXPERT, CHARLATAN], rows)
    }

    fn accuracy_in(&self, labels: &[String]) -> Result<Vec<f64>> {
        labels
            .iter()
            .map(|l| {
                self.expert_accuracy
                    .iter()
                    .find(|(k, _)| k == l)
                    .map(|(_, p)| *p)
                    .ok_or_else(|| Error::UnknownLabel(l.clone()))
            })
            .collect()
    }
}

/// Proxy over `{expert, charlatan}` with prior `(rho, 1 - rho)` where `rho`
/// is the share of informative sources among those that produced the
/// realized signal. The prior does not depend on the agent's belief.
pub fn build_stochastic_evidence_design2(params: &StochasticEvidenceParams) -> Result<ProxySpec> {
    params.validate()?;
    let rho = params.informative_prob;
    let prior = Belief::new([EXPERT, CHARLATAN], vec![rho, 1.0 - rho])?;
    ProxySpec::new(prior, vec![CHARLATAN.to_string()], ProxyFamily::StochasticEvidence)
}

/// The agent's prior on "expert" given the good signal, when only the
/// overall 50/50 share of experts is announced:
/// `sum_s 0.5 acc(s) mu(s) / sum_s (0.5 acc(s) + 0.5 charlatan_rate) mu(s)`.
/// It moves with `mu`, so such a prior is not commonly known.
pub fn design1_prior_diagnostic(mu: &Belief, accuracy_good_given_s: &[f64], charlatan_rate: f64) -> Result<f64> {
    if accuracy_good_given_s.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            found: accuracy_good_given_s.len(),
        });
    }
    let (num, den) = mu
        .weights()
        .iter()
        .zip(accuracy_good_given_s)
        .fold((0.0, 0.0), |(n, d), (m, a)| {
            (n + 0.5 * a * m, d + (0.5 * a + 0.5 * charlatan_rate) * m)
        });
    if !(den > 0.0) {
        return Err(Error::ZeroMassEvent);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(rows: Vec<Vec<f64>>) -> ConditionalFamily {
        let k = rows.len();
        let n = rows[0].len();
        ConditionalFamily::from_matrix((1..=k).map(|i| format!("s{i}")), (1..=n).map(|i| format!("t{i}")), rows)
            .unwrap()
    }

    fn drug_joint() -> JointBelief {
        JointBelief::new(["s1", "s2"], ["t1", "t2"], vec![vec![0.35, 0.05], vec![0.15, 0.45]]).unwrap()
    }

    #[test]
    fn cardinality() {
        assert!(check_cardinality(2, 2));
        assert!(!check_cardinality(3, 2));
        assert!(check_cardinality(2, 5));
    }

    #[test]
    fn p3_examples() {
        let ok = check_p3(&family(vec![vec![0.875, 0.125], vec![0.25, 0.75]]), DEFAULT_P3_TOL);
        assert!(ok.independent);
        assert_eq!(ok.rank, 2);
        assert!(ok.condition_number.is_finite());

        let dup = check_p3(&family(vec![vec![0.3, 0.7], vec![0.3, 0.7]]), DEFAULT_P3_TOL);
        assert!(!dup.independent);
        assert_eq!(dup.rank, 1);

        let tall = check_p3(
            &family(vec![vec![0.5, 0.5], vec![0.25, 0.75], vec![0.75, 0.25]]),
            DEFAULT_P3_TOL,
        );
        assert!(!tall.independent);
        assert_eq!(tall.rank, 2);
        assert_eq!(tall.min_singular_value, 0.0);
        assert!(tall.condition_number.is_infinite());
    }

    #[test]
    fn p2_examples() {
        let joint = drug_joint();
        let mu = Belief::new(["s1", "s2"], vec![0.1, 0.9]).unwrap();
        let drug = build_influential_action(Belief::uniform(["t1", "t2"]).unwrap(), "t2").unwrap();
        assert!(check_p2_against_truth(&joint, &drug, &mu, 1e-12).unwrap());

        let placebo_wrong = build_influential_action(Belief::uniform(["t1", "t2"]).unwrap(), "t1").unwrap();
        assert!(!check_p2_against_truth(&joint, &placebo_wrong, &mu, 1e-6).unwrap());

        let sampling = build_random_sampling(joint.marginal_cols()).unwrap();
        assert!(check_p2_against_truth(&joint, &sampling, &joint.marginal_rows(), 0.0).unwrap());
    }

    #[test]
    fn influential_action_builder() {
        let spec = build_influential_action(Belief::uniform(["t1", "t2"]).unwrap(), "t2").unwrap();
        assert_eq!(spec.prior().weights(), &[0.5, 0.5]);
        assert_eq!(spec.uninformative_event(), &["t2".to_string()]);
        assert_eq!(spec.family(), ProxyFamily::InfluentialAction);

        let three = build_influential_action(Belief::new(["a", "b", "c"], vec![0.2, 0.3, 0.5]).unwrap(), "c").unwrap();
        assert_eq!(three.uninformative_event(), &["c".to_string()]);

        assert!(matches!(
            build_influential_action(Belief::uniform(["a", "b"]).unwrap(), "z"),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn stochastic_evidence_builder() {
        let params = |rho| StochasticEvidenceParams {
            informative_prob: rho,
            expert_accuracy: vec![("s1".into(), 0.8), ("s2".into(), 0.2)],
            charlatan_rate: 0.5,
        };
        let half = build_stochastic_evidence_design2(&params(0.5)).unwrap();
        assert_eq!(half.prior().weight(EXPERT), Some(0.5));
        assert_eq!(half.uninformative_event(), &[CHARLATAN.to_string()]);
        let seventy = build_stochastic_evidence_design2(&params(0.7)).unwrap();
        assert_eq!(seventy.prior().weights(), &[0.7, 1.0 - 0.7]);
        assert!(build_stochastic_evidence_design2(&params(1.0)).is_err());
    }

    #[test]
    fn stochastic_evidence_joint_satisfies_conditions() {
        let params = StochasticEvidenceParams {
            informative_prob: 0.5,
            expert_accuracy: vec![("s1".into(), 0.8), ("s2".into(), 0.2)],
            charlatan_rate: 0.5,
        };
        let mu = Belief::new(["s1", "s2"], vec![0.1, 0.9]).unwrap();
        let joint = params.agent_joint(&mu).unwrap();
        let spec = build_stochastic_evidence_design2(&params).unwrap();
        assert!(check_p2_against_truth(&joint, &spec, &mu, 1e-15).unwrap());
        assert!((joint.marginal_cols().weight(EXPERT).unwrap() - 0.5).abs() < 1e-15);
        assert!(check_p3(&joint.conditional_family().unwrap(), DEFAULT_P3_TOL).independent);
    }

    #[test]
    fn design1_diagnostic() {
        let acc = [0.8, 0.2];
        let mu = Belief::new(["s1", "s2"], vec![0.1, 0.9]).unwrap();
        assert!((design1_prior_diagnostic(&mu, &acc, 0.5).unwrap() - 0.13 / 0.38).abs() < 1e-12);
        let even = Belief::uniform(["s1", "s2"]).unwrap();
        assert!((design1_prior_diagnostic(&even, &acc, 0.5).unwrap() - 0.5).abs() < 1e-12);
        for w in [0.05, 0.3, 0.77] {
            let mu = Belief::new(["s1", "s2"], vec![w, 1.0 - w]).unwrap();
            assert!((design1_prior_diagnostic(&mu, &[0.5, 0.5], 0.5).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn random_sampling_builder() {
        let spec = build_random_sampling(Belief::new(["w", "m"], vec![0.55, 0.45]).unwrap()).unwrap();
        assert!(spec.event_is_whole_proxy());
        assert_eq!(spec.family(), ProxyFamily::RandomSampling);
        let young = build_random_sampling(Belief::new(["young", "old"], vec![0.6, 0.4]).unwrap()).unwrap();
        assert_eq!(young.uninformative_event().len(), 2);
        assert!(build_random_sampling(Belief::uniform(["a", "b", "c"]).unwrap()).is_ok());
    }
}
