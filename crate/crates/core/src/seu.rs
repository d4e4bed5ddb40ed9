//! State-dependent subjective expected utility over monetary acts.
//!
//! Utilities are linear in money within each state, `u_s(q) = a_s + g_s q`.
//! A representation pairs such a family with a belief; many pairs represent
//! the same preferences, because scaling state `s`'s utility by
//! `mu(s) / mu'(s)` while swapping the belief to `mu'` leaves every
//! expected value unchanged. Once the actual belief is known, the utility
//! family paired with it is pinned down up to per-state intercepts and one
//! common positive scale.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::probability::{alignment, Belief};

/// Relative tolerance for deciding that two slopes (or weights) are equal.
const TIE_RTOL: f64 = 1e-12;

/// A monetary act: one payoff per state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Act {
    labels: Vec<String>,
    payoffs: Vec<f64>,
}

impl Act {
    pub fn new<L, I>(labels: I, payoffs: Vec<f64>) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != payoffs.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                found: payoffs.len(),
            });
        }
        if let Some(&bad) = payoffs.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Act { labels, payoffs })
    }

    /// The act paying `q` in every state.
    pub fn constant(labels: &[String], q: f64) -> Self {
        Act {
            labels: labels.to_vec(),
            payoffs: vec![q; labels.len()],
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    fn payoffs_in(&self, labels: &[String]) -> Result<Vec<f64>> {
        let perm = alignment(&self.labels, labels)?;
        Ok(perm.into_iter().map(|i| self.payoffs[i]).collect())
    }
}

/// Per-state affine utilities of money, `u_s(q) = intercept_s + slope_s * q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateUtilities {
    labels: Vec<String>,
    intercepts: Vec<f64>,
    slopes: Vec<f64>,
}

impl StateUtilities {
    pub fn new<L, I>(labels: I, intercepts: Vec<f64>, slopes: Vec<f64>) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        for v in [&intercepts, &slopes] {
            if v.len() != labels.len() {
                return Err(Error::LengthMismatch {
                    expected: labels.len(),
                    found: v.len(),
                });
            }
        }
        for (label, &g) in labels.iter().zip(&slopes) {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::NonpositiveSlope {
                    label: label.clone(),
                    value: g,
                });
            }
        }
        if let Some(&bad) = intercepts.iter().find(|a| !a.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(StateUtilities {
            labels,
            intercepts,
            slopes,
        })
    }

    /// Purely linear utilities (all intercepts zero).
    pub fn linear<L, I>(labels: I, slopes: Vec<f64>) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        StateUtilities::new(labels, vec![0.0; n], slopes)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn slope(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.slopes[i])
    }

    pub fn utility(&self, state: usize, q: f64) -> f64 {
        self.intercepts[state] + self.slopes[state] * q
    }

    /// Whether every state carries the same utility function.
    pub fn is_state_independent(&self) -> bool {
        let same = |v: &[f64]| v.iter().all(|x| approx_eq(*x, v[0]));
        same(&self.slopes) && same(&self.intercepts)
    }

    fn reordered(&self, labels: &[String]) -> Result<StateUtilities> {
        let perm = alignment(&self.labels, labels)?;
        Ok(StateUtilities {
            labels: labels.to_vec(),
            intercepts: perm.iter().map(|&i| self.intercepts[i]).collect(),
            slopes: perm.iter().map(|&i| self.slopes[i]).collect(),
        })
    }
}

/// A pair (utilities, belief) representing preferences over acts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeuRepresentation {
    utilities: StateUtilities,
    belief: Belief,
}

impl SeuRepresentation {
    /// The belief must have full support; the utilities are stored in the
    /// belief's label order.
    pub fn new(utilities: StateUtilities, belief: Belief) -> Result<Self> {
        belief.require_full_support()?;
        let utilities = utilities.reordered(belief.labels())?;
        Ok(SeuRepresentation { utilities, belief })
    }

    pub fn utilities(&self) -> &StateUtilities {
        &self.utilities
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    pub fn labels(&self) -> &[String] {
        self.belief.labels()
    }
}

/// Expected utility `sum_s mu(s) u_s(f_s)` of an act.
pub fn seu_value(rep: &SeuRepresentation, act: &Act) -> Result<f64> {
    let payoffs = act.payoffs_in(rep.labels())?;
    Ok(rep
        .belief
        .weights()
        .iter()
        .zip(&payoffs)
        .enumerate()
        .map(|(s, (p, q))| p * rep.utilities.utility(s, *q))
        .sum())
}

/// Switches the representation to `new_belief`, scaling each state's
/// utility by `old(s) / new(s)` so that every act keeps its value.
pub fn rescale_representation(rep: &SeuRepresentation, new_belief: &Belief) -> Result<SeuRepresentation> {
    let target = new_belief.weights_in(rep.labels())?;
    let factors = ratio_factors(rep.labels(), rep.belief.weights(), &target)?;
    let utilities = scaled(&rep.utilities, &factors);
    SeuRepresentation::new(utilities, new_belief.reordered(rep.labels())?)
}

/// The utilities paired with a known actual belief, up to per-state
/// intercepts `alpha_s` and a common scale `beta > 0`.
///
/// The stored member is the canonical one (`alpha_s = 0`, `beta = 1`); any
/// other member is `alpha_s + beta * canonical_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityClass {
    canonical: StateUtilities,
    belief: Belief,
}

impl UtilityClass {
    pub fn canonical(&self) -> &StateUtilities {
        &self.canonical
    }

    /// The actual belief the class is paired with.
    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    /// Member `alpha_s + beta * canonical_s`.
    pub fn member(&self, alphas: &[f64], beta: f64) -> Result<StateUtilities> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {beta}")));
        }
        if alphas.len() != self.canonical.labels.len() {
            return Err(Error::LengthMismatch {
                expected: self.canonical.labels.len(),
                found: alphas.len(),
            });
        }
        StateUtilities::new(
            self.canonical.labels.clone(),
            self.canonical
                .intercepts
                .iter()
                .zip(alphas)
                .map(|(c, a)| a + beta * c)
                .collect(),
            self.canonical.slopes.iter().map(|g| beta * g).collect(),
        )
    }

    /// Ratio of canonical slopes `slope(a) / slope(b)`; invariant across the class.
    pub fn slope_ratio(&self, a: &str, b: &str) -> Result<f64> {
        let sa = self
            .canonical
            .slope(a)
            .ok_or_else(|| Error::UnknownLabel(a.to_string()))?;
        let sb = self
            .canonical
            .slope(b)
            .ok_or_else(|| Error::UnknownLabel(b.to_string()))?;
        Ok(sa / sb)
    }

    pub fn representation(&self) -> SeuRepresentation {
        SeuRepresentation {
            utilities: self.canonical.clone(),
            belief: self.belief.clone(),
        }
    }
}

/// Recovers the actual utility class from any representation and the
/// identified actual belief `mu`: `u_s = (rep_belief(s) / mu(s)) * rep_u_s`.
pub fn recover_actual_utilities(rep: &SeuRepresentation, mu: &Belief) -> Result<UtilityClass> {
    let target = mu.weights_in(rep.labels())?;
    let factors = ratio_factors(rep.labels(), rep.belief.weights(), &target)?;
    Ok(UtilityClass {
        canonical: scaled(&rep.utilities, &factors),
        belief: mu.reordered(rep.labels())?,
    })
}

/// Per-state weights `w(s) = mu_bar(s) / mu(s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateWeights {
    labels: Vec<String>,
    weights: Vec<f64>,
}

impl StateWeights {
    pub fn new<L, I>(labels: I, weights: Vec<f64>) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                found: weights.len(),
            });
        }
        for (l, &w) in labels.iter().zip(&weights) {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!("state weight of '{l}' is {w}")));
            }
        }
        Ok(StateWeights { labels, weights })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.weights[i])
    }
}

/// `w(s) = mu_bar(s) / mu(s)` where `mu_bar` is the belief of a
/// state-independent representation and `mu` the actual belief.
pub fn state_weights(mu_bar: &Belief, mu: &Belief) -> Result<StateWeights> {
    mu_bar.require_full_support()?;
    let actual = mu.weights_in(mu_bar.labels())?;
    let w = ratio_factors(mu_bar.labels(), mu_bar.weights(), &actual)?;
    StateWeights::new(mu_bar.labels().to_vec(), w)
}

/// State weights from a representation that must be state-independent.
/// Without one there is no cardinal utility over states, so this refuses.
pub fn state_weights_from_representation(rep: &SeuRepresentation, mu: &Belief) -> Result<StateWeights> {
    if !rep.utilities.is_state_independent() {
        return Err(Error::NoStateIndependentRepresentation(
            "utilities differ across states; state weights are undefined".into(),
        ));
    }
    state_weights(&rep.belief, mu)
}

/// Additive breakdown `sum_s mu(s) * w(s) * u_bar(f_s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeuDecomposition {
    pub labels: Vec<String>,
    pub terms: Vec<f64>,
    pub total: f64,
}

pub fn decompose_seu(mu: &Belief, w: &StateWeights, u_bar_slope: f64, act: &Act) -> Result<SeuDecomposition> {
    if !(u_bar_slope > 0.0) {
        return Err(Error::NonpositiveSlope {
            label: "u_bar".into(),
            value: u_bar_slope,
        });
    }
    let labels = mu.labels().to_vec();
    let perm = alignment(w.labels(), &labels)?;
    let payoffs = act.payoffs_in(&labels)?;
    let terms: Vec<f64> = mu
        .weights()
        .iter()
        .zip(&perm)
        .zip(&payoffs)
        .map(|((m, &k), q)| m * w.weights[k] * (u_bar_slope * q))
        .collect();
    let total = terms.iter().sum();
    Ok(SeuDecomposition { labels, terms, total })
}

/// States in descending order of weight, grouped into indifference classes.
pub fn rank_states(w: &StateWeights) -> Vec<Vec<String>> {
    let mut order: Vec<usize> = (0..w.weights.len()).collect();
    order.sort_by(|&a, &b| w.weights[b].total_cmp(&w.weights[a]).then(a.cmp(&b)));
    let mut classes: Vec<Vec<String>> = Vec::new();
    let mut last: Option<f64> = None;
    for i in order {
        let value = w.weights[i];
        match (last, classes.last_mut()) {
            (Some(prev), Some(class)) if approx_eq(prev, value) => class.push(w.labels[i].clone()),
            _ => {
                classes.push(vec![w.labels[i].clone()]);
                last = Some(value);
            }
        }
    }
    classes
}

/// Belief proportional to the reciprocal slopes.
pub fn belief_from_slopes<L, I>(labels: I, slopes: &[f64]) -> Result<Belief>
where
    L: Into<String>,
    I: IntoIterator<Item = L>,
{
    let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
    if labels.len() != slopes.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            found: slopes.len(),
        });
    }
    for (l, &g) in labels.iter().zip(slopes) {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::NonpositiveSlope {
                label: l.clone(),
                value: g,
            });
        }
    }
    if slopes.iter().all(|&g| g == slopes[0]) {
        return Belief::uniform(labels);
    }
    let inv: Vec<f64> = slopes.iter().map(|g| 1.0 / g).collect();
    Belief::from_masses(labels, &inv)
}

/// Turns an additive state-wise representation `sum_s v_s(f_s)` into an SEU
/// pair by scaling state `s` by `scales[s]` and choosing the belief
/// proportional to `1 / scales[s]`. The result evaluates every act to
/// `additive / sum_s (1 / scales[s])`.
pub fn representation_from_additive(additive: &StateUtilities, scales: &[f64]) -> Result<SeuRepresentation> {
    let belief = belief_from_slopes(additive.labels().to_vec(), scales)?;
    SeuRepresentation::new(scaled(additive, scales), belief)
}

fn scaled(u: &StateUtilities, factors: &[f64]) -> StateUtilities {
    StateUtilities {
        labels: u.labels.clone(),
        intercepts: u.intercepts.iter().zip(factors).map(|(a, f)| a * f).collect(),
        slopes: u.slopes.iter().zip(factors).map(|(g, f)| g * f).collect(),
    }
}

/// `num[s] / den[s]`, failing on a zero in either vector.
fn ratio_factors(labels: &[String], num: &[f64], den: &[f64]) -> Result<Vec<f64>> {
    labels
        .iter()
        .zip(num.iter().zip(den))
        .map(|(l, (n, d))| {
            if *d < crate::probability::SUPPORT_FLOOR || *n < crate::probability::SUPPORT_FLOOR {
                Err(Error::ZeroBelief(l.clone()))
            } else {
                Ok(n / d)
            }
        })
        .collect()
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs())
}
