//! Belief identification from elicited proxy conditionals.
//!
//! Given the announced prior over the proxy `T` and the agent's reported
//! conditionals `pi_T(.|s)`, the marginal `pi_S` is the unique simplex
//! vector mixing the conditionals into the prior. Composing it with the
//! conditionals gives the joint belief, and conditioning the joint on the
//! uninformative event gives the actual belief `mu`.

pub mod grether;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::probability::{compose, Belief, ConditionalFamily, JointBelief, SUPPORT_FLOOR};
use crate::proxy::{check_cardinality, check_p3, ProxySpec, DEFAULT_P3_TOL};

pub use grether::{
    calibrate_grether, debias_identify_binary, debias_with_uncertainty, grether_update, Calibration,
    CalibrationObservation, DebiasInterval, DebiasResult, GretherParams, DEFAULT_GRID,
};

/// Default bound on the residual of the total-probability system.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-6;

/// What to do when the elicited rows cannot reproduce the announced prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InconsistencyPolicy {
    Fail,
    Warn,
}

/// Numerical tolerances of the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Smallest singular value the conditional family must exceed.
    pub p3: f64,
    /// Coordinates in `[-negativity, 0)` are clamped to zero; below that the
    /// solve fails.
    pub negativity: f64,
    /// Largest acceptable residual `|sum_s x(s) row_s - prior|`.
    pub consistency: f64,
    pub on_inconsistent: InconsistencyPolicy,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            p3: DEFAULT_P3_TOL,
            negativity: DEFAULT_CONSISTENCY_TOL,
            consistency: DEFAULT_CONSISTENCY_TOL,
            on_inconsistent: InconsistencyPolicy::Fail,
        }
    }
}

impl Tolerances {
    /// Default tolerances with one value for both negativity and consistency.
    pub fn with_tol(tol: f64) -> Self {
        Tolerances {
            negativity: tol,
            consistency: tol,
            ..Tolerances::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub rank: usize,
    pub min_singular_value: f64,
    pub condition_number: f64,
    pub residual_norm: f64,
    pub clamped: bool,
    /// Set when the residual exceeded the consistency tolerance under
    /// [`InconsistencyPolicy::Warn`].
    pub inconsistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalSolution {
    pub pi_s: Belief,
    pub diagnostics: Diagnostics,
}

/// Solves `prior_T = sum_s pi_S(s) pi_T(.|s)` for `pi_S` on the simplex.
///
/// The sum-to-one equation is imposed exactly by eliminating the last
/// coordinate; the remaining system is solved in least squares. Slightly
/// negative coordinates (within `tol.negativity`) are clamped and the
/// vector renormalized, which is flagged in the diagnostics.
pub fn solve_lemma1(prior_t: &Belief, family: &ConditionalFamily, tol: &Tolerances) -> Result<MarginalSolution> {
    let family = family
        .with_outcome_order(prior_t.labels())
        .map_err(|_| Error::LabelMismatch("conditional rows and prior use different proxy labels".into()))?;
    let k = family.n_states();
    let n = family.n_outcomes();
    if !check_cardinality(k, n) {
        return Err(Error::NotIdentifiable(format!(
            "{k} states but only {n} proxy outcomes"
        )));
    }
    let p3 = check_p3(&family, tol.p3);
    if !p3.independent {
        return Err(Error::NotIdentifiable(format!(
            "conditionals are linearly dependent (rank {}, smallest singular value {:e})",
            p3.rank, p3.min_singular_value
        )));
    }

    let rows = family.matrix();
    let prior = prior_t.weights();
    let mut x = vec![1.0; k];
    if k > 1 {
        // Columns row_s - row_K, target prior - row_K; x_K = 1 - sum of the rest.
        let last = &rows[k - 1];
        let d = DMatrix::from_fn(n, k - 1, |t, s| rows[s][t] - last[t]);
        let rhs = DVector::from_fn(n, |t, _| prior[t] - last[t]);
        let y = d
            .svd(true, true)
            .solve(&rhs, f64::EPSILON)
            .map_err(|e| Error::NotIdentifiable(e.to_string()))?;
        x[..k - 1].copy_from_slice(y.as_slice());
        x[k - 1] = 1.0 - y.iter().sum::<f64>();
    }

    let mut clamped = false;
    for (label, v) in family.state_labels().iter().zip(x.iter_mut()) {
        if *v < -tol.negativity {
            return Err(Error::NegativeSolution {
                label: label.clone(),
                value: *v,
                tol: tol.negativity,
            });
        }
        if *v < 0.0 {
            *v = 0.0;
            clamped = true;
        }
    }
    if clamped {
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
    }

    let residual_norm = (0..n)
        .map(|t| {
            let fitted: f64 = (0..k).map(|s| x[s] * rows[s][t]).sum();
            (fitted - prior[t]).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    let inconsistent = residual_norm > tol.consistency;
    if inconsistent && tol.on_inconsistent == InconsistencyPolicy::Fail {
        return Err(Error::Inconsistent {
            residual: residual_norm,
            tol: tol.consistency,
        });
    }

    Ok(MarginalSolution {
        pi_s: Belief::new(family.state_labels().to_vec(), x)?,
        diagnostics: Diagnostics {
            rank: p3.rank,
            min_singular_value: p3.min_singular_value,
            condition_number: p3.condition_number,
            residual_norm,
            clamped,
            inconsistent,
        },
    })
}

/// Everything identified from one proxy experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationResult {
    pub pi_s: Belief,
    pub joint: JointBelief,
    pub mu: Belief,
    /// `pi_S(.|t)` for every proxy outcome with mass above [`SUPPORT_FLOOR`].
    pub posteriors: Vec<(String, Belief)>,
    pub uninformative_event: Vec<String>,
    pub diagnostics: Diagnostics,
}

impl IdentificationResult {
    pub fn posterior(&self, outcome: &str) -> Option<&Belief> {
        self.posteriors.iter().find(|(t, _)| t == outcome).map(|(_, b)| b)
    }
}

/// Full pipeline: marginal, joint, actual belief and posteriors.
pub fn identify(spec: &ProxySpec, elicited: &ConditionalFamily, tol: &Tolerances) -> Result<IdentificationResult> {
    let solution = solve_lemma1(spec.prior(), elicited, tol)?;
    let family = elicited.with_outcome_order(spec.labels())?;
    let joint = compose(&solution.pi_s, &family)?;
    // Masses at rounding level are zero; conditioning on them returns noise.
    if joint.event_mass(spec.uninformative_event())? <= SUPPORT_FLOOR {
        return Err(Error::ZeroMassEvent);
    }
    let mu = joint.condition_on_event(spec.uninformative_event())?;
    let columns = joint.marginal_cols();
    let posteriors = columns
        .iter()
        .filter(|(_, mass)| *mass > SUPPORT_FLOOR)
        .map(|(t, _)| Ok((t.to_string(), joint.condition_on_event(&[t])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentificationResult {
        pi_s: solution.pi_s,
        joint,
        mu,
        posteriors,
        uninformative_event: spec.uninformative_event().to_vec(),
        diagnostics: solution.diagnostics,
    })
}
