//! Non-Bayesian updating in the Grether form and how to undo it.
//!
//! The agent's reported conditionals are
//! `pi_T(t|s) ∝ pi_T(t)^d * pi_S(s|t)^c`, with `c = d = 1` the Bayesian
//! case. For binary `S` and `T`, knowing `(c, d)` turns each reported row
//! into a known ratio `delta_k = nu_k / mu_k` between the belief after the
//! informative outcome (`nu`) and after the uninformative one (`mu`); the
//! two normalizations then give `mu_1 = (1 - delta_2) / (delta_1 - delta_2)`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::probability::{Belief, ConditionalFamily};

/// Default resolution of the `(c, d)` grid used for interval propagation.
pub const DEFAULT_GRID: usize = 21;

/// Relative gap below which `delta_1` and `delta_2` count as equal.
const DELTA_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GretherParams {
    /// Inference parameter: exponent on the likelihood.
    pub c: f64,
    /// Base-rate parameter: exponent on the prior.
    pub d: f64,
}

impl GretherParams {
    pub const BAYES: GretherParams = GretherParams { c: 1.0, d: 1.0 };

    pub fn new(c: f64, d: f64) -> Result<Self> {
        let p = GretherParams { c, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite() && self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Grether parameters must be positive, got c = {}, d = {}",
                self.c, self.d
            )));
        }
        Ok(())
    }
}

/// Reported conditionals over `T` for each state, produced by Grether
/// updating from the prior over `T` and the beliefs `pi_S(.|t)`.
///
/// `likelihoods` is indexed by proxy outcome: its conditioning labels are
/// the outcomes of `T` and its rows are beliefs over `S`. Zero exponents
/// are accepted here (signal or prior ignored entirely); inversion needs
/// both strictly positive.
pub fn grether_update(
    prior_t: &Belief,
    likelihoods: &ConditionalFamily,
    params: GretherParams,
) -> Result<ConditionalFamily> {
    let nonneg = |v: f64| v >= 0.0 && v.is_finite();
    if !(nonneg(params.c) && nonneg(params.d)) {
        return Err(Error::InvalidParameter(format!(
            "Grether exponents must be nonnegative, got c = {}, d = {}",
            params.c, params.d
        )));
    }
    prior_t.require_full_support().map_err(|_| zero_belief(prior_t))?;
    let outcomes = prior_t.labels().to_vec();
    let by_outcome = outcomes
        .iter()
        .map(|t| {
            likelihoods
                .row(t)
                .map_err(|_| Error::LabelMismatch(format!("no belief given outcome '{t}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let states = likelihoods.outcome_labels().to_vec();
    for b in &by_outcome {
        b.require_full_support().map_err(|_| zero_belief(b))?;
    }
    let rows = states
        .iter()
        .enumerate()
        .map(|(s, _)| {
            let masses: Vec<f64> = prior_t
                .weights()
                .iter()
                .zip(&by_outcome)
                .map(|(p, post)| p.powf(params.d) * post.weights()[s].powf(params.c))
                .collect();
            Belief::from_masses(outcomes.clone(), &masses)
        })
        .collect::<Result<Vec<_>>>()?;
    ConditionalFamily::new(states, rows)
}

/// Debiased belief for binary `S` and `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DebiasResult {
    /// Actual belief: conditional on the uninformative event.
    pub mu: Belief,
    /// Belief conditional on the informative outcome, `nu_k = delta_k mu_k`
    /// (only when the uninformative event is a single outcome).
    pub nu: Belief,
    pub deltas: [f64; 2],
}

/// Inverts Grether-distorted conditionals for binary `S` and `T`.
///
/// With the uninformative event a single outcome `e` and `o` the other,
/// `delta_k = (pi_T(o|s_k) / pi_T(e|s_k))^(1/c) * (pi_T(e) / pi_T(o))^(d/c)`.
/// When the event is all of `T`, the belief is the prior-weighted mixture
/// of the two recovered conditionals.
pub fn debias_identify_binary(
    prior_t: &Belief,
    elicited: &ConditionalFamily,
    params: GretherParams,
    event: &[String],
) -> Result<DebiasResult> {
    params.validate()?;
    if prior_t.len() != 2 || elicited.n_states() != 2 {
        return Err(Error::InvalidParameter(
            "debiasing is defined for binary S and binary T only".into(),
        ));
    }
    prior_t.require_full_support().map_err(|_| zero_belief(prior_t))?;
    let family = elicited.with_outcome_order(prior_t.labels())?;
    for row in family.rows() {
        row.require_full_support().map_err(|_| zero_belief(row))?;
    }
    for label in event {
        if prior_t.index_of(label).is_none() {
            return Err(Error::UnknownLabel(label.clone()));
        }
    }
    let (e, o) = match event {
        [single] => {
            let e = prior_t.index_of(single).unwrap_or(0);
            (e, 1 - e)
        }
        [_, _] => (1, 0),
        _ => {
            return Err(Error::InvalidParameter(
                "uninformative event must be one or both outcomes".into(),
            ))
        }
    };
    let p = prior_t.weights();
    let base = (p[e] / p[o]).powf(params.d / params.c);
    let deltas: Vec<f64> = family
        .rows()
        .iter()
        .map(|row| (row.weights()[o] / row.weights()[e]).powf(1.0 / params.c) * base)
        .collect();
    let (d1, d2) = (deltas[0], deltas[1]);
    if (d1 - d2).abs() <= DELTA_RTOL * d1.abs().max(d2.abs()) {
        return Err(Error::DegenerateDeltas(d1));
    }
    let mu1 = (1.0 - d2) / (d1 - d2);
    if !(mu1 > 0.0 && mu1 < 1.0) {
        return Err(Error::OutOfSimplex(mu1));
    }
    let states = family.state_labels().to_vec();
    let given_e = Belief::new(states.clone(), vec![mu1, 1.0 - mu1])?;
    let nu1 = d1 * mu1;
    let given_o = Belief::new(states.clone(), vec![nu1, 1.0 - nu1])?;
    let mu = if event.len() == 2 {
        let mixed: Vec<f64> = (0..2)
            .map(|s| p[e] * given_e.weights()[s] + p[o] * given_o.weights()[s])
            .collect();
        Belief::new(states, mixed)?
    } else {
        given_e.clone()
    };
    Ok(DebiasResult {
        mu,
        nu: given_o,
        deltas: [d1, d2],
    })
}

/// One out-of-sample updating task with known prior and likelihood ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationObservation {
    /// Prior over a binary hypothesis set.
    pub prior: Belief,
    /// `P(signal | h1) / P(signal | h2)`.
    pub likelihood_ratio: f64,
    pub reported_posterior: Belief,
}

impl CalibrationObservation {
    fn regressors(&self) -> Result<(f64, f64, f64)> {
        for b in [&self.prior, &self.reported_posterior] {
            if b.len() != 2 {
                return Err(Error::InvalidParameter("calibration beliefs must be binary".into()));
            }
            b.require_full_support()?;
        }
        if !(self.likelihood_ratio > 0.0 && self.likelihood_ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "likelihood ratio {} not positive",
                self.likelihood_ratio
            )));
        }
        let post = self.reported_posterior.weights_in(self.prior.labels())?;
        let pr = self.prior.weights();
        Ok((
            (post[0] / post[1]).ln(),
            self.likelihood_ratio.ln(),
            (pr[0] / pr[1]).ln(),
        ))
    }
}

/// Least-squares estimate of `(c, d)` with 95% confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub params: GretherParams,
    pub c_interval: (f64, f64),
    pub d_interval: (f64, f64),
    pub std_errors: (f64, f64),
    pub residual_std: f64,
    pub n: usize,
}

/// Regresses log posterior odds on log likelihood ratio and log prior odds
/// (no intercept). The coefficients are `c` and `d`.
pub fn calibrate_grether(observations: &[CalibrationObservation]) -> Result<Calibration> {
    let n = observations.len();
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: n });
    }
    let data = observations
        .iter()
        .map(|o| o.regressors())
        .collect::<Result<Vec<_>>>()?;
    let (mut xtx, mut xty) = (Matrix2::<f64>::zeros(), Vector2::<f64>::zeros());
    for &(y, lr, po) in &data {
        let x = Vector2::new(lr, po);
        xtx += x * x.transpose();
        xty += x * y;
    }
    let (a, b, d) = (xtx[(0, 0)], xtx[(0, 1)], xtx[(1, 1)]);
    // Squared cosine between the two regressor columns; 1 means collinear.
    let collinear = a <= 0.0 || d <= 0.0 || (b * b) / (a * d) > 1.0 - 1e-10;
    if collinear {
        return Err(Error::DegenerateDesign(
            "log likelihood ratios and log prior odds are collinear or constant at zero".into(),
        ));
    }
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::DegenerateDesign("singular normal equations".into()))?;
    let beta = inv * xty;
    let (c, dd) = (beta[0], beta[1]);
    let rss: f64 = data.iter().map(|&(y, lr, po)| (y - c * lr - dd * po).powi(2)).sum();
    let dof = (n - 2) as f64;
    let sigma2 = rss / dof;
    let se = ((sigma2 * inv[(0, 0)]).sqrt(), (sigma2 * inv[(1, 1)]).sqrt());
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.975);
    let params = GretherParams::new(c, dd)
        .map_err(|_| Error::DegenerateDesign(format!("estimates c = {c}, d = {dd} are not both positive")))?;
    Ok(Calibration {
        params,
        c_interval: (c - t * se.0, c + t * se.0),
        d_interval: (dd - t * se.1, dd + t * se.1),
        std_errors: se,
        residual_std: sigma2.sqrt(),
        n,
    })
}

/// Point estimate and range of the debiased `mu` of the first state over a
/// box of Grether parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DebiasInterval {
    pub point: DebiasResult,
    /// `mu` of the first state under the point estimate.
    pub mu_point: f64,
    pub mu_interval: (f64, f64),
    pub evaluated: usize,
    /// Grid points where debiasing failed (e.g. left the simplex).
    pub skipped: usize,
}

impl DebiasInterval {
    pub fn flagged(&self) -> bool {
        self.skipped > 0
    }
}

/// Evaluates the closed form over a `grid x grid` lattice of the `(c, d)`
/// box and reports the range of `mu_1`, skipping failing points.
pub fn debias_with_uncertainty(
    prior_t: &Belief,
    elicited: &ConditionalFamily,
    point: GretherParams,
    c_range: (f64, f64),
    d_range: (f64, f64),
    event: &[String],
    grid: usize,
) -> Result<DebiasInterval> {
    if grid == 0 || c_range.0 > c_range.1 || d_range.0 > d_range.1 {
        return Err(Error::InvalidParameter("empty parameter box".into()));
    }
    let point_result = debias_identify_binary(prior_t, elicited, point, event)?;
    let lattice = |(lo, hi): (f64, f64), i: usize| {
        if grid == 1 || lo == hi {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (grid - 1) as f64
        }
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut evaluated, mut skipped) = (0, 0);
    for i in 0..grid {
        for j in 0..grid {
            let params = GretherParams {
                c: lattice(c_range, i),
                d: lattice(d_range, j),
            };
            match debias_identify_binary(prior_t, elicited, params, event) {
                Ok(r) => {
                    let m = r.mu.weights()[0];
                    lo = lo.min(m);
                    hi = hi.max(m);
                    evaluated += 1;
                }
                Err(_) => skipped += 1,
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::EmptyInterval);
    }
    Ok(DebiasInterval {
        mu_point: point_result.mu.weights()[0],
        point: point_result,
        mu_interval: (lo, hi),
        evaluated,
        skipped,
    })
}

fn zero_belief(b: &Belief) -> Error {
    let label = b
        .iter()
        .find(|(_, w)| *w < crate::probability::SUPPORT_FLOOR)
        .map(|(l, _)| l)
        .unwrap_or("?");
    Error::ZeroBelief(label.to_string())
}
