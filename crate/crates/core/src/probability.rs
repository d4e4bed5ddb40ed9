//! Finite probability algebra over labelled outcome sets.
//!
//! Every value here is validated on construction and never renormalized
//! behind the caller's back: a weight vector that does not sum to one is an
//! error, not something to be fixed up. All operations align their inputs
//! by label, so two beliefs over `{a, b}` listed in different orders combine
//! correctly.

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` when a belief or joint table is constructed.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Smallest weight that counts as positive for full-support checks.
pub const SUPPORT_FLOOR: f64 = 1e-12;

/// A probability vector on a finite, ordered set of labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Belief {
    labels: Vec<String>,
    weights: Vec<f64>,
}

impl Belief {
    /// Validates and wraps a weight vector.
    pub fn new<L, I>(labels: I, weights: Vec<f64>) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        check_labels(&labels)?;
        if labels.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                found: weights.len(),
            });
        }
        check_simplex(&labels, &weights)?;
        Ok(Belief { labels, weights })
    }

    /// Like [`Belief::new`], additionally requiring every weight to be at
    /// least [`SUPPORT_FLOOR`].
    pub fn new_full_support<L, I>(labels: I, weights: Vec<f64>) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let belief = Belief::new(labels, weights)?;
        belief.require_full_support()?;
        Ok(belief)
    }

    pub fn uniform<L, I>(labels: I) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        Belief::new(labels, vec![1.0 / n as f64; n])
    }

    pub fn point_mass<L, I>(labels: I, at: &str) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let idx = labels
            .iter()
            .position(|l| l == at)
            .ok_or_else(|| Error::UnknownLabel(at.to_string()))?;
        let mut weights = vec![0.0; labels.len()];
        weights[idx] = 1.0;
        Belief::new(labels, weights)
    }

    /// Normalizes a nonnegative vector of masses. Only for values computed
    /// internally (conditionals, mixtures) whose total is known positive.
    pub(crate) fn from_masses(labels: Vec<String>, masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroMassEvent);
        }
        Belief::new(labels, masses.iter().map(|m| m / total).collect())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn weight(&self, label: &str) -> Option<f64> {
        self.index_of(label).map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.labels.iter().map(String::as_str).zip(self.weights.iter().copied())
    }

    pub fn is_full_support(&self) -> bool {
        self.weights.iter().all(|&w| w >= SUPPORT_FLOOR)
    }

    pub fn require_full_support(&self) -> Result<()> {
        match self.iter().find(|(_, w)| *w < SUPPORT_FLOOR) {
            Some((label, value)) => Err(Error::EmptySupport {
                label: label.to_string(),
                value,
            }),
            None => Ok(()),
        }
    }

    /// Weights reordered to follow `labels`. The label sets must coincide.
    pub fn weights_in(&self, labels: &[String]) -> Result<Vec<f64>> {
        let perm = alignment(&self.labels, labels)?;
        Ok(perm.into_iter().map(|i| self.weights[i]).collect())
    }

    /// The same belief with its labels listed in the order of `labels`.
    pub fn reordered(&self, labels: &[String]) -> Result<Belief> {
        Ok(Belief {
            labels: labels.to_vec(),
            weights: self.weights_in(labels)?,
        })
    }

    pub fn same_support(&self, other: &Belief) -> bool {
        alignment(&self.labels, &other.labels).is_ok()
    }

    /// Sum of absolute differences, aligned by label.
    pub fn l1_distance(&self, other: &Belief) -> Result<f64> {
        let theirs = other.weights_in(&self.labels)?;
        Ok(self.weights.iter().zip(&theirs).map(|(a, b)| (a - b).abs()).sum())
    }

    /// Largest absolute coordinate difference, aligned by label.
    pub fn max_abs_diff(&self, other: &Belief) -> Result<f64> {
        let theirs = other.weights_in(&self.labels)?;
        Ok(self
            .weights
            .iter()
            .zip(&theirs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// A probability table over `S x T`, rows indexed by states of `S` and
/// columns by outcomes of the proxy `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointBelief {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    /// Row-major, `row_labels.len() * col_labels.len()` cells.
    cells: Vec<f64>,
}

impl JointBelief {
    pub fn new<R, C>(row_labels: R, col_labels: C, rows: Vec<Vec<f64>>) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: Into<String>,
        C: IntoIterator,
        C::Item: Into<String>,
    {
        let row_labels: Vec<String> = row_labels.into_iter().map(Into::into).collect();
        let col_labels: Vec<String> = col_labels.into_iter().map(Into::into).collect();
        if row_labels.is_empty() || col_labels.is_empty() {
            return Err(Error::EmptyTable);
        }
        check_labels(&row_labels)?;
        check_labels(&col_labels)?;
        if rows.len() != row_labels.len() {
            return Err(Error::LengthMismatch {
                expected: row_labels.len(),
                found: rows.len(),
            });
        }
        let mut cells = Vec::with_capacity(row_labels.len() * col_labels.len());
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != col_labels.len() {
                return Err(Error::LengthMismatch {
                    expected: col_labels.len(),
                    found: row.len(),
                });
            }
            for (c, value) in row.into_iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::NonFinite(value));
                }
                if value < 0.0 {
                    return Err(Error::NegativeWeight {
                        label: format!("({}, {})", row_labels[r], col_labels[c]),
                        value,
                    });
                }
                cells.push(value);
            }
        }
        let sum: f64 = cells.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::SumNotOne { sum, tol: SIMPLEX_TOL });
        }
        Ok(JointBelief {
            row_labels,
            col_labels,
            cells,
        })
    }

    /// Product table of two independent marginals.
    pub fn independent(rows: &Belief, cols: &Belief) -> Result<Self> {
        let table = rows
            .weights()
            .iter()
            .map(|r| cols.weights().iter().map(|c| r * c).collect())
            .collect();
        JointBelief::new(rows.labels().to_vec(), cols.labels().to_vec(), table)
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.n_cols();
        &self.cells[row * n..(row + 1) * n]
    }

    /// Cells as nested rows, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|r| self.row(r).to_vec()).collect()
    }

    fn row_index(&self, label: &str) -> Result<usize> {
        self.row_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    fn col_index(&self, label: &str) -> Result<usize> {
        self.col_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Marginal belief over `S` (row sums).
    pub fn marginal_rows(&self) -> Belief {
        let sums: Vec<f64> = (0..self.n_rows()).map(|r| self.row(r).iter().sum()).collect();
        Belief {
            labels: self.row_labels.clone(),
            weights: sums,
        }
    }

    /// Marginal belief over `T` (column sums).
    pub fn marginal_cols(&self) -> Belief {
        let mut sums = vec![0.0; self.n_cols()];
        for r in 0..self.n_rows() {
            for (acc, v) in sums.iter_mut().zip(self.row(r)) {
                *acc += v;
            }
        }
        Belief {
            labels: self.col_labels.clone(),
            weights: sums,
        }
    }

    /// Belief over `T` given the state `state` of `S`.
    pub fn condition_on_state(&self, state: &str) -> Result<Belief> {
        let r = self.row_index(state)?;
        let row = self.row(r);
        let mass: f64 = row.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::ZeroMassCondition(state.to_string()));
        }
        Belief::new(self.col_labels.clone(), row.iter().map(|v| v / mass).collect())
    }

    /// Belief over `S` given the event `event` of `T`.
    pub fn condition_on_event<S: AsRef<str>>(&self, event: &[S]) -> Result<Belief> {
        if event.is_empty() {
            return Err(Error::InvalidParameter("conditioning event is empty".into()));
        }
        let mut cols = Vec::with_capacity(event.len());
        for label in event {
            let c = self.col_index(label.as_ref())?;
            if cols.contains(&c) {
                return Err(Error::DuplicateLabel(label.as_ref().to_string()));
            }
            cols.push(c);
        }
        // Conditioning on all of T is the row marginal, bit for bit.
        if cols.len() == self.n_cols() {
            return Ok(self.marginal_rows());
        }
        cols.sort_unstable();
        let masses: Vec<f64> = (0..self.n_rows())
            .map(|r| cols.iter().map(|&c| self.cell(r, c)).sum())
            .collect();
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMassEvent);
        }
        Belief::new(self.row_labels.clone(), masses.iter().map(|m| m / total).collect())
    }

    /// Mass of the event `event` of `T`.
    pub fn event_mass<S: AsRef<str>>(&self, event: &[S]) -> Result<f64> {
        let cols = self.marginal_cols();
        event
            .iter()
            .map(|l| {
                cols.weight(l.as_ref())
                    .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))
            })
            .sum()
    }

    /// The family of conditionals `pi_T(.|s)` for every state of `S`.
    pub fn conditional_family(&self) -> Result<ConditionalFamily> {
        let rows = self
            .row_labels
            .iter()
            .map(|s| self.condition_on_state(s))
            .collect::<Result<Vec<_>>>()?;
        ConditionalFamily::new(self.row_labels.clone(), rows)
    }
}

/// One belief over `T` for each state of `S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalFamily {
    state_labels: Vec<String>,
    outcome_labels: Vec<String>,
    /// Rows stored aligned to `outcome_labels`.
    rows: Vec<Belief>,
}

impl ConditionalFamily {
    /// Builds a family from per-state beliefs. All rows must share one label
    /// set; they are stored reordered to the labels of the first row.
    pub fn new<L, I>(state_labels: I, rows: Vec<Belief>) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let state_labels: Vec<String> = state_labels.into_iter().map(Into::into).collect();
        if state_labels.is_empty() {
            return Err(Error::EmptyTable);
        }
        check_labels(&state_labels)?;
        if rows.len() != state_labels.len() {
            return Err(Error::LengthMismatch {
                expected: state_labels.len(),
                found: rows.len(),
            });
        }
        let outcome_labels = rows[0].labels().to_vec();
        let rows = rows
            .iter()
            .map(|row| {
                row.reordered(&outcome_labels)
                    .map_err(|_| Error::LabelMismatch("conditional rows use different outcome labels".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConditionalFamily {
            state_labels,
            outcome_labels,
            rows,
        })
    }

    /// Builds a family from a `K x N` matrix of conditional probabilities.
    pub fn from_matrix<S, T>(state_labels: S, outcome_labels: T, matrix: Vec<Vec<f64>>) -> Result<Self>
    where
        S: IntoIterator,
        S::Item: Into<String>,
        T: IntoIterator,
        T::Item: Into<String>,
    {
        let outcome_labels: Vec<String> = outcome_labels.into_iter().map(Into::into).collect();
        let rows = matrix
            .into_iter()
            .map(|row| Belief::new(outcome_labels.clone(), row))
            .collect::<Result<Vec<_>>>()?;
        ConditionalFamily::new(state_labels.into_iter().map(Into::into).collect::<Vec<String>>(), rows)
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn outcome_labels(&self) -> &[String] {
        &self.outcome_labels
    }

    pub fn n_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcome_labels.len()
    }

    pub fn rows(&self) -> &[Belief] {
        &self.rows
    }

    pub fn row(&self, state: &str) -> Result<&Belief> {
        self.state_labels
            .iter()
            .position(|l| l == state)
            .map(|i| &self.rows[i])
            .ok_or_else(|| Error::UnknownLabel(state.to_string()))
    }

    /// Rows as a `K x N` matrix in label order.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.weights().to_vec()).collect()
    }

    /// The same family with outcomes listed in the order of `labels`.
    pub fn with_outcome_order(&self, labels: &[String]) -> Result<ConditionalFamily> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.reordered(labels))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConditionalFamily {
            state_labels: self.state_labels.clone(),
            outcome_labels: labels.to_vec(),
            rows,
        })
    }
}

/// Joint table `pi(s, t) = pi_S(s) * pi_T(t | s)`. Rows follow the label
/// order of `pi_s`.
pub fn compose(pi_s: &Belief, family: &ConditionalFamily) -> Result<JointBelief> {
    let perm = alignment(family.state_labels(), pi_s.labels())
        .map_err(|_| Error::LabelMismatch("state labels of belief and family differ".into()))?;
    let cells = perm
        .iter()
        .zip(pi_s.weights())
        .flat_map(|(&k, &p)| family.rows[k].weights().iter().map(move |c| p * c))
        .collect();
    Ok(JointBelief {
        row_labels: pi_s.labels().to_vec(),
        col_labels: family.outcome_labels().to_vec(),
        cells,
    })
}

/// Law of total probability: `pi_T = sum_s pi_T(.|s) pi_S(s)`.
pub fn total_probability(pi_s: &Belief, family: &ConditionalFamily) -> Result<Belief> {
    Ok(compose(pi_s, family)?.marginal_cols())
}

/// For each label of `to`, its position in `from`. Fails unless the two
/// label lists are permutations of each other.
pub(crate) fn alignment(from: &[String], to: &[String]) -> Result<Vec<usize>> {
    if from.len() != to.len() {
        return Err(Error::LabelMismatch(format!(
            "{} labels vs {} labels",
            from.len(),
            to.len()
        )));
    }
    to.iter()
        .map(|label| {
            from.iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::LabelMismatch(format!("label '{label}' missing")))
        })
        .collect()
}

fn check_labels(labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::EmptyTable);
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn check_simplex(labels: &[String], weights: &[f64]) -> Result<()> {
    for (label, &w) in labels.iter().zip(weights) {
        if !w.is_finite() {
            return Err(Error::NonFinite(w));
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight {
                label: label.clone(),
                value: w,
            });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::SumNotOne { sum, tol: SIMPLEX_TOL });
    }
    Ok(())
}
