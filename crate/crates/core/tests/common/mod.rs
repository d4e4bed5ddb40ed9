#![allow(dead_code)]

use proxy_beliefs_core::probability::{Belief, JointBelief};
use proxy_beliefs_core::proxy::{check_p3, DEFAULT_P3_TOL};
use rand::Rng;

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Full-support belief with every coordinate at least `floor / n`.
pub fn random_belief<R: Rng>(rng: &mut R, labels: &[String], floor: f64) -> Belief {
    let raw: Vec<f64> = labels.iter().map(|_| floor + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    Belief::new(labels.to_vec(), raw.iter().map(|v| v / total).collect()).unwrap()
}

/// Random full-support joint whose conditionals pass the rank test with a
/// condition number at most 1e4.
pub fn random_joint<R: Rng>(rng: &mut R, k: usize, n: usize) -> JointBelief {
    loop {
        let raw: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| 0.02 + rng.random::<f64>()).collect())
            .collect();
        let total: f64 = raw.iter().flatten().sum();
        let rows = raw.iter().map(|r| r.iter().map(|v| v / total).collect()).collect();
        let joint = JointBelief::new(labels("s", k), labels("t", n), rows).unwrap();
        let p3 = check_p3(&joint.conditional_family().unwrap(), DEFAULT_P3_TOL);
        if p3.independent && p3.condition_number < 1e4 {
            return joint;
        }
    }
}

/// Nonempty random subset of the proxy outcomes.
pub fn random_event<R: Rng>(rng: &mut R, outcomes: &[String]) -> Vec<String> {
    loop {
        let e: Vec<String> = outcomes.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        if !e.is_empty() {
            return e;
        }
    }
}

/// Grether-distorted rows written out by hand for binary `S` and `T`:
/// `pi_T(t|s) ∝ pi_T(t)^d pi_S(s|t)^c`, with `mu = pi_S(.|e)` and
/// `nu = pi_S(.|o)`. Rows are `[pi_T(e|s), pi_T(o|s)]`.
pub fn grether_rows(prior_e: f64, mu: [f64; 2], nu: [f64; 2], c: f64, d: f64) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for s in 0..2 {
        let e = prior_e.powf(d) * mu[s].powf(c);
        let o = (1.0 - prior_e).powf(d) * nu[s].powf(c);
        out[s] = [e / (e + o), o / (e + o)];
    }
    out
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
