mod common;

use proptest::prelude::*;
use proxy_beliefs_core::identification::{grether_update, identify, GretherParams, Tolerances};
use proxy_beliefs_core::probability::{compose, total_probability, Belief, ConditionalFamily, JointBelief};
use proxy_beliefs_core::proxy::{check_p3, ProxyFamily, ProxySpec, DEFAULT_P3_TOL};
use proxy_beliefs_core::seu::{
    belief_from_slopes, rank_states, recover_actual_utilities, rescale_representation, seu_value, state_weights, Act,
    SeuRepresentation, StateUtilities,
};
use proxy_beliefs_core::simulation::{qsr_optimal_report, MechanismSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{labels, max_abs, random_belief, random_joint};

/// Positive masses normalized into a full-support belief.
fn belief(n: usize) -> impl Strategy<Value = Belief> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(move |raw| {
        let total: f64 = raw.iter().sum();
        Belief::new(labels("s", n), raw.iter().map(|v| v / total).collect()).unwrap()
    })
}

fn beliefs(k: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, n), k).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let total: f64 = r.iter().sum();
                r.iter().map(|v| v / total).collect()
            })
            .collect()
    })
}

fn sized_belief() -> impl Strategy<Value = Belief> {
    (2usize..6).prop_flat_map(belief)
}

fn family_case() -> impl Strategy<Value = (Belief, ConditionalFamily)> {
    (1usize..5, 1usize..5).prop_flat_map(|(k, n)| {
        (belief(k), beliefs(k, n)).prop_map(move |(pi, rows)| {
            let family = ConditionalFamily::from_matrix(labels("s", k), labels("t", n), rows).unwrap();
            (pi, family)
        })
    })
}

/// Projection onto the probability simplex (sort-based).
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Maximizes expected quadratic score by projected gradient ascent.
fn numerical_best_report(mu: &[f64], gamma: &[f64], stake: f64) -> Vec<f64> {
    let m = MechanismSpec::quadratic(stake).unwrap();
    let n = mu.len();
    let mut r = vec![1.0 / n as f64; n];
    let weights: Vec<f64> = mu.iter().zip(gamma).map(|(a, b)| a * b).collect();
    let scale = weights.iter().sum::<f64>() * stake;
    let step = 0.25 / scale;
    for _ in 0..20_000 {
        // d/dr_j of sum_s w_s stake (1 - sum_j (1{j=s} - r_j)^2)
        let grad: Vec<f64> = (0..n)
            .map(|j| {
                let total_w: f64 = weights.iter().sum();
                2.0 * stake * (weights[j] - total_w * r[j])
            })
            .collect();
        let next = project_simplex(&r.iter().zip(&grad).map(|(x, g)| x + step * g).collect::<Vec<_>>());
        if max_abs(&next, &r) < 1e-15 {
            break;
        }
        r = next;
    }
    assert!(m.expected_utility(mu, gamma, &r).is_finite());
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn compose_round_trips((pi, family) in family_case()) {
        let joint = compose(&pi, &family).unwrap();
        prop_assert!(max_abs(joint.marginal_rows().weights(), pi.weights()) < 1e-12);
        for (s, row) in family.state_labels().iter().zip(family.rows()) {
            let back = joint.condition_on_state(s).unwrap();
            prop_assert!(max_abs(back.weights(), row.weights()) < 1e-12);
        }
    }

    #[test]
    fn whole_proxy_event_is_the_marginal((pi, family) in family_case()) {
        let joint = compose(&pi, &family).unwrap();
        prop_assert_eq!(joint.condition_on_event(joint.col_labels()).unwrap(), joint.marginal_rows());
    }

    #[test]
    fn total_probability_is_a_belief((pi, family) in family_case()) {
        let p = total_probability(&pi, &family).unwrap();
        prop_assert!(Belief::new(p.labels().to_vec(), p.weights().to_vec()).is_ok());
    }

    #[test]
    fn rescaling_preserves_every_act(
        (b, target, slopes, intercepts, acts) in (2usize..5).prop_flat_map(|k| (
            belief(k),
            belief(k),
            prop::collection::vec(0.1f64..10.0, k),
            prop::collection::vec(-5.0f64..5.0, k),
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, k), 200),
        ))
    ) {
        let k = b.len();
        let rep = SeuRepresentation::new(StateUtilities::new(labels("s", k), intercepts, slopes).unwrap(), b).unwrap();
        let moved = rescale_representation(&rep, &target).unwrap();
        for payoffs in acts {
            let act = Act::new(labels("s", k), payoffs).unwrap();
            let (a, b) = (seu_value(&rep, &act).unwrap(), seu_value(&moved, &act).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn actual_utility_class_ignores_the_starting_representation(
        (b, other, mu, slopes, intercepts) in (2usize..5).prop_flat_map(|k| (
            belief(k),
            belief(k),
            belief(k),
            prop::collection::vec(0.1f64..10.0, k),
            prop::collection::vec(-5.0f64..5.0, k),
        ))
    ) {
        let k = b.len();
        let rep = SeuRepresentation::new(StateUtilities::new(labels("s", k), intercepts, slopes).unwrap(), b).unwrap();
        let class = recover_actual_utilities(&rep, &mu).unwrap();
        let again = recover_actual_utilities(&rescale_representation(&rep, &other).unwrap(), &mu).unwrap();
        prop_assert!(max_abs(class.canonical().slopes(), again.canonical().slopes()) < 1e-9);
        prop_assert!(max_abs(class.canonical().intercepts(), again.canonical().intercepts()) < 1e-9);

        let act = Act::new(labels("s", k), (0..k).map(|i| 10.0 * i as f64 - 7.0).collect()).unwrap();
        let (x, y) = (seu_value(&rep, &act).unwrap(), seu_value(&class.representation(), &act).unwrap());
        prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
    }

    #[test]
    fn state_ranking_follows_canonical_slopes(
        (mu_bar, mu, gbar) in (2usize..6).prop_flat_map(|k| (belief(k), belief(k), 0.1f64..10.0))
    ) {
        let k = mu.len();
        let w = state_weights(&mu_bar, &mu).unwrap();
        let rep = SeuRepresentation::new(StateUtilities::linear(labels("s", k), vec![gbar; k]).unwrap(), mu_bar).unwrap();
        let class = recover_actual_utilities(&rep, &mu).unwrap();
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
            idx
        };
        prop_assert_eq!(order(w.weights()), order(class.canonical().slopes()));
        // Every ranked state appears once, best first.
        let ranked: Vec<String> = rank_states(&w).into_iter().flatten().collect();
        prop_assert_eq!(ranked.len(), k);
        let first = w.weight(&ranked[0]).unwrap();
        prop_assert!(w.weights().iter().all(|&x| x <= first));
    }

    #[test]
    fn constant_slopes_give_uniform(k in 1usize..8, g in 0.01f64..100.0) {
        let b = belief_from_slopes(labels("s", k), &vec![g; k]).unwrap();
        prop_assert_eq!(b, Belief::uniform(labels("s", k)).unwrap());
    }

    #[test]
    fn no_stakes_means_truthful(mu in sized_belief(), g in 0.01f64..100.0) {
        let r = qsr_optimal_report(&mu, &vec![g; mu.len()]).unwrap();
        prop_assert_eq!(r, mu);
    }

    #[test]
    fn report_ratio_law(
        (mu, gamma) in (2usize..6).prop_flat_map(|k| (belief(k), prop::collection::vec(0.1f64..100.0, k)))
    ) {
        let r = qsr_optimal_report(&mu, &gamma).unwrap();
        let (m, w) = (mu.weights(), r.weights());
        for i in 0..m.len() {
            for j in 0..m.len() {
                let want = m[i] / m[j] * gamma[i] / gamma[j];
                prop_assert!((w[i] / w[j] - want).abs() <= 1e-9 * want.max(1.0));
            }
        }
    }

    #[test]
    fn wider_than_tall_families_fail_p3(rows in (2usize..6).prop_flat_map(|k| beliefs(k, k - 1).prop_map(move |r| (k, r)))) {
        let (k, rows) = rows;
        let family = ConditionalFamily::from_matrix(labels("s", k), labels("t", k - 1), rows).unwrap();
        prop_assert!(!check_p3(&family, DEFAULT_P3_TOL).independent);
    }

    #[test]
    fn bayesian_grether_is_bayes(seed in any::<u64>(), k in 1usize..4, extra in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let joint = random_joint(&mut rng, k, k + extra);
        let by_t = joint.col_labels().iter().map(|t| joint.condition_on_event(&[t]).unwrap()).collect();
        let likelihoods = ConditionalFamily::new(joint.col_labels().to_vec(), by_t).unwrap();
        let updated = grether_update(&joint.marginal_cols(), &likelihoods, GretherParams::BAYES).unwrap();
        for (a, b) in updated.rows().iter().zip(joint.conditional_family().unwrap().rows()) {
            prop_assert!(max_abs(a.weights(), b.weights()) < 1e-12);
        }
    }
}

/// Closed-form best response against a numerical maximizer of the expected
/// quadratic score over the simplex.
#[test]
fn qsr_closed_form_matches_numerical_maximizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 2..=5 {
        for _ in 0..40 {
            let mu = random_belief(&mut rng, &labels("s", k), 0.05);
            let gamma: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, 0.2..20.0)).collect();
            let closed = qsr_optimal_report(&mu, &gamma).unwrap();
            let numeric = numerical_best_report(mu.weights(), &gamma, 100.0);
            assert!(max_abs(closed.weights(), &numeric) < 1e-6, "{closed:?} vs {numeric:?}");
        }
    }
    let mu = Belief::new(["a", "b", "c"], vec![0.2, 0.3, 0.5]).unwrap();
    let numeric = numerical_best_report(mu.weights(), &[1.0, 2.0, 4.0], 1.0);
    assert!(max_abs(&numeric, &[1.0 / 14.0, 3.0 / 14.0, 10.0 / 14.0]) < 1e-6);
}

/// Relabeling and reordering the proxy outcomes leaves the identified
/// marginal untouched.
#[test]
fn identification_aligns_by_label() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let joint = random_joint(&mut rng, 3, 4);
        let family = joint.conditional_family().unwrap();
        let spec = ProxySpec::new(joint.marginal_cols(), vec!["t2".into()], ProxyFamily::Custom).unwrap();
        let base = identify(&spec, &family, &Tolerances::default()).unwrap();

        let order: Vec<String> = ["t3", "t1", "t4", "t2"].iter().map(|s| s.to_string()).collect();
        let prior = joint.marginal_cols().reordered(&order).unwrap();
        let shuffled = family.with_outcome_order(&order).unwrap();
        let spec2 = ProxySpec::new(prior, vec!["t2".into()], ProxyFamily::Custom).unwrap();
        let moved = identify(&spec2, &shuffled, &Tolerances::default()).unwrap();
        assert!(max_abs(base.pi_s.weights(), moved.pi_s.weights()) < 1e-12);
        assert!(max_abs(base.mu.weights(), moved.mu.weights()) < 1e-12);
    }
}

#[test]
fn independent_joint_has_no_identifiable_split() {
    let rows = Belief::new(["s1", "s2"], vec![0.3, 0.7]).unwrap();
    let cols = Belief::new(["t1", "t2"], vec![0.4, 0.6]).unwrap();
    let joint = JointBelief::independent(&rows, &cols).unwrap();
    assert!(!check_p3(&joint.conditional_family().unwrap(), DEFAULT_P3_TOL).independent);
}
