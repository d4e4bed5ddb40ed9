//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proxy_beliefs::commands::simulation_csv;
use proxy_beliefs_core::error::Error;
use proxy_beliefs_core::identification::{
    calibrate_grether, debias_identify_binary, identify, CalibrationObservation, GretherParams, Tolerances,
};
use proxy_beliefs_core::probability::{Belief, ConditionalFamily, JointBelief};
use proxy_beliefs_core::proxy::{
    build_influential_action, build_stochastic_evidence_design2, check_p3, design1_prior_diagnostic, ProxyFamily,
    ProxySpec, StochasticEvidenceParams, DEFAULT_P3_TOL,
};
use proxy_beliefs_core::seu::{recover_actual_utilities, rescale_representation, SeuRepresentation, StateUtilities};
use proxy_beliefs_core::simulation::{monte_carlo, qsr_optimal_report, trial_seed, MonteCarloConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn random_belief(rng: &mut ChaCha8Rng, labels: &[String]) -> Belief {
    let raw: Vec<f64> = labels.iter().map(|_| 0.02 + rng.random::<f64>()).collect();
    let z: f64 = raw.iter().sum();
    Belief::new(labels.to_vec(), raw.iter().map(|x| x / z).collect()).unwrap()
}

/// Full-support joint whose conditional family passes the rank test.
fn random_joint(rng: &mut ChaCha8Rng, k: usize, n: usize) -> JointBelief {
    loop {
        let raw: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| 0.02 + rng.random::<f64>()).collect())
            .collect();
        let z: f64 = raw.iter().flatten().sum();
        let rows = raw.iter().map(|r| r.iter().map(|x| x / z).collect()).collect();
        let joint = JointBelief::new(labels("s", k), labels("t", n), rows).unwrap();
        if check_p3(&joint.conditional_family().unwrap(), DEFAULT_P3_TOL).independent {
            return joint;
        }
    }
}

fn wife_family() -> ConditionalFamily {
    ConditionalFamily::from_matrix(["s1", "s2"], ["t1", "t2"], vec![vec![0.875, 0.125], vec![0.25, 0.75]]).unwrap()
}

fn wife_prior() -> Belief {
    Belief::new(["t1", "t2"], vec![0.5, 0.5]).unwrap()
}

fn criterion_1() -> Outcome {
    let spec = build_influential_action(wife_prior(), "t2").unwrap();
    let family = wife_family();
    let start = Instant::now();
    let r = identify(&spec, &family, &Tolerances::default()).unwrap();
    let elapsed = start.elapsed();
    let err = [
        max_abs(r.pi_s.weights(), &[0.4, 0.6]),
        max_abs(&r.joint.to_rows().concat(), &[0.35, 0.05, 0.15, 0.45]),
        max_abs(r.mu.weights(), &[0.1, 0.9]),
        max_abs(r.posterior("t1").unwrap().weights(), &[0.7, 0.3]),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    outcome(
        err <= 1e-10 && ms(elapsed) < 10.0,
        format!(
            "max error {err:.2e} (tol 1e-10), runtime {:.3} ms (limit 10 ms)",
            ms(elapsed)
        ),
    )
}

fn criterion_2() -> Outcome {
    let mu = Belief::new(["s1", "s2"], vec![0.1, 0.9]).unwrap();
    let r = qsr_optimal_report(&mu, &[81.0, 1.0]).unwrap();
    let err = max_abs(r.weights(), &[0.9, 0.1]);
    outcome(
        err <= 1e-12,
        format!("report {:?}, error {err:.2e} (tol 1e-12)", r.weights()),
    )
}

fn criterion_3() -> Outcome {
    let mu_bar = Belief::new(["s1", "s2"], vec![0.9, 0.1]).unwrap();
    let mu = Belief::new(["s1", "s2"], vec![0.1, 0.9]).unwrap();
    let rep = SeuRepresentation::new(StateUtilities::linear(["s1", "s2"], vec![1.0, 1.0]).unwrap(), mu_bar).unwrap();
    let class = recover_actual_utilities(&rep, &mu).unwrap();
    let ratio = class.slope_ratio("s1", "s2").unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let target = random_belief(&mut rng, &labels("s", 2));
        let moved = rescale_representation(&rep, &target).unwrap();
        let again = recover_actual_utilities(&moved, &mu).unwrap();
        worst = worst
            .max(max_abs(again.canonical().slopes(), class.canonical().slopes()))
            .max(max_abs(again.canonical().intercepts(), class.canonical().intercepts()));
    }
    outcome(
        (ratio - 81.0).abs() <= 1e-9 && worst <= 1e-9,
        format!(
            "slope ratio {ratio} (tol 1e-9); 50 rescaled representations, max class deviation {worst:.2e} (tol 1e-9)"
        ),
    )
}

fn criterion_4() -> Outcome {
    let t2 = vec!["t2".to_string()];
    let bayes = debias_identify_binary(&wife_prior(), &wife_family(), GretherParams::BAYES, &t2).unwrap();
    let exact_err = max_abs(&bayes.deltas, &[7.0, 1.0 / 3.0]).max((bayes.mu.weights()[0] - 0.1).abs());

    // Forward generation written out from pi_T(t|s) ∝ pi_T(t)^d pi_S(s|t)^c.
    let mut worst: f64 = 0.0;
    for case in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(4, case));
        let (c, d) = (rng.random_range(0.3..=3.0), rng.random_range(0.3..=3.0));
        let mu1: f64 = rng.random_range(0.1..0.9);
        let nu1 = loop {
            let x: f64 = rng.random_range(0.1..0.9);
            if (x - mu1).abs() >= 0.1 {
                break x;
            }
        };
        let prior_e: f64 = rng.random_range(0.2..0.8);
        let (mu, nu) = ([mu1, 1.0 - mu1], [nu1, 1.0 - nu1]);
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|s| {
                let e = prior_e.powf(d) * mu[s].powf(c);
                let o = (1.0 - prior_e).powf(d) * nu[s].powf(c);
                vec![o / (e + o), e / (e + o)]
            })
            .collect();
        let family = ConditionalFamily::from_matrix(["s1", "s2"], ["t1", "t2"], rows).unwrap();
        let prior = Belief::new(["t1", "t2"], vec![1.0 - prior_e, prior_e]).unwrap();
        let r = debias_identify_binary(&prior, &family, GretherParams::new(c, d).unwrap(), &t2).unwrap();
        worst = worst.max(max_abs(r.mu.weights(), &mu));
    }
    outcome(
        exact_err <= 1e-10 && worst <= 1e-9,
        format!(
            "deltas {:?}, mu1 {} (error {exact_err:.2e}, tol 1e-10); 500 planted cases, max error {worst:.2e} (tol 1e-9)",
            bayes.deltas,
            bayes.mu.weights()[0]
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut failures) = (0.0f64, 0);
    for i in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(5, i));
        let k = 2 + (i % 3) as usize;
        let n = k + rng.random_range(0..=2);
        let joint = random_joint(&mut rng, k, n);
        let event: Vec<String> = loop {
            let e: Vec<String> = joint
                .col_labels()
                .iter()
                .filter(|_| rng.random_bool(0.5))
                .cloned()
                .collect();
            if !e.is_empty() {
                break e;
            }
        };
        let truth_mu = joint.condition_on_event(&event).unwrap();
        let spec = ProxySpec::new(joint.marginal_cols(), event, ProxyFamily::Custom).unwrap();
        match identify(&spec, &joint.conditional_family().unwrap(), &Tolerances::default()) {
            Ok(r) => {
                worst = worst
                    .max(max_abs(r.pi_s.weights(), joint.marginal_rows().weights()))
                    .max(max_abs(r.mu.weights(), truth_mu.weights()));
            }
            Err(_) => failures += 1,
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && worst <= 1e-10 && elapsed.as_secs_f64() < 10.0,
        format!(
            "1000 instances, {failures} failures, max error {worst:.2e} (tol 1e-10), runtime {:.2} s (limit 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut dup_caught, mut wide_caught, total) = (0, 0, 200);
    for i in 0..total {
        let k = 2 + i % 3;
        let n = k + rng.random_range(0..=2);
        let mut rows = random_joint(&mut rng, k, n).conditional_family().unwrap().matrix();
        let (a, b) = (rng.random_range(0..k), rng.random_range(0..k - 1));
        let b = if b >= a { b + 1 } else { b };
        rows[b] = rows[a].clone();
        let family = ConditionalFamily::from_matrix(labels("s", k), labels("t", n), rows).unwrap();
        let spec = ProxySpec::new(
            random_belief(&mut rng, &labels("t", n)),
            vec!["t1".into()],
            ProxyFamily::Custom,
        )
        .unwrap();
        if matches!(
            identify(&spec, &family, &Tolerances::default()),
            Err(Error::NotIdentifiable(_))
        ) {
            dup_caught += 1;
        }

        let (k, n) = (2 + i % 4, 1 + rng.random_range(0..(1 + i % 4)));
        let rows = (0..k)
            .map(|_| random_belief(&mut rng, &labels("t", n)).weights().to_vec())
            .collect();
        let family = ConditionalFamily::from_matrix(labels("s", k), labels("t", n), rows).unwrap();
        let spec = ProxySpec::new(
            random_belief(&mut rng, &labels("t", n)),
            vec!["t1".into()],
            ProxyFamily::Custom,
        )
        .unwrap();
        if matches!(
            identify(&spec, &family, &Tolerances::default()),
            Err(Error::NotIdentifiable(_))
        ) {
            wide_caught += 1;
        }
    }

    let acc = [0.8, 0.2];
    let at =
        |m: [f64; 2]| design1_prior_diagnostic(&Belief::new(["s1", "s2"], m.to_vec()).unwrap(), &acc, 0.5).unwrap();
    let (p1, p2) = (at([0.1, 0.9]), at([0.5, 0.5]));
    let design1_ok = (p1 - 0.342105).abs() <= 1e-6 && (p2 - 0.5).abs() <= 1e-6;

    let params = StochasticEvidenceParams {
        informative_prob: 0.5,
        expert_accuracy: vec![("s1".into(), 0.8), ("s2".into(), 0.2)],
        charlatan_rate: 0.5,
    };
    let announced = build_stochastic_evidence_design2(&params).unwrap().prior().clone();
    let mut design2_dev: f64 = 0.0;
    for m in [[0.1, 0.9], [0.5, 0.5], [0.8, 0.2], [0.33, 0.67]] {
        let mu = Belief::new(["s1", "s2"], m.to_vec()).unwrap();
        let implied = params.agent_joint(&mu).unwrap().marginal_cols();
        design2_dev = design2_dev.max(max_abs(implied.weights(), announced.weights()));
    }
    outcome(
        dup_caught == total && wide_caught == total && design1_ok && design2_dev <= 1e-12,
        format!(
            "duplicated rows {dup_caught}/{total}, K>N {wide_caught}/{total} NotIdentifiable; Design 1 priors {p1:.6} vs {p2:.6} (tol 1e-6); Design 2 prior deviation across beliefs {design2_dev:.1e}"
        ),
    )
}

fn calibration_data(rng: &mut ChaCha8Rng, n: usize, c: f64, d: f64, sigma: f64) -> Vec<CalibrationObservation> {
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    (0..n)
        .map(|_| {
            let p: f64 = rng.random_range(0.1..0.9);
            let lr = rng.random_range(-2.0f64..2.0).exp();
            let mut log_odds = c * lr.ln() + d * (p / (1.0 - p)).ln();
            if sigma > 0.0 {
                log_odds += noise.sample(rng);
            }
            let post = 1.0 / (1.0 + (-log_odds).exp());
            CalibrationObservation {
                prior: Belief::new(["h1", "h2"], vec![p, 1.0 - p]).unwrap(),
                likelihood_ratio: lr,
                reported_posterior: Belief::new(["h1", "h2"], vec![post, 1.0 - post]).unwrap(),
            }
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let (c, d) = (0.6, 1.2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let exact = calibrate_grether(&calibration_data(&mut rng, 50, c, d, 0.0)).unwrap();
    let exact_err = (exact.params.c - c).abs().max((exact.params.d - d).abs());

    let (mut c_cover, mut d_cover, mut both) = (0, 0, 0);
    for rep in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(7, rep));
        let cal = calibrate_grether(&calibration_data(&mut rng, 200, c, d, 0.1)).unwrap();
        let ci = cal.c_interval.0 <= c && c <= cal.c_interval.1;
        let di = cal.d_interval.0 <= d && d <= cal.d_interval.1;
        c_cover += ci as usize;
        d_cover += di as usize;
        both += (ci && di) as usize;
    }
    outcome(
        exact_err <= 1e-9 && c_cover >= 90 && d_cover >= 90,
        format!(
            "noiseless error {exact_err:.2e} (tol 1e-9); sigma 0.1, n 200: c covered {c_cover}/100, d covered {d_cover}/100 (need >= 90 each; both {both}/100)"
        ),
    )
}

fn criterion_8() -> Outcome {
    let config = MonteCarloConfig {
        n_trials: 10_000,
        k: 2,
        n: 2,
        gamma_ranges: vec![(4.0, 81.0), (1.0, 1.0)],
        noise_sigma: 0.0,
        motivated_tilt: 0.0,
        stake: 100.0,
    };
    let start = Instant::now();
    let table = monte_carlo(&config, 8).unwrap();
    let elapsed = start.elapsed();
    let s = &table.summary;
    let (naive, proxy) = (s.naive_l1.unwrap().mean, s.proxy_l1.unwrap().mean);

    let csv_a = simulation_csv(&table).unwrap();
    let csv_b = simulation_csv(&monte_carlo(&config, 8).unwrap()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/monte-carlo.json");
    let files: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("run{i}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_proxy-beliefs"))
                .args([
                    "simulate",
                    "--scenario",
                    fixture,
                    "--trials",
                    "10000",
                    "--seed",
                    "8",
                    "--out",
                ])
                .arg(&path)
                .output()
                .unwrap()
                .status;
            assert!(status.success());
            std::fs::read(path).unwrap()
        })
        .collect();
    let identical = csv_a == csv_b && files[0] == files[1] && files[0] == csv_a;

    outcome(
        s.n_failed == 0 && proxy.abs() <= 1e-9 && naive > 0.5 && elapsed.as_secs_f64() < 30.0 && identical,
        format!(
            "10^4 trials, slope ratio in [4, 81]: mean proxy_L1 {proxy:.2e} (tol 1e-9), mean naive_L1 {naive:.4} (need > 0.5), {} failed, runtime {:.2} s (limit 30 s), CSV byte-identical across runs: {identical}",
            s.n_failed,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("wife-drug reproduction", criterion_1),
        ("misreport under the quadratic scoring rule", criterion_2),
        ("actual utility recovery", criterion_3),
        ("Grether closed form and planted recovery", criterion_4),
        ("identification round trip", criterion_5),
        ("failure detection and proxy priors", criterion_6),
        ("Grether calibration", criterion_7),
        ("Monte Carlo harness", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {} {name}: {}", i + 1, o.detail);
        failed += (!o.passed) as usize;
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
