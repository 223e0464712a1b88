use polysweep_core::crawler::{self, CrawlerOptions, Gait};
use polysweep_core::scenarios;
use polysweep_core::{PeriodicSignal, Tolerances};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QUARTERS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

fn random_signal(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> PeriodicSignal {
    PeriodicSignal::piecewise_linear(1.0, QUARTERS.iter().map(|&t| (t, rng.gen_range(lo..hi))).collect())
        .unwrap()
}

fn random_gait(rng: &mut ChaCha8Rng, n: usize) -> Gait {
    let k = rng.gen_range(0.5..2.0);
    let rest = (0..n - 1).map(|_| random_signal(rng, -4.0, 4.0)).collect();
    let plus = (0..n).map(|_| random_signal(rng, 0.5, 2.0)).collect();
    let minus = (0..n).map(|_| random_signal(rng, 0.5, 2.0)).collect();
    Gait::new(1.0, k, rest, plus, minus).unwrap()
}

fn random_gait_with_margin(rng: &mut ChaCha8Rng, n: usize, margin: f64) -> Gait {
    loop {
        let g = random_gait(rng, n);
        if scenarios::gait_margin(&g, 400) > margin {
            return g;
        }
    }
}

/// Shape at rest (zero spring force) with mean `y`.
fn rest_start(g: &Gait, y: f64) -> Vec<f64> {
    let z: Vec<f64> = g.rest_lengths().iter().map(|l| l.eval(0.0)).collect();
    crawler::compose(y, &z)
}

fn random_start(g: &Gait, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k_set = crawler::reduced_set(g).unwrap().freeze(0.0);
    let (lo, hi) = k_set.bounding_box(1e-9).unwrap();
    loop {
        let w: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect();
        if k_set.contains(&w, 0.0) {
            let z: Vec<f64> = w.iter().map(|v| -v / g.stiffness()).collect();
            return crawler::compose(rng.gen_range(-5.0..5.0), &z);
        }
    }
}

fn velocity(g: &Gait, x0: &[f64], periods: usize, m: usize) -> f64 {
    let run = crawler::simulate_reduced(g, x0, 0.0, periods, m, &CrawlerOptions::default()).unwrap();
    crawler::estimate_velocity(&run.y, m, g.period(), 1e-6).unwrap().v0
}

#[test]
fn reference_gait_velocity() {
    let g = scenarios::gait_star();
    let oracle = crawler::incremental_oracle(&g, &[0.0, 0.0], 0.0, 4, 8000, 1e-9).unwrap();
    let oy: Vec<f64> = oracle.iter().map(|x| crawler::mean(x)).collect();
    let v_ref = crawler::estimate_velocity(&oy, 8000, 1.0, 1e-9).unwrap().v0;
    assert!((v_ref - 2.0).abs() < 1e-9, "{v_ref}");
    let v0 = velocity(&g, &[0.0, 0.0], 10, 2000);
    assert!((v0 - v_ref).abs() <= 0.02);
    let mirror = velocity(&g.mirrored(), &[0.0, 0.0], 10, 2000);
    assert!((mirror + v0).abs() <= 0.02);
}

#[test]
fn velocity_does_not_depend_on_the_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = scenarios::gait_star();
    let m = 1000;
    let vs: Vec<f64> = (0..5).map(|_| velocity(&g, &random_start(&g, &mut rng), 6, m)).collect();
    let spread = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - vs.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(spread <= 1e-6 + 10.0 / m as f64, "{vs:?}");
}

#[test]
fn reduced_pipeline_matches_incremental_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [2, 3, 3, 4] {
        let g = random_gait_with_margin(&mut rng, n, 0.1);
        let x0 = random_start(&g, &mut rng);
        let run = crawler::simulate_reduced(&g, &x0, 0.0, 3, 400, &CrawlerOptions::default()).unwrap();
        let oracle = crawler::incremental_oracle(&g, &x0, 0.0, 3, 400, 1e-9).unwrap();
        let d = crawler::sup_distance(&run.x, &oracle);
        assert!(d <= 1e-8, "N = {n}: {d}");
    }
}

#[test]
fn stretching_time_keeps_the_path() {
    let g = scenarios::gait_three();
    let slow = |s: &PeriodicSignal| {
        PeriodicSignal::piecewise_linear(2.0, s.points().iter().map(|&(t, v)| (2.0 * t, v)).collect())
            .unwrap()
    };
    let g2 = Gait::new(
        2.0,
        g.stiffness(),
        g.rest_lengths().iter().map(slow).collect(),
        g.mu_plus().iter().map(slow).collect(),
        g.mu_minus().iter().map(slow).collect(),
    )
    .unwrap();
    let x0 = rest_start(&g, 0.0);
    let opts = CrawlerOptions::default();
    let a = crawler::simulate_reduced(&g, &x0, 0.0, 3, 400, &opts).unwrap();
    let b = crawler::simulate_reduced(&g2, &x0, 0.0, 3, 400, &opts).unwrap();
    assert!(crawler::sup_distance(&a.x, &b.x) <= 1e-12);
}

#[test]
fn scaling_forces_and_lengths_scales_motion() {
    let g = scenarios::gait_three();
    let c = 2.5;
    let scale = |s: &PeriodicSignal| PeriodicSignal::linear_combination(0.0, &[(c, s)]).unwrap();
    let g2 = Gait::new(
        g.period(),
        g.stiffness(),
        g.rest_lengths().iter().map(scale).collect(),
        g.mu_plus().iter().map(scale).collect(),
        g.mu_minus().iter().map(scale).collect(),
    )
    .unwrap();
    let x0 = rest_start(&g, 0.3);
    let x0c: Vec<f64> = x0.iter().map(|v| c * v).collect();
    let opts = CrawlerOptions::default();
    let a = crawler::simulate_reduced(&g, &x0, 0.0, 3, 300, &opts).unwrap();
    let b = crawler::simulate_reduced(&g2, &x0c, 0.0, 3, 300, &opts).unwrap();
    for (xa, xb) in a.x.iter().zip(&b.x) {
        for (u, v) in xa.iter().zip(xb) {
            assert!((c * u - v).abs() <= 1e-9);
        }
    }
}

#[test]
fn running_periodic_profile_closes() {
    let g = scenarios::gait_three();
    let m = 400;
    // the shape of this gait settles geometrically, halving each period
    let run = crawler::simulate_reduced(&g, &rest_start(&g, 0.0), 0.0, 28, m, &CrawlerOptions::default())
        .unwrap();
    let rp = crawler::running_periodic_decomposition(&run.x, m, g.period(), 1e-6).unwrap();
    assert!(rp.converged, "residual {}", rp.residual);
    assert_eq!(rp.profile.len(), m + 1);
}

#[test]
fn margin_vanishes_exactly_when_licq_fails() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let tols = Tolerances::default();
    let mut degenerate_points = 0;
    for _ in 0..10 {
        let n = rng.gen_range(2..=4);
        // integer friction makes exact ties between subset sums likely
        let int_signal = |rng: &mut ChaCha8Rng| {
            PeriodicSignal::piecewise_linear(
                1.0,
                vec![(0.0, rng.gen_range(1..=3) as f64), (0.5, rng.gen_range(1..=3) as f64)],
            )
            .unwrap()
        };
        let plus = (0..n).map(|_| int_signal(&mut rng)).collect();
        let minus = (0..n).map(|_| int_signal(&mut rng)).collect();
        let rest = (0..n - 1).map(|_| random_signal(&mut rng, -2.0, 2.0)).collect();
        let g = Gait::new(1.0, 1.0, rest, plus, minus).unwrap();
        let k_set = crawler::reduced_set(&g).unwrap();
        for j in 0..40 {
            let t = j as f64 / 40.0;
            let (margin, _) = crawler::uniqueness_margin(&g, t);
            let licq = k_set.freeze(t).check_licq(&tols).unwrap().holds;
            assert_eq!(margin <= tols.tol, !licq, "t = {t}, margin {margin}");
            degenerate_points += usize::from(!licq);
        }
    }
    assert!(degenerate_points > 0);
}

proptest! {
    #[test]
    fn force_set_and_reduced_set_agree(seed in any::<u64>(), x in prop::collection::vec(-3.0..3.0f64, 4), t in 0.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_gait(&mut rng, 4);
        let k_set = crawler::reduced_set(&g).unwrap();
        let strict = crawler::admissible(&g, t, &x, -1e-9);
        let loose = crawler::admissible(&g, t, &x, 1e-9);
        let reduced = crawler::admissible_reduced(&g, &k_set, t, &x, 0.0);
        prop_assert!(!strict || reduced);
        prop_assert!(!reduced || loose);
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), x in prop::collection::vec(-3.0..3.0f64, 3), t in 0.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_gait(&mut rng, 3);
        let grad = crawler::energy_gradient(&g, t, &x);
        let eps = 1e-6;
        for i in 0..3 {
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += eps;
            down[i] -= eps;
            let fd = (crawler::energy(&g, t, &up) - crawler::energy(&g, t, &down)) / (2.0 * eps);
            prop_assert!((fd - grad[i]).abs() <= 1e-6 * (1.0 + grad[i].abs()));
        }
        prop_assert!(grad.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn dissipation_is_positively_homogeneous(seed in any::<u64>(), v in prop::collection::vec(-3.0..3.0f64, 3), c in 0.0..10.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_gait(&mut rng, 3);
        let cv: Vec<f64> = v.iter().map(|x| c * x).collect();
        let a = crawler::dissipation(&g, 0.2, &cv);
        let b = c * crawler::dissipation(&g, 0.2, &v);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        prop_assert!(crawler::dissipation(&g, 0.2, &v) >= 0.0);
    }
}
