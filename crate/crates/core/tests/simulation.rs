use arccover::lengths::LengthSequence;
use arccover::simulate::{run_trial, sample_centers, tail_uncovered, uncovered_at, TrialConfig};
use arccover::targets::TargetSet;

fn ks_statistic(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

#[test]
fn centers_look_uniform() {
    for seed in 0..5 {
        let n = 20_000;
        let d = ks_statistic(sample_centers(seed, n));
        assert!(d < 1.63 / (n as f64).sqrt(), "seed {seed}: D = {d}");
    }
}

#[test]
fn prefix_stable_across_lengths() {
    let long = sample_centers(123, 100_000);
    for n in [1, 17, 1000, 65_536] {
        assert_eq!(sample_centers(123, n)[..], long[..n]);
    }
}

#[test]
fn identical_configs_give_identical_traces() {
    let l = LengthSequence::log_over_n(1.3).unwrap();
    let t = TargetSet::finite(&[0.1, 0.7]).unwrap();
    let cfg = TrialConfig::new(&l, &t, 50_000, 77);
    let a = run_trial(&cfg).unwrap();
    let b = run_trial(&cfg).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert_ne!(a, run_trial(&TrialConfig { seed: 78, ..cfg }).unwrap());
}

#[test]
fn coverage_is_not_monotone_in_n() {
    let l = LengthSequence::log_over_n(1.0).unwrap();
    let t = TargetSet::circle();
    let found = (0..200).any(|seed| {
        let trace = run_trial(&TrialConfig::new(&l, &t, 20_000, seed)).unwrap();
        let cps = &trace.checkpoints;
        cps.iter()
            .enumerate()
            .any(|(i, a)| a.covered && cps[i + 1..].iter().any(|b| !b.covered))
    });
    assert!(found);
}

#[test]
fn circle_coverage_is_the_max_gap_test() {
    let l = LengthSequence::log_over_n(1.0).unwrap();
    let t = TargetSet::circle();
    for seed in 0..20 {
        let cfg = TrialConfig { first_checkpoint: 100, ..TrialConfig::new(&l, &t, 5000, seed) };
        let trace = run_trial(&cfg).unwrap();
        let centers = sample_centers(seed, 5000);
        for rec in &trace.checkpoints {
            let mut c = centers[..rec.n as usize].to_vec();
            c.sort_by(f64::total_cmp);
            let mut gap = c[0] + 1.0 - c[c.len() - 1];
            for w in c.windows(2) {
                gap = gap.max(w[1] - w[0]);
            }
            if (gap - rec.ell_n).abs() > 1e-12 {
                assert_eq!(rec.covered, gap < rec.ell_n);
            }
        }
    }
}

#[test]
fn residual_matches_target_intersection() {
    let l = LengthSequence::log_over_n(1.0).unwrap();
    let t = TargetSet::cantor(0.1, 3).unwrap();
    let cfg = TrialConfig::new(&l, &t, 500, 5);
    let tail = tail_uncovered(&cfg, 1).unwrap();
    let mut c = sample_centers(5, 500);
    c.sort_by(f64::total_cmp);
    let direct = t.approx().intersect(&uncovered_at(&c, l.eval(500).unwrap()).unwrap());
    assert_eq!(tail, direct);
}

#[test]
fn tail_measure_scales_like_n_to_minus_c() {
    let l = LengthSequence::log_over_n(0.5).unwrap();
    let t = TargetSet::circle();
    let expect = 1e6f64.powf(-0.5);
    for seed in 0..2 {
        let cfg = TrialConfig::new(&l, &t, 1_000_000, seed);
        let m = tail_uncovered(&cfg, 5).unwrap().measure();
        assert!(m > expect / 5.0 && m < expect * 5.0, "seed {seed}: {m}");
    }
}
