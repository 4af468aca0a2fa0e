mod common;

use common::*;
use invlab::clt::{char_fn, uniform_integrability_probe, EmpiricalLaw};
use invlab::experiments::{
    calibrate_critical, neyman_scott_sweep, run_power, select, AlternativeSpec, NeymanScottConfig,
    PowerModel, PowerSettings,
};
use invlab::model::{ExpFamily, MeanVector, NeymanScottLayout};
use invlab::numeric::Estimate;
use invlab::orbit::{h_integral_log, lbar_heuristic, lbar_permutation, OrbitSpec};
use invlab::par;
use invlab::rng::StreamKey;
use invlab::statistics::{anova_f, chisq_statistic};
use rand::Rng as _;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, Continuous, FisherSnedecor};

fn normals(n: usize, rng: &mut invlab::rng::Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[test]
fn h_integral_matches_series() {
    for n in [3usize, 4, 10, 57, 200] {
        for t in [0.0, 0.3, 1.0, 4.5, 20.0, 60.0] {
            let got = h_integral_log(t, n).unwrap();
            let want = log_h_series(t, n);
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "n = {n}, t = {t}: {got} vs {want}");
        }
    }
}

#[test]
fn chisq_critical_matches_quantile() {
    let n = 20;
    let reps = 20_000;
    let c = calibrate_critical(
        |rng| Ok(chisq_statistic(&normals(n, rng))),
        0.05,
        reps,
        StreamKey::new(31),
    )
    .unwrap();
    let q = chi2_quantile(n as f64, 0.95);
    // SE of an order statistic: sqrt(p(1−p)/R)/f(q)
    let se = (0.05 * 0.95 / reps as f64).sqrt() / ChiSquared::new(n as f64).unwrap().pdf(q);
    assert!(within(c.value, q, se, 4.0), "{} vs {q}", c.value);
    assert!((q - 31.41).abs() < 0.01);
}

#[test]
fn anova_null_level_and_critical() {
    let (n, nu) = (10, 5);
    let layout = NeymanScottLayout::new(n, nu, 1.0).unwrap();
    let zeros = vec![0.0; n];
    let q = f_quantile((n - 1) as f64, (n * (nu - 1)) as f64, 0.95);
    let key = StreamKey::new(32);
    let hits: Vec<f64> = par::replicate(key, 10_000, |rng| {
        let x = layout.sample(&zeros, rng).unwrap();
        f64::from(anova_f(&x).unwrap() > q)
    });
    let rate = hits.iter().sum::<f64>() / hits.len() as f64;
    assert!((rate - 0.05).abs() < 0.01, "rejection rate {rate}");

    let reps = 20_000;
    let c = calibrate_critical(
        |rng| anova_f(&layout.sample(&zeros, rng)?),
        0.05,
        reps,
        key.named("calibrate"),
    )
    .unwrap();
    let f = FisherSnedecor::new((n - 1) as f64, (n * (nu - 1)) as f64).unwrap();
    let se = (0.05 * 0.95 / reps as f64).sqrt() / f.pdf(q);
    assert!(within(c.value, q, se, 4.0), "{} vs {q}", c.value);
}

#[test]
fn chisq_and_np_power_match_oracles() {
    let settings = PowerSettings { seed: 33, ..PowerSettings::default() };
    let alt: AlternativeSpec = "spike:3".parse().unwrap();
    let stats = vec!["chisq".to_string(), "np".to_string()];
    let np_target = normal_cdf(3.0 - normal_quantile(0.95));
    assert!((np_target - 0.912).abs() < 1e-3);
    for n in [100usize, 1000] {
        let reports = run_power(&PowerModel::Normal, &stats, &alt, n, &settings).unwrap();
        let chisq = &reports[0];
        let target = ncx2_sf(n as f64, 9.0, chi2_quantile(n as f64, 0.95));
        assert!(within(chisq.power_hat, target, chisq.power_se.hypot(0.004), 4.0), "n = {n}");
        let np = &reports[1];
        assert!(within(np.power_hat, np_target, np.power_se.hypot(0.004), 4.0), "n = {n}");
    }
    // the two anchor values quoted for this alternative
    assert!((ncx2_sf(100.0, 9.0, chi2_quantile(100.0, 0.95)) - 0.16).abs() < 0.01);
    assert!((ncx2_sf(1e4, 9.0, chi2_quantile(1e4, 0.95)) - 0.06).abs() < 0.01);
}

#[test]
fn neyman_scott_gap_at_largest_n() {
    let n = 10_000;
    let cfg = NeymanScottConfig {
        n_grid: vec![n],
        matrix_variate: false,
        settings: PowerSettings { seed: 34, reps: 4000, ..PowerSettings::default() },
        ..NeymanScottConfig::default()
    };
    let rows = neyman_scott_sweep(&cfg).unwrap();
    let cells: Vec<_> = rows.iter().map(|r| r.cell.clone()).collect();
    let row = select(&cells, "spike", "anova_f")[0];
    let m = invlab::clt::MProfile::Spike.build(n, 3.0, 0);
    let ncp = cfg.nu as f64 * m.iter().map(|v| v * v).sum::<f64>();
    let (d1, d2) = ((n - 1) as f64, (n * (cfg.nu - 1)) as f64);
    let target = ncf_sf(d1, d2, ncp, f_quantile(d1, d2, 0.95)) - 0.05;
    assert!(within(row.gap, target, row.gap_se, 4.0), "{} vs {target}", row.gap);
}

#[test]
fn gaussian_characteristic_function_and_tail() {
    let key = StreamKey::new(35);
    let mut rng = key.rng(0);
    let z = normals(100_000, &mut rng);
    let law = EmpiricalLaw::new(z.clone()).unwrap();
    let cf = char_fn(&law, 1.0);
    let cos: Vec<f64> = z.iter().map(|v| v.cos()).collect();
    let se = Estimate::from_samples(&cos).se;
    assert!(within(cf.re, (-0.5f64).exp(), se, 4.0));
    assert!(cf.im.abs() < 4.0 * se.max(0.003));

    // E[Z² 1(|Z| ≥ 3)] by the trapezoid rule on [3, 12], both tails
    let h = 1e-4;
    let f = |x: f64| x * x * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let steps = 90_000;
    let tail = 2.0 * h * ((1..steps).map(|k| f(3.0 + k as f64 * h)).sum::<f64>() + 0.5 * (f(3.0) + f(12.0)));
    let probe = uniform_integrability_probe(&law, &[3.0])[0];
    let terms: Vec<f64> = z.iter().map(|v| if v.abs() >= 3.0 { v * v } else { 0.0 }).collect();
    let se = Estimate::from_samples(&terms).se;
    assert!(within(probe, tail, se, 4.0), "{probe} vs {tail}");
}

#[test]
fn permutation_lbar_tracks_heuristic_for_small_entries() {
    let n = 500;
    let raw: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let norm = raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    let m: Vec<f64> = raw.iter().map(|v| (v - mean) / norm).collect();
    assert!(m.iter().all(|v| v.abs() <= 0.1));
    let m = MeanVector::new(m).unwrap();
    let key = StreamKey::new(36);
    let close: Vec<bool> = par::replicate(key, 200, |rng| {
        let x = normals(n, rng);
        let exact = lbar_permutation(ExpFamily::Normal, &m, &x, &OrbitSpec::monte_carlo(2000), rng).unwrap();
        let approx = lbar_heuristic(ExpFamily::Normal, &m, &x).unwrap();
        (exact - approx).abs() < 0.1
    });
    let frac = close.iter().filter(|&&c| c).count() as f64 / close.len() as f64;
    assert!(frac >= 0.95, "{frac}");
}

#[test]
fn monte_carlo_permutation_lbar_matches_exhaustive() {
    let n = 7;
    let key = StreamKey::new(37);
    let mut rng = key.rng(0);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = MeanVector::new(raw).unwrap();
    let x = normals(n, &mut rng);
    let exact = lbar_permutation(ExpFamily::Normal, &m, &x, &OrbitSpec::exhaustive(), &mut rng).unwrap();
    // the MC estimator's SE from repeated small averages
    let reps = 100_000;
    let mc = lbar_permutation(ExpFamily::Normal, &m, &x, &OrbitSpec::monte_carlo(reps), &mut key.rng(1)).unwrap();
    let singles: Vec<f64> = (0..2000)
        .map(|i| lbar_permutation(ExpFamily::Normal, &m, &x, &OrbitSpec::monte_carlo(1), &mut key.rng(2 + i)).unwrap())
        .collect();
    let se = Estimate::from_samples(&singles).se * (2000.0 / reps as f64).sqrt();
    assert!(within(mc, exact, se, 3.0), "{mc} vs {exact} (se {se})");
}
