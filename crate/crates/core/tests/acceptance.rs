//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any fails.
//!
//! `cargo test --test acceptance -- 6 9` runs only the listed criteria.

use std::time::Instant;

use gsd_core::compare::{compare_batch, Variant};
use gsd_core::dist::{pmf, CategoricalSampler};
use gsd_core::envelope::variance_envelope;
use gsd_core::estimate::{
    log_likelihood, log_likelihood_gradient, p_max, GridConfig, GridEstimator,
};
use gsd_core::gof::{pp_plot_data, BoundKind, GofConfig, GofModel, ModelFitter};
use gsd_core::latent::{latent_decomposition, phi, LatentSpec};
use gsd_core::matrix::MatrixFitConfig;
use gsd_core::rng;
use gsd_core::study::{matrix_replicate, median, rmsd_study, StudyConfig};
use gsd_core::{CountSample, GsdParams};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn params(psi: f64, rho: f64, m: u32) -> GsdParams {
    GsdParams::new(psi, rho, m).unwrap()
}

fn counts(c: &[u64]) -> CountSample {
    CountSample::new(c.to_vec()).unwrap()
}

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn shifted_binomial(psi: f64, m: u32) -> Vec<f64> {
    let n = f64::from(m - 1);
    let p = (psi - 1.0) / n;
    (0..m)
        .map(|j| {
            let j = f64::from(j);
            (ln_choose(n, j) + j * p.ln() + (n - j) * (1.0 - p).ln()).exp()
        })
        .collect()
}

/// Variance of the two-point law on the integers around `psi`.
fn oracle_v_min(psi: f64) -> f64 {
    let frac = psi - psi.floor();
    frac * (1.0 - frac)
}

fn criterion_1() -> Outcome {
    let mut worst = [0.0f64; 3];
    for &m in &[3u32, 4, 5, 7, 11] {
        let steps = (f64::from(m - 1) / 0.05).round() as u32;
        for i in 0..=steps {
            let psi = 1.0 + f64::from(i) * 0.05;
            let psi = psi.min(f64::from(m));
            for j in 0..=20 {
                let rho = f64::from(j) * 0.05;
                let p = pmf(&params(psi, rho, m));
                let v_min = oracle_v_min(psi);
                let v_max = (psi - 1.0) * (f64::from(m) - psi);
                let sum: f64 = p.probs().iter().sum();
                let target = rho * v_min + (1.0 - rho) * v_max;
                worst[0] = worst[0].max((sum - 1.0).abs());
                worst[1] = worst[1].max((p.mean() - psi).abs());
                worst[2] = worst[2].max((p.variance() - target).abs());
            }
        }
    }
    outcome(
        worst[0] < 1e-12 && worst[1] < 1e-9 && worst[2] < 1e-9,
        format!(
            "max |sum-1|={:.1e}, |mean-psi|={:.1e}, |var-target|={:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut r = rng::stream(2, 0);
    let mut jump = 0.0f64;
    let mut bin_err = 0.0f64;
    for _ in 0..200 {
        let m = r.random_range(3..=11u32);
        let psi = r.random_range(1.0..f64::from(m));
        if psi == 1.0 {
            continue;
        }
        let c = variance_envelope(psi, m).unwrap().c;
        let below = pmf(&params(psi, (c - 1e-9).max(0.0), m));
        let above = pmf(&params(psi, (c + 1e-9).min(1.0), m));
        let at = pmf(&params(psi, c, m));
        let bin = shifted_binomial(psi, m);
        for (k, b) in bin.iter().enumerate() {
            jump = jump.max((below.probs()[k] - above.probs()[k]).abs());
            bin_err = bin_err.max((at.probs()[k] - b).abs());
        }
    }
    outcome(
        jump < 1e-6 && bin_err < 1e-9,
        format!("max jump across C={jump:.1e}, max |pmf(C)-binomial|={bin_err:.1e}"),
    )
}

fn criterion_3() -> Outcome {
    let cases: [(f64, f64, [f64; 5]); 2] = [
        (2.1, 0.95, [0.0605, 0.7947, 0.1303, 0.0132, 0.0013]),
        (2.85, 0.38, [0.3135, 0.1587, 0.1366, 0.1468, 0.2444]),
    ];
    let mut pmf_err = 0.0f64;
    for (psi, rho, expected) in cases {
        let p = pmf(&params(psi, rho, 5));
        for (a, b) in p.probs().iter().zip(expected) {
            pmf_err = pmf_err.max((a - b).abs());
        }
    }
    let p = params(3.3, 0.9, 5);
    let phi_expected = [(1.5, 0.795_114), (3.0, 0.432_573), (3.8, 0.277_199)];
    let mut phi_err = 0.0f64;
    for (x, v) in phi_expected {
        phi_err = phi_err.max((phi(&p, x).unwrap() - v).abs());
    }
    outcome(
        pmf_err < 5e-4 && phi_err < 5e-6,
        format!("max pmf error={pmf_err:.1e}, max phi error={phi_err:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let mut r = rng::stream(4, 0);
    let mut worst = 0.0f64;
    let mut probes = 0;
    while probes < 1000 {
        let m = r.random_range(3..=11u32);
        let psi = r.random_range(1.0..f64::from(m));
        if psi <= 1.0 {
            continue;
        }
        let c = variance_envelope(psi, m).unwrap().c;
        let rho = r.random_range(0.0..1.0) * c;
        if rho <= 0.0 {
            continue;
        }
        let p = params(psi, rho, m);
        let LatentSpec::Overdispersed {
            alpha,
            beta,
            trials,
        } = latent_decomposition(&p).unwrap()
        else {
            return outcome(false, format!("({psi}, {rho}, {m}) not overdispersed"));
        };
        let n = f64::from(trials);
        let closed = pmf(&p);
        for j in 0..=trials {
            let jf = f64::from(j);
            let oracle = (ln_choose(n, jf) + ln_beta(jf + alpha, n - jf + beta)
                - ln_beta(alpha, beta))
            .exp();
            let got = closed.probs()[j as usize];
            worst = worst.max((got - oracle).abs() / oracle);
        }
        probes += 1;
    }
    outcome(
        worst < 1e-10,
        format!("max relative error={worst:.1e} over 1000 probes"),
    )
}

fn criterion_5() -> Outcome {
    let h = 1e-6;
    let mut r = rng::stream(5, 0);
    let mut worst = [0.0f64; 2];
    let mut done = [0u32; 2];
    while done[0] < 1000 || done[1] < 1000 {
        let m = r.random_range(3..=9u32);
        let psi = r.random_range(1.0..f64::from(m));
        let c = variance_envelope(psi, m).unwrap().c;
        let rho = r.random_range(0.0..1.0);
        // Keep the stencil away from kinks and boundaries.
        if (psi - psi.round()).abs() < 1e-3
            || (rho - c).abs() < 1e-3
            || !(1e-3..=1.0 - 1e-3).contains(&rho)
        {
            continue;
        }
        let branch = usize::from(rho >= c);
        if done[branch] >= 1000 {
            continue;
        }
        let cnt: Vec<u64> = (0..m).map(|_| r.random_range(0..6u64)).collect();
        if cnt.iter().sum::<u64>() == 0 {
            continue;
        }
        let sample = counts(&cnt);
        let ll = |a: f64, b: f64| log_likelihood(&params(a, b, m), &sample).unwrap();
        if !ll(psi, rho).is_finite() {
            continue;
        }
        let (g_psi, g_rho) = log_likelihood_gradient(&params(psi, rho, m), &sample).unwrap();
        let fd_psi = (ll(psi + h, rho) - ll(psi - h, rho)) / (2.0 * h);
        let fd_rho = (ll(psi, rho + h) - ll(psi, rho - h)) / (2.0 * h);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        worst[branch] = worst[branch]
            .max(rel(g_psi, fd_psi))
            .max(rel(g_rho, fd_rho));
        done[branch] += 1;
    }
    outcome(
        worst[0] < 1e-4 && worst[1] < 1e-4,
        format!(
            "max relative error: overdispersed {:.1e}, underdispersed {:.1e}",
            worst[0], worst[1]
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut psi_values = vec![1.1];
    psi_values.extend((0..15).map(|i| 1.25 + 0.25 * f64::from(i)));
    psi_values.push(4.9);
    let rho_values: Vec<f64> = (1..=9).map(|i| 0.1 * f64::from(i)).collect();
    let config = StudyConfig {
        m: 5,
        sizes: vec![12, 200],
        psi_values: psi_values.clone(),
        rho_values: rho_values.clone(),
        replicates: 1000,
        grid: GridConfig::default(),
        seed: 6,
    };
    let cells = rmsd_study(&config).unwrap();
    let per = psi_values.len() * rho_values.len();
    let (small, large) = cells.split_at(per);
    let better = small
        .iter()
        .zip(large)
        .filter(|(s, l)| l.rmsd_psi < s.rmsd_psi && l.rmsd_rho < s.rmsd_rho)
        .count();
    let share = better as f64 / per as f64;
    let worst_psi = small
        .iter()
        .max_by(|a, b| a.rmsd_psi.total_cmp(&b.rmsd_psi))
        .unwrap();
    let worst_rho = small
        .iter()
        .max_by(|a, b| a.rmsd_rho.total_cmp(&b.rmsd_rho))
        .unwrap();
    let psi_hot = worst_psi.rho <= 0.3 && (2.0..=4.0).contains(&worst_psi.psi);
    let rho_hot = worst_rho.psi <= 1.5 || worst_rho.psi >= 4.5;
    outcome(
        share >= 0.95 && psi_hot && rho_hot,
        format!(
            "{better}/{per} cells improve; worst psi-hat cell (psi={}, rho={}); worst rho-hat cell (psi={}, rho={})",
            worst_psi.psi, worst_psi.rho, worst_rho.psi, worst_rho.rho
        ),
    )
}

fn criterion_7() -> Outcome {
    let truth = pmf(&params(2.1, 0.8, 5));
    let sampler = CategoricalSampler::new(&truth);
    let config = GofConfig {
        mc: 1000,
        seed: 7,
        ..GofConfig::default()
    };
    let mut fitter = ModelFitter::new(GofModel::Gsd, 5, &config).unwrap();
    let mut r = rng::stream(7, 0);
    let p_values: Vec<f64> = (0..1000u64)
        .map(|i| {
            let sample = sampler.draw_sample(&mut r, 24);
            fitter
                .bootstrap_g_test(&sample, config.mc, rng::derive_seed(7, i, 1))
                .unwrap()
                .p_value
        })
        .collect();
    let plot = pp_plot_data(&p_values, 0.05, 100, BoundKind::PointwiseBinomial).unwrap();
    let share = plot.exceedance_fraction();
    outcome(
        share <= 0.05,
        format!(
            "ECDF above the 95% bound at {:.1}% of 101 grid points",
            100.0 * share
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut r = rng::stream(8, 0);
    let large: Vec<CountSample> = (0..50)
        .map(|_| {
            let p = params(r.random_range(1.0..5.0), r.random_range(0.0..1.0), 5);
            CategoricalSampler::new(&pmf(&p)).draw_sample(&mut r, 200)
        })
        .collect();
    let sizes = [12, 24, 50];
    let mut pass = true;
    let mut parts = Vec::new();
    for (variant, name) in [
        (Variant::Unmodified, "unmodified"),
        (Variant::Corrected, "corrected"),
    ] {
        let batch =
            compare_batch(&large, &sizes, 2000, variant, 8, &GridConfig::default(), 20).unwrap();
        for &n in &sizes {
            let mean = batch.mean_diff(n).unwrap();
            pass &= mean > 0.0;
            parts.push(format!("{name} n={n}: {mean:+.3}"));
        }
    }
    outcome(pass, format!("mean diff {}", parts.join(", ")))
}

fn matrix_medians(size: usize, replicates: u64) -> (f64, f64) {
    let mut psi_abs = Vec::new();
    let mut rho_abs = Vec::new();
    for rep in 0..replicates {
        let errors = matrix_replicate(
            size,
            5,
            None,
            rng::derive_seed(9, size as u64, rep),
            &MatrixFitConfig::default(),
        )
        .unwrap();
        psi_abs.extend(errors.psi_abs);
        rho_abs.extend(errors.rho_abs);
    }
    (median(&psi_abs), median(&rho_abs))
}

fn criterion_9() -> Outcome {
    let (psi_50, rho_50) = matrix_medians(50, 100);
    let (psi_200, rho_200) = matrix_medians(200, 20);
    outcome(
        psi_50 < 0.2 && rho_50 < 0.15 && psi_200 < psi_50 && rho_200 < rho_50,
        format!("median |psi err| {psi_50:.4} -> {psi_200:.4}, median |rho err| {rho_50:.4} -> {rho_200:.4} (n=m=50 -> 200)"),
    )
}

fn criterion_10() -> Outcome {
    let mut estimator = GridEstimator::new(5, GridConfig::default()).unwrap();
    let mut r = rng::stream(10, 0);
    let mut violations = 0;
    let mut fitted = 0;
    for _ in 0..500 {
        let p = params(r.random_range(1.0..5.0), r.random_range(0.0..1.0), 5);
        let n = r.random_range(2..=200u64);
        let sample = CategoricalSampler::new(&pmf(&p)).draw_sample(&mut r, n);
        let fit = estimator.fit_constrained(&sample).unwrap();
        fitted += 1;
        if p_max(&fit.params) > 1.0 - 1.0 / n as f64 {
            violations += 1;
        }
    }
    let region = estimator.feasible_region(24);
    let rho_one_excluded = region
        .iter()
        .filter(|(_, rho, _)| *rho == 1.0)
        .all(|(_, _, ok)| !ok);
    let edges_excluded = region
        .iter()
        .filter(|(psi, _, _)| *psi <= 1.02 || *psi >= 4.98)
        .all(|(_, _, ok)| !ok);
    let interior = region
        .iter()
        .filter(|(psi, rho, ok)| *ok && (2.0..=4.0).contains(psi) && *rho <= 0.5)
        .count();
    let feasible_share = region.iter().filter(|t| t.2).count() as f64 / region.len() as f64;
    outcome(
        violations == 0 && rho_one_excluded && edges_excluded && interior > 0,
        format!(
            "{violations} of {fitted} fits violate the bound; rho=1 excluded: {rho_one_excluded}; scale edges excluded: {edges_excluded}; feasible share at n=24: {:.2}",
            feasible_share
        ),
    )
}

/// Pearson chi-square with cells of expected count below 5 pooled.
fn chi_square_p(observed: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pending = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        pending.0 += o as f64;
        pending.1 += p * n as f64;
        if pending.1 >= 5.0 {
            cells.push(pending);
            pending = (0.0, 0.0);
        }
    }
    if pending.1 > 0.0 || pending.0 > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += pending.0;
                last.1 += pending.1;
            }
            None => cells.push(pending),
        }
    }
    if cells.len() < 2 {
        return 1.0;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    1.0 - ChiSquared::new((cells.len() - 1) as f64).unwrap().cdf(stat)
}

fn criterion_11() -> Outcome {
    let mut r = rng::stream(11, 0);
    let mut min_p = 1.0f64;
    for _ in 0..20 {
        let m = r.random_range(3..=11u32);
        let p = params(
            r.random_range(1.0..f64::from(m)),
            r.random_range(0.0..1.0),
            m,
        );
        let exact = pmf(&p);
        let sample = CategoricalSampler::new(&exact).draw_sample(&mut r, 1_000_000);
        min_p = min_p.min(chi_square_p(sample.counts(), exact.probs()));
    }
    let mut under_err = 0.0f64;
    let mut over_err = 0.0f64;
    for _ in 0..500 {
        let m = r.random_range(3..=11u32);
        let psi = r.random_range(1.0..f64::from(m));
        let rho = r.random_range(0.0..1.0);
        if psi <= 1.0 || rho <= 0.0 {
            continue;
        }
        let p = params(psi, rho, m);
        let spec = latent_decomposition(&p).unwrap();
        let err = spec
            .pmf()
            .probs()
            .iter()
            .zip(pmf(&p).probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        match spec {
            LatentSpec::Underdispersed { .. } => under_err = under_err.max(err),
            LatentSpec::Overdispersed { .. } => over_err = over_err.max(err),
        }
    }
    outcome(
        min_p > 0.001 && under_err < 1e-12 && over_err < 1e-10,
        format!("min chi-square p={min_p:.4}; latent pmf max error: underdispersed {under_err:.1e}, overdispersed {over_err:.1e}"),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "normalisation and moment identities", criterion_1),
        (2, "branch continuity", criterion_2),
        (3, "figure values", criterion_3),
        (4, "beta-binomial equivalence", criterion_4),
        (5, "gradient check", criterion_5),
        (6, "estimation risk study", criterion_6),
        (7, "G-test null calibration", criterion_7),
        (8, "bootstrap comparison direction", criterion_8),
        (9, "matrix model", criterion_9),
        (10, "constrained estimator", criterion_10),
        (11, "sampler correctness", criterion_11),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict} {name}: {} [{:.1}s]",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
