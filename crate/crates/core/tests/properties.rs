use gsd_core::dist::{cdf, pmf, quantile, sample};
use gsd_core::gof::g_statistic;
use gsd_core::matrix::{fit_matrix, MatrixFitConfig, Rating, RatingMatrix};
use gsd_core::{CountSample, GsdParams};
use proptest::prelude::*;

fn any_params() -> impl Strategy<Value = GsdParams> {
    (3u32..=10).prop_flat_map(|m| {
        (1.0..=f64::from(m), 0.0..=1.0f64)
            .prop_map(move |(psi, rho)| GsdParams::new(psi, rho, m).unwrap())
    })
}

proptest! {
    #[test]
    fn pmf_is_a_distribution_with_mean_psi(p in any_params()) {
        let probs = pmf(&p);
        prop_assert!(probs.probs().iter().all(|&q| (0.0..=1.0).contains(&q)));
        prop_assert!((probs.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((probs.mean() - p.psi()).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf(p in any_params(), u in 0.0..1.0f64) {
        let k = quantile(&p, u).unwrap();
        prop_assert!(cdf(&p, k).unwrap() >= u);
        if k > 1 {
            prop_assert!(cdf(&p, k - 1).unwrap() < u);
        }
    }

    #[test]
    fn sampling_is_deterministic(p in any_params(), seed in any::<u64>()) {
        let a = sample(&p, 50, seed).unwrap();
        prop_assert_eq!(&a, &sample(&p, 50, seed).unwrap());
        prop_assert!(a.iter().all(|&k| k >= 1 && k <= p.m()));
    }

    #[test]
    fn g_statistic_nonnegative(counts in prop::collection::vec(0u64..20, 5), p in (1.0..=5.0f64, 0.0..=1.0f64)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let fitted = pmf(&GsdParams::new(p.0, p.1, 5).unwrap());
        let g = g_statistic(&CountSample::new(counts).unwrap(), &fitted).unwrap();
        prop_assert!(g >= 0.0);
    }
}

#[test]
fn matrix_fit_is_label_equivariant() {
    let scores = [[3u32, 4, 2, 5], [3, 3, 2, 4], [1, 4, 3, 5], [2, 5, 2, 4]];
    let build = |order: &[usize]| {
        let ratings = order
            .iter()
            .enumerate()
            .flat_map(|(i, &src)| {
                (0..4).map(move |j| Rating {
                    rater: i,
                    stimulus: j,
                    score: scores[src][j],
                })
            })
            .collect();
        RatingMatrix::new(5, 4, 4, ratings).unwrap()
    };
    let config = MatrixFitConfig::default();
    let base = fit_matrix(&build(&[0, 1, 2, 3]), &config).unwrap();
    let permuted = fit_matrix(&build(&[2, 0, 3, 1]), &config).unwrap();
    for (new, old) in [2usize, 0, 3, 1].iter().enumerate() {
        assert!((permuted.rho[new] - base.rho[*old]).abs() < 1e-6);
    }
    for j in 0..4 {
        assert!((permuted.psi[j] - base.psi[j]).abs() < 1e-6);
    }
}
