//! Sampler output checked against independently computed distributions.

use hdcpr::inference::{one_step_ahead_forecast, run_chain, summarize, ChainConfig, PriorChoice};
use hdcpr::model::{BasadPrior, BasadSegment, Dataset, GammaHyper, NoiseModel, PriorSpec};
use hdcpr::samplers::sample_grouplasso_eta;
use hdcpr::RngStream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

/// `log p(y)` with `beta ~ N(0, sigma2 D)`, `sigma2 ~ IG(a, b)`, no change.
fn nig_log_marginal(y: &DVector<f64>, x: &DMatrix<f64>, d: &[f64], a: f64, b: f64) -> f64 {
    let n = y.len();
    let dm = DMatrix::from_diagonal(&DVector::from_column_slice(d));
    let m = DMatrix::identity(n, n) + x * dm * x.transpose();
    let chol = m.cholesky().unwrap();
    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let quad = y.dot(&chol.solve(y));
    ln_gamma(a + n as f64 / 2.0) - ln_gamma(a) + a * b.ln()
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * logdet
        - (a + n as f64 / 2.0) * (b + quad / 2.0).ln()
}

#[test]
fn single_variable_inclusion_matches_bayes_factor() {
    let n = 50;
    let mut rng = RngStream::new(21, 0);
    let xs: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = xs.iter().map(|x| 0.8 * x + rng.sample::<f64, _>(StandardNormal)).collect();
    let x = DMatrix::from_column_slice(n, 1, &xs);
    let data = Dataset::new(y.clone(), x.clone(), (1..=n).map(|i| i as f64).collect()).unwrap();
    let (g0, g1, q): (f64, f64, f64) = (0.002, 20.0, 0.3);
    let noise = NoiseModel::new(2.0, 1.0).unwrap();

    let yv = DVector::from_vec(y);
    let l1 = nig_log_marginal(&yv, &x, &[g1], 2.0, 1.0) + q.ln();
    let l0 = nig_log_marginal(&yv, &x, &[g0], 2.0, 1.0) + (1.0 - q).ln();
    let exact = 1.0 / (1.0 + (l0 - l1).exp());

    let spec = PriorSpec::Basad(BasadPrior {
        segments: vec![BasadSegment { gamma0: g0, gamma1: g1, q }],
        forced_in: vec![vec![false]],
    });
    let mut cfg = ChainConfig::new(0, (0.0, n as f64 + 1.0))
        .with_sweeps(40_000, 2_000)
        .with_seed(5)
        .with_prior(PriorChoice::Fixed { spec });
    cfg.noise = noise;
    let s = run_chain(&data, &cfg).unwrap();
    let est = s.inclusion_probabilities().unwrap()[0][0];
    assert!(exact > 0.9, "oracle {exact}");
    assert!(est > 0.9, "estimate {est}");
    assert!((est - exact).abs() < 0.01, "estimate {est} vs oracle {exact}");
}

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn group_latent_scale_matches_rejection_sampler() {
    // target density of eta: eta^(-1/2) exp(-c / eta - lambda2 eta)
    for (norm, sigma2, lambda2) in [(0.7, 1.3, 0.8), (2.5, 0.5, 3.0), (0.05, 1.0, 0.2)] {
        let c: f64 = norm * norm / (2.0 * sigma2);
        let mut rng = RngStream::new(33, 0);
        let draws = 100_000;
        let mut ours = Vec::with_capacity(draws);
        while ours.len() < draws {
            let e = sample_grouplasso_eta(&[norm], sigma2, lambda2, &mut rng).unwrap();
            ours.push(e[0]);
        }
        let proposal = Gamma::new(0.5, 1.0 / lambda2).unwrap();
        let mut oracle = Vec::with_capacity(draws);
        let mut rng = RngStream::new(34, 0);
        while oracle.len() < draws {
            let eta: f64 = proposal.sample(&mut rng);
            if rng.random::<f64>() < (-c / eta).exp() {
                oracle.push(eta);
            }
        }
        let d = ks_two_sample(ours, oracle);
        assert!(d < 0.02, "KS {d} at ({norm}, {sigma2}, {lambda2})");
    }
}

#[test]
fn predictive_intervals_cover_held_out_points() {
    let reps = 200;
    let n = 40;
    let mut covered = 0;
    for r in 0..reps {
        let mut rng = RngStream::new(1000 + r, 7);
        let x = DMatrix::from_fn(n + 1, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y: Vec<f64> = (0..=n)
            .map(|i| {
                let b = if i < 20 { [1.5, 0.0] } else { [-1.0, 0.5] };
                b[0] * x[(i, 0)] + b[1] * x[(i, 1)] + rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let data = Dataset::new(
            y[..n].to_vec(),
            x.rows(0, n).into_owned(),
            (1..=n).map(|i| i as f64).collect(),
        )
        .unwrap();
        let cfg = ChainConfig::new(1, (5.0, 35.0))
            .with_sweeps(2_500, 500)
            .with_seed(r)
            .with_prior(PriorChoice::Lasso {
                hyper: GammaHyper::default(),
            });
        let s = run_chain(&data, &cfg).unwrap();
        let f = one_step_ahead_forecast(
            &s,
            &x.rows(n, 1).into_owned(),
            &[n as f64 + 1.0],
            0.95,
            &mut RngStream::new(r, 99),
        )
        .unwrap();
        if f.lower[0] <= y[n] && y[n] <= f.upper[0] {
            covered += 1;
        }
    }
    let rate = covered as f64 / reps as f64;
    assert!((0.90..=1.0).contains(&rate), "coverage {rate}");
}

#[test]
fn summary_invariants_hold_on_a_real_fit() {
    let mut rng = RngStream::new(8, 0);
    let n = 60;
    let x = DMatrix::from_fn(n, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y: Vec<f64> = (0..n)
        .map(|i| if i < 30 { 2.0 } else { -2.0 } * x[(i, 0)] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let data = Dataset::new(y, x, (1..=n).map(|i| i as f64).collect()).unwrap();
    let cfg = ChainConfig::new(1, (5.0, 55.0)).with_sweeps(3_000, 1_000).with_seed(2);
    let s = run_chain(&data, &cfg).unwrap();
    let sum = summarize(&s, Some(&data), 0.95).unwrap();
    for iv in sum.beta.iter().flatten().chain(sum.tau.iter()).chain([&sum.sigma2]) {
        assert!(iv.lower <= iv.median && iv.median <= iv.upper);
    }
    for p in sum.inclusion.as_ref().unwrap().iter().flatten() {
        assert!((0.0..=1.0).contains(p));
    }
    assert!((sum.tau[0].median - 30.5).abs() < 2.0);
    assert_eq!(sum.selected, vec![vec![0], vec![0]]);
    let dic = hdcpr::inference::compute_dic(&s, &data).unwrap();
    assert!((dic.dic - (dic.mean_deviance + dic.p_d)).abs() < 1e-9);
}
