//! Monte Carlo checks of the convolution facts behind the moment machinery:
//! centered smoothing preserves first moments, and the smoothed measure
//! approaches the original in W1 as the bandwidth vanishes.

use rand::Rng;
use rand_distr::StandardNormal;

use attn_transport::measure::{gaussian_convolve_moment, DiscreteMeasure};
use attn_transport::rng::seeded;
use attn_transport::transport::w1_exact;

fn sample_smoothed(
    mu: &DiscreteMeasure,
    sigma: f64,
    n: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let cumulative: Vec<f64> = mu
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let atom = cumulative.partition_point(|&c| c < u).min(mu.len() - 1);
            mu.point(atom)
                .iter()
                .map(|&x| {
                    let z: f64 = rng.sample(StandardNormal);
                    x + sigma * z
                })
                .collect()
        })
        .collect()
}

#[test]
fn smoothing_preserves_the_mean_to_sampling_error() {
    // 10^6-sample cross-check at three standard errors
    let mu = DiscreteMeasure::empirical(vec![vec![0.0, 0.0], vec![2.0, 4.0]]).unwrap();
    let sigma = 1.0;
    let analytic = gaussian_convolve_moment(&mu, sigma).unwrap();
    assert_eq!(analytic, vec![1.0, 2.0]);

    let n = 1_000_000usize;
    let mut rng = seeded(2024, 0);
    let samples = sample_smoothed(&mu, sigma, n, &mut rng);
    for k in 0..2 {
        let mean: f64 = samples.iter().map(|s| s[k]).sum::<f64>() / n as f64;
        let variance: f64 = samples
            .iter()
            .map(|s| (s[k] - mean) * (s[k] - mean))
            .sum::<f64>()
            / n as f64;
        let stderr = (variance / n as f64).sqrt();
        assert!(
            (mean - analytic[k]).abs() <= 3.0 * stderr,
            "coordinate {k}: mean {mean} vs {} (3se = {})",
            analytic[k],
            3.0 * stderr
        );
    }
}

#[test]
fn smoothed_w1_distance_shrinks_with_bandwidth() {
    // Sampled W1 between the smoothed measure and the original decreases as
    // sigma drops, within three standard errors across batches.
    let mu = DiscreteMeasure::empirical(vec![vec![-1.0], vec![1.0]]).unwrap();
    let sigmas = [1.0, 0.5, 0.25, 0.1];
    let batches = 8;
    let per_batch = 400;

    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    for (si, &sigma) in sigmas.iter().enumerate() {
        let mut estimates = Vec::new();
        for batch in 0..batches {
            let mut rng = seeded(99, (si * batches + batch) as u64);
            let cloud = sample_smoothed(&mu, sigma, per_batch, &mut rng);
            let empirical = DiscreteMeasure::empirical(cloud).unwrap();
            estimates.push(w1_exact(&empirical, &mu).unwrap().0);
        }
        let mean: f64 = estimates.iter().sum::<f64>() / batches as f64;
        let variance: f64 = estimates
            .iter()
            .map(|e| (e - mean) * (e - mean))
            .sum::<f64>()
            / batches as f64;
        means.push(mean);
        stderrs.push((variance / batches as f64).sqrt());
    }
    for i in 0..sigmas.len() - 1 {
        assert!(
            means[i + 1] <= means[i] + 3.0 * (stderrs[i] + stderrs[i + 1]),
            "sigma {} -> {}: W1 {} -> {}",
            sigmas[i],
            sigmas[i + 1],
            means[i],
            means[i + 1]
        );
    }
}
