use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 64;

/// `KL(p̂ ‖ q̂)` between histograms of two 1-D sample sets over their pooled
/// range, each bin smoothed with a pseudo-count of one.
pub fn hist_kl_1d(samples_p: &[f64], samples_q: &[f64], n_bins: usize) -> Result<f64> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("n_bins must be >= 2, got {n_bins}")));
    }
    if samples_p.is_empty() || samples_q.is_empty() {
        return Err(Error::InvalidArgument("hist_kl_1d needs non-empty sample sets".into()));
    }
    if samples_p.iter().chain(samples_q).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("samples"));
    }
    let (lo, hi) = samples_p
        .iter()
        .chain(samples_q)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let width = hi - lo;
    let histogram = |xs: &[f64]| {
        let mut counts = vec![1.0; n_bins];
        for &x in xs {
            let bin = if width > 0.0 { ((x - lo) / width * n_bins as f64) as usize } else { 0 };
            counts[bin.min(n_bins - 1)] += 1.0;
        }
        let total = (xs.len() + n_bins) as f64;
        counts.iter_mut().for_each(|c| *c /= total);
        counts
    };
    let p = histogram(samples_p);
    let q = histogram(samples_q);
    Ok(p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum())
}

/// Sliced 2-Wasserstein distance between two equally sized point clouds
/// (row-major, `dim` columns): the root mean, over random unit directions, of
/// the mean squared difference of the sorted projections.
pub fn sliced_w2<R: Rng + ?Sized>(
    samples_p: &[f64],
    samples_q: &[f64],
    dim: usize,
    n_projections: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_projections == 0 {
        return Err(Error::InvalidArgument("n_projections must be >= 1".into()));
    }
    if dim == 0 || samples_p.len() % dim != 0 {
        return Err(Error::DimensionMismatch { expected: dim, got: samples_p.len() });
    }
    if samples_p.len() != samples_q.len() {
        return Err(Error::InvalidArgument(format!(
            "sliced_w2 needs equal sample counts, got {} and {}",
            samples_p.len() / dim,
            samples_q.len() / dim
        )));
    }
    let n = samples_p.len() / dim;
    if n == 0 {
        return Err(Error::InvalidArgument("sliced_w2 needs non-empty sample sets".into()));
    }
    let project = |xs: &[f64], theta: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = xs.chunks_exact(dim).map(|row| crate::targets::dot(row, theta)).collect();
        out.sort_unstable_by(f64::total_cmp);
        out
    };
    let mut total = 0.0;
    let mut theta = vec![0.0; dim];
    for _ in 0..n_projections {
        loop {
            theta.iter_mut().for_each(|t| *t = rng.sample(StandardNormal));
            let norm = crate::targets::dot(&theta, &theta).sqrt();
            if norm > 1e-12 {
                theta.iter_mut().for_each(|t| *t /= norm);
                break;
            }
        }
        let a = project(samples_p, &theta);
        let b = project(samples_q, &theta);
        total += a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n as f64;
    }
    Ok((total / n_projections as f64).sqrt())
}
