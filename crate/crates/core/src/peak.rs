//! Peak location on sampled curves and on raw event times.

use alloc::vec;

/// Argmax time of a curve sampled at `m * dt` (index 0 is t = 0), refined by
/// the vertex of the parabola through the maximum and its two neighbours.
pub fn grid_argmax(samples: &[f64], dt: f64) -> f64 {
    let Some((best, _)) =
        samples
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (i, &v)| match acc {
                Some((_, b)) if b >= v => acc,
                _ => Some((i, v)),
            })
    else {
        return 0.0;
    };
    if best == 0 || best + 1 >= samples.len() {
        return best as f64 * dt;
    }
    let (l, c, r) = (samples[best - 1], samples[best], samples[best + 1]);
    let curvature = l - 2.0 * c + r;
    let offset = if curvature < 0.0 {
        0.5 * (l - r) / curvature
    } else {
        0.0
    };
    (best as f64 + offset) * dt
}

/// Argmax of a Gaussian kernel density estimate of `times` over `[0, horizon]`.
///
/// Events are first binned at `bandwidth / 8`, then the histogram is
/// convolved with a discrete Gaussian truncated at four bandwidths. Returns
/// `None` without events.
pub fn smoothed_argmax(times: &[f64], bandwidth: f64, horizon: f64) -> Option<f64> {
    if times.is_empty() || !(bandwidth > 0.0) || !(horizon > 0.0) {
        return None;
    }
    let bin = bandwidth / 8.0;
    let bins = libm::ceil(horizon / bin) as usize + 1;
    let mut histogram = vec![0.0f64; bins];
    for &t in times {
        if (0.0..=horizon).contains(&t) {
            histogram[libm::floor(t / bin) as usize] += 1.0;
        }
    }
    let reach = 32usize; // four bandwidths
    let weights: alloc::vec::Vec<f64> = (0..=reach)
        .map(|i| {
            let u = i as f64 / 8.0;
            libm::exp(-0.5 * u * u)
        })
        .collect();
    let mut density = vec![0.0f64; bins];
    for (i, d) in density.iter_mut().enumerate() {
        let mut acc = histogram[i] * weights[0];
        for (k, w) in weights.iter().enumerate().skip(1) {
            if i >= k {
                acc += histogram[i - k] * w;
            }
            if i + k < bins {
                acc += histogram[i + k] * w;
            }
        }
        *d = acc;
    }
    // density[i] estimates the rate at the centre of bin i
    Some(grid_argmax(&density, bin) + 0.5 * bin)
}
