//! Least-squares Lorentzian peak fitting (Levenberg-Marquardt).

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub center: f64,
    /// Full width at half maximum.
    pub fwhm: f64,
    pub peak: f64,
    pub rms_residual: f64,
    pub iterations: usize,
}

impl LorentzianFit {
    pub fn eval(&self, x: f64) -> f64 {
        let hw2 = 0.25 * self.fwhm * self.fwhm;
        self.peak * hw2 / (hw2 + (x - self.center).powi(2))
    }
}

fn model(p: &[f64; 3], x: f64) -> (f64, [f64; 3]) {
    let [c, h, a] = *p;
    let d = x - c;
    let den = h * h + d * d;
    let shape = h * h / den;
    let jac = [
        a * h * h * 2.0 * d / (den * den),
        a * 2.0 * h * d * d / (den * den),
        shape,
    ];
    (a * shape, jac)
}

fn cost(p: &[f64; 3], xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (model(p, x).0 - y).powi(2))
        .sum()
}

fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [
        [m[0][0], m[0][1], m[0][2], rhs[0]],
        [m[1][0], m[1][1], m[1][2], rhs[1]],
        [m[2][0], m[2][1], m[2][2], rhs[2]],
    ];
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][3] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Fits `y = peak (G^2/4) / (G^2/4 + (x - center)^2)` to the samples.
///
/// Needs at least five points spanning two or more FWHM of the initial
/// estimate. Abscissae are shifted and scaled internally so that optical
/// frequencies (~1e15 rad/s) with GHz linewidths stay well conditioned.
pub fn fit_lorentzian(points: &[(f64, f64)]) -> Result<LorentzianFit> {
    if points.len() < 5 {
        return Err(Error::Fit(format!("need at least 5 points, got {}", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let (imax, &(x_peak, y_peak)) = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    let y_min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if !(y_peak > 0.0) || (y_peak - y_min) <= 1e-9 * y_peak.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Fit("ill-conditioned data: no peak above the baseline".into()));
    }
    let x_lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let scale = x_hi - x_lo;
    if !(scale > 0.0) {
        return Err(Error::Fit("ill-conditioned data: zero abscissa span".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 - x_peak) / scale).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1 / y_peak).collect();

    // half-maximum crossings on either side of the peak
    let half = 0.5;
    let crossing = |range: Box<dyn Iterator<Item = usize>>| -> Option<f64> {
        let mut prev = imax;
        for i in range {
            if ys[i] <= half {
                let t = (ys[prev] - half) / (ys[prev] - ys[i]);
                return Some(xs[prev] + t * (xs[i] - xs[prev]));
            }
            prev = i;
        }
        None
    };
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let pos = order.iter().position(|&i| i == imax).expect("peak index present");
    let right = crossing(Box::new(order[pos + 1..].to_vec().into_iter()));
    let left = crossing(Box::new(order[..pos].iter().rev().copied().collect::<Vec<_>>().into_iter()));
    let hw0 = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => -l,
        (None, Some(r)) => r,
        (None, None) => {
            return Err(Error::Fit("ill-conditioned data: samples do not reach half maximum".into()))
        }
    };
    if !(hw0 > 0.0) {
        return Err(Error::Fit("ill-conditioned data: zero width".into()));
    }
    let span = xs.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)) - xs.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    if span < 2.0 * (2.0 * hw0) {
        return Err(Error::Fit("samples span less than two FWHM".into()));
    }

    let mut p = [0.0, hw0, 1.0];
    let mut c0 = cost(&p, &xs, &ys);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 500 {
        iterations += 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&x, &y) in xs.iter().zip(&ys) {
            let (m, jac) = model(&p, x);
            let r = m - y;
            for i in 0..3 {
                jtr[i] -= jac[i] * r;
                for k in 0..3 {
                    jtj[i][k] += jac[i] * jac[k];
                }
            }
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(step) = solve3(damped, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], (p[1] + step[1]).abs(), p[2] + step[2]];
            let c1 = cost(&trial, &xs, &ys);
            if c1 <= c0 {
                let small = step
                    .iter()
                    .zip(&trial)
                    .all(|(s, t)| s.abs() <= 1e-15 * t.abs().max(1e-12));
                p = trial;
                let stalled = c0 - c1 <= 1e-30 + 1e-15 * c0;
                c0 = c1;
                lambda = (lambda * 0.1).max(1e-15);
                accepted = true;
                if small || stalled {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // no descent direction left: at a (local) minimum
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Fit("Levenberg-Marquardt did not converge".into()));
    }
    let n = xs.len() as f64;
    Ok(LorentzianFit {
        center: x_peak + p[0] * scale,
        fwhm: 2.0 * p[1] * scale,
        peak: p[2] * y_peak,
        rms_residual: (c0 / n).sqrt() * y_peak,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(center: f64, fwhm: f64, peak: f64, n: usize, span_widths: f64) -> Vec<(f64, f64)> {
        let truth = LorentzianFit {
            center,
            fwhm,
            peak,
            rms_residual: 0.0,
            iterations: 0,
        };
        (0..n)
            .map(|i| {
                let x = center - 0.37 * fwhm + span_widths * fwhm * (i as f64 / (n - 1) as f64 - 0.5);
                (x, truth.eval(x))
            })
            .collect()
    }

    #[test]
    fn exact_samples_recovered() {
        let (c, g, a) = (1.2152e15, 3.1e9, 23.7);
        let fit = fit_lorentzian(&samples(c, g, a, 101, 8.0)).unwrap();
        assert!(((fit.center - c) / g).abs() < 1e-9);
        assert!(((fit.fwhm - g) / g).abs() < 1e-9, "{}", fit.fwhm);
        assert!(((fit.peak - a) / a).abs() < 1e-9);
    }

    #[test]
    fn noisy_samples_within_three_percent() {
        let (c, g, a) = (1.0, 0.01, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<_> = samples(c, g, a, 201, 10.0)
            .into_iter()
            .map(|(x, y)| (x, y + a * 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let fit = fit_lorentzian(&pts).unwrap();
        assert!(((fit.fwhm - g) / g).abs() < 0.03, "{}", fit.fwhm);
    }

    #[test]
    fn flat_data_is_ill_conditioned() {
        let pts: Vec<_> = (0..20).map(|i| (i as f64, 3.0)).collect();
        assert!(matches!(fit_lorentzian(&pts), Err(Error::Fit(_))));
    }

    #[test]
    fn too_few_points() {
        let pts = samples(0.0, 1.0, 1.0, 4, 6.0);
        assert!(fit_lorentzian(&pts).is_err());
    }

    #[test]
    fn narrow_span_rejected() {
        let pts = samples(0.0, 1.0, 1.0, 30, 1.5);
        assert!(fit_lorentzian(&pts).is_err());
    }
}
