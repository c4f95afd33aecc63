//! Monte-Carlo summaries, a two-sample Kolmogorov-Smirnov test and small
//! quadrature rules used as independent oracles in tests and experiments.

/// Sample mean and its standard error.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error of `f(x)` over the samples.
pub fn transformed_mean_and_se(samples: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64) {
    let transformed: Vec<f64> = samples.iter().map(|&x| f(x)).collect();
    mean_and_se(&transformed)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).unwrap());
    b.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, ks_survival(lambda))
}

/// `Q_KS(λ) = 2 Σ (-1)^{k-1} exp(-2 k² λ²)`.
fn ks_survival(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += term;
        if term.abs() < 1e-12 * sum.abs().max(1e-12) {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Composite Simpson rule on `[a, b]` with `2m` panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let x = a + h * k as f64;
        acc += f(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Double-exponential ("exp-sinh") quadrature for `∫_0^∞ f(s) ds` with an
/// integrable power singularity allowed at 0 and (sub)exponential decay at
/// infinity. Substitutes `s = exp((π/2) sinh t)`.
pub fn exp_sinh_quadrature(f: impl Fn(f64) -> f64, half_steps: usize, h: f64) -> f64 {
    let mut acc = 0.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    for k in -(half_steps as i64)..=(half_steps as i64) {
        let t = h * k as f64;
        let s = (half_pi * t.sinh()).exp();
        let w = half_pi * t.cosh() * s;
        if !s.is_finite() || s == 0.0 || !w.is_finite() {
            continue;
        }
        let v = f(s);
        if v.is_finite() {
            acc += v * w;
        }
    }
    acc * h
}
