//! Entropies, distances, functional-inequality constants and the decay /
//! hypercontractivity experiments.
//!
//! Entropy curves are always computed on exactly-evolved finite chains, never
//! by Monte-Carlo density estimation, so bound checks carry no statistical
//! error.

use crate::error::{require_positive, Error, Result};
use crate::rng::Stream;
use crate::semigroups::{DiscreteMeasure, FiniteSemigroup};
use crate::special::{log_add_exp, log_gamma_unchecked};
use nalgebra::DMatrix;

/// Convex divergence shapes `φ` with `φ(1) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiKind {
    /// `x ln x - x + 1`: relative entropy.
    KlDiv,
    /// `(1 - x)₊^p`, `p ≥ 1`: interpolates to the separation discrepancy.
    PowerP(f64),
    /// `|x - 1|`: twice the total variation.
    AbsDev,
}

impl PhiKind {
    pub fn validate(&self) -> Result<()> {
        if let PhiKind::PowerP(p) = self {
            if !(*p >= 1.0) {
                return Err(Error::domain(format!("PowerP needs p ≥ 1, got {p}")));
            }
        }
        Ok(())
    }

    pub fn phi(&self, x: f64) -> f64 {
        match *self {
            PhiKind::KlDiv => {
                if x == 0.0 {
                    1.0
                } else {
                    x * x.ln() - x + 1.0
                }
            }
            PhiKind::PowerP(p) => (1.0 - x).max(0.0).powf(p),
            PhiKind::AbsDev => (x - 1.0).abs(),
        }
    }

    /// `lim_{x→∞} φ(x)/x`, the weight of mass escaping the reference measure.
    pub fn slope_at_infinity(&self) -> f64 {
        match *self {
            PhiKind::KlDiv => f64::INFINITY,
            PhiKind::PowerP(_) => 0.0,
            PhiKind::AbsDev => 1.0,
        }
    }
}

/// `Ent_φ(m|ν) = Σ ν_i φ(m_i/ν_i) + (1 - Σ_{ν_i>0} m_i) · lim φ(x)/x`.
pub fn phi_entropy(m: &DiscreteMeasure, nu: &DiscreteMeasure, kind: PhiKind) -> Result<f64> {
    kind.validate()?;
    if m.len() != nu.len() {
        return Err(Error::Dimension("entropy of measures on different spaces".into()));
    }
    let mut acc = 0.0;
    let mut carried = 0.0;
    for i in 0..m.len() {
        let (mi, ni) = (m.weight(i), nu.weight(i));
        if ni > 0.0 {
            acc += ni * kind.phi(mi / ni);
            carried += mi;
        }
    }
    let deficit = (1.0 - carried).max(0.0);
    if deficit > 1e-14 {
        let slope = kind.slope_at_infinity();
        if slope.is_infinite() {
            return Ok(f64::INFINITY);
        }
        acc += deficit * slope;
    }
    Ok(acc)
}

/// Total variation `½ Σ |m_i - ν_i|`.
pub fn tv(m: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if m.len() != nu.len() {
        return Err(Error::Dimension("tv of measures on different spaces".into()));
    }
    Ok((0..m.len()).map(|i| (m.weight(i) - nu.weight(i)).abs()).sum::<f64>() / 2.0)
}

/// Separation discrepancy `max_{ν_i>0} (1 - m_i/ν_i)₊`.
pub fn separation(m: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if m.len() != nu.len() {
        return Err(Error::Dimension("separation of measures on different spaces".into()));
    }
    let mut worst = 0.0_f64;
    for i in 0..m.len() {
        if nu.weight(i) > 0.0 {
            worst = worst.max(1.0 - m.weight(i) / nu.weight(i));
        }
    }
    Ok(worst.clamp(0.0, 1.0))
}

/// The two-point log-Sobolev constant `4λ (1 - 2μ_∧) / ln(1/μ_∧ - 1)`, with
/// its continuous limit `2λ` at `μ_∧ = 1/2`.
pub fn two_point_log_sobolev(lambda: f64, mu0: f64) -> Result<f64> {
    require_positive("rate λ", lambda)?;
    if !(mu0 > 0.0 && mu0 < 1.0) {
        return Err(Error::domain(format!("two-point measure needs μ(0) ∈ (0,1), got {mu0}")));
    }
    let mu_min = mu0.min(1.0 - mu0);
    if (mu_min - 0.5).abs() < 1e-12 {
        return Ok(2.0 * lambda);
    }
    Ok(4.0 * lambda * (1.0 - 2.0 * mu_min) / (1.0 / mu_min - 1.0).ln())
}

// ---------------------------------------------------------------------------
// Discrete Hardy constant
// ---------------------------------------------------------------------------

/// The Hardy constant of the lattice Laguerre chain together with the
/// log-Sobolev bounds it implies.
#[derive(Debug, Clone, Copy)]
pub struct ErgodicConstants {
    /// `C = min_n max(C⁻(n), C⁺(n))`.
    pub hardy: f64,
    /// Lower bound on the log-Sobolev constant, `1/(10 C)`.
    pub alpha_lower: f64,
    /// Upper bound, `(8/3)(1 - √5/(2√2))⁻¹ / C`.
    pub alpha_upper: f64,
}

/// Upper-bound coefficient `(8/3)(1 - √5/(2√2))⁻¹ ≈ 12.733`.
pub fn hardy_upper_coefficient() -> f64 {
    (8.0 / 3.0) / (1.0 - 5.0_f64.sqrt() / (2.0 * 2.0_f64.sqrt()))
}

/// Computes the Hardy constant by exact summation over the truncated lattice,
/// entirely in log space (the weights `1/(ν(l) rate(l))` overflow doubles
/// near the cap). Errors when the invariant tail has not converged at `ncap`.
pub fn hardy_constant(beta: f64, sigma: f64, ncap: usize) -> Result<ErgodicConstants> {
    require_positive("β", beta)?;
    require_positive("σ", sigma)?;
    if ncap < 100 {
        return Err(Error::domain("hardy cap must be at least 100"));
    }
    let n = ncap + 1;

    // log ν(k) of the untruncated invariant law
    let lg_beta = log_gamma_unchecked(beta);
    let log_ratio = (sigma / (sigma + 1.0)).ln();
    let log_norm = -beta * (1.0 + sigma).ln();
    let log_nu: Vec<f64> = (0..n)
        .map(|k| {
            let kf = k as f64;
            log_norm + kf * log_ratio + log_gamma_unchecked(kf + beta)
                - lg_beta
                - log_gamma_unchecked(kf + 1.0)
        })
        .collect();

    // tail beyond the cap, bounded by the dominating geometric series
    let q = sigma / (sigma + 1.0);
    let tail_bound = log_nu[ncap].exp() * q / (1.0 - q) * 2.0;
    if tail_bound > 1e-12 {
        return Err(Error::Precision(format!(
            "invariant tail beyond the cap is ~{tail_bound:.2e}; raise ncap"
        )));
    }

    // prefix log-sums of w_l = 1 / (ν(l) σ(l+β))
    let mut log_a = vec![0.0; n]; // log Σ_{l<=k} w_l
    let mut running = f64::NEG_INFINITY;
    for k in 0..n {
        let log_w = -log_nu[k] - (sigma * (k as f64 + beta)).ln();
        running = log_add_exp(running, log_w);
        log_a[k] = running;
    }

    // tail log-masses T(m) = Σ_{l>=m} ν(l)
    let mut log_tail = vec![f64::NEG_INFINITY; n + 1];
    for m in (0..n).rev() {
        log_tail[m] = log_add_exp(log_tail[m + 1], log_nu[m]);
    }

    // head factor H(m) = F(m) ln(1/F(m)) with F(m) = 1 - T(m+1)
    let head = |m: usize| -> f64 {
        let t_next = log_tail[m + 1].exp();
        let f = (1.0 - t_next).max(0.0);
        if f <= 0.0 {
            return 0.0;
        }
        // ln(1/F) = -ln(1 - T) computed from the tail for stability
        f * (-(-t_next).ln_1p())
    };
    // tail factor G(m) = T(m) ln(1/T(m)) in log space
    let log_tail_factor = |m: usize| -> f64 {
        let lt = log_tail[m];
        if lt >= 0.0 {
            return f64::NEG_INFINITY;
        }
        lt + (-lt).ln()
    };

    // log(A_{hi} - A_{lo}) with A_{-1} = 0
    let log_a_diff = |lo: isize, hi: usize| -> f64 {
        if lo < 0 {
            log_a[hi]
        } else {
            let l = log_a[lo as usize];
            let h = log_a[hi];
            h + (-(l - h).exp()).ln_1p()
        }
    };

    let c_minus = |nn: usize| -> f64 {
        let mut best = 0.0_f64;
        for m in 0..nn {
            let h = head(m);
            if h <= 0.0 {
                continue;
            }
            let cand = (log_a_diff(m as isize - 1, nn - 1) + h.ln()).exp();
            best = best.max(cand);
        }
        best
    };
    // candidates with m close to the cap use a truncated tail mass; exclude
    // the zone where the missing geometric remainder could matter
    let margin = ((-12.0 * std::f64::consts::LN_10 / q.ln()).ceil() as usize + 10).min(ncap / 2);
    let m_max = n - margin;
    let c_plus = |nn: usize| -> f64 {
        let mut best = 0.0_f64;
        for m in (nn + 1)..m_max {
            let lg = log_tail_factor(m);
            let cand = (log_a_diff(nn as isize, m - 1) + lg).exp();
            best = best.max(cand);
        }
        best
    };

    let mut best = f64::INFINITY;
    for nn in 0..n {
        let lo = c_minus(nn);
        if lo > best {
            break; // C⁻ is nondecreasing in n, nothing better remains
        }
        let hi = c_plus(nn);
        best = best.min(lo.max(hi));
    }
    if !best.is_finite() || best <= 0.0 {
        return Err(Error::Precision(format!("hardy constant came out as {best}")));
    }
    Ok(ErgodicConstants {
        hardy: best,
        alpha_lower: 0.1 / best,
        alpha_upper: hardy_upper_coefficient() / best,
    })
}

// ---------------------------------------------------------------------------
// Decay experiments
// ---------------------------------------------------------------------------

/// Exact relative-entropy curve `t ↦ Ent(m₀ P_t | ν)` along a time grid,
/// evolved incrementally.
pub fn decay_experiment(
    sg: &FiniteSemigroup,
    m0: &DiscreteMeasure,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::domain("time grid must be non-negative and increasing"));
    }
    let mut out = Vec::with_capacity(t_grid.len());
    let mut cur = m0.clone();
    let mut last_t = 0.0;
    for &t in t_grid {
        cur = sg.evolve(&cur, t - last_t)?;
        last_t = t;
        out.push(phi_entropy(&cur, sg.invariant(), PhiKind::KlDiv)?);
    }
    Ok(out)
}

/// Result of checking a curve against `prefactor · e^{-rate (t - warmup)₊} E₀`.
#[derive(Debug, Clone, Copy)]
pub struct TransferReport {
    pub pass: bool,
    /// Smallest `bound - value` over the grid (negative means violation).
    pub worst_margin: f64,
}

/// Checks an entropy curve against the transferred decay bound.
pub fn check_transfer_bound(
    t_grid: &[f64],
    curve: &[f64],
    initial_entropy: f64,
    rate: f64,
    warmup: f64,
    prefactor: f64,
) -> Result<TransferReport> {
    if t_grid.len() != curve.len() {
        return Err(Error::Dimension("grid and curve lengths differ".into()));
    }
    let mut worst = f64::INFINITY;
    for (&t, &v) in t_grid.iter().zip(curve) {
        let bound = prefactor * (-rate * (t - warmup).max(0.0)).exp() * initial_entropy;
        worst = worst.min(bound - v);
    }
    Ok(TransferReport { pass: worst >= -1e-12 * initial_entropy.max(1.0), worst_margin: worst })
}

/// Time beyond which the delayed bound `e^{-rate (t - warmup)₊}` beats the
/// direct bound `e^{-alpha t}`; requires `rate > alpha`.
pub fn bound_crossover(alpha: f64, rate: f64, warmup: f64) -> Result<f64> {
    if !(rate > alpha) {
        return Err(Error::domain(format!(
            "delayed bound never catches up: rate {rate} ≤ direct constant {alpha}"
        )));
    }
    Ok(rate * warmup / (rate - alpha))
}

// ---------------------------------------------------------------------------
// Operator-norm search (hypercontractivity checks)
// ---------------------------------------------------------------------------

/// Lower bound on `‖P_t‖_{L²(ν) → L^p(ν)}` found by projected gradient
/// ascent over the `L²(ν)` unit sphere, with random restarts. The constant
/// function is always included as a start, so the result is at least 1 up to
/// roundoff. Requires a reversible chain.
pub fn hyperbound_norm(
    sg: &FiniteSemigroup,
    t: f64,
    p: f64,
    restarts: usize,
    rng: &mut Stream,
) -> Result<f64> {
    if p < 2.0 {
        return Err(Error::domain(format!("hyperbound needs p ≥ 2, got {p}")));
    }
    let n = sg.len();
    let nu = sg.invariant();
    // reversibility: ν_i q_ij = ν_j q_ji
    for i in 0..n {
        for j in (i + 1)..n {
            let a = nu.weight(i) * sg.generator()[(i, j)];
            let b = nu.weight(j) * sg.generator()[(j, i)];
            if (a - b).abs() > 1e-10 * a.abs().max(b.abs()).max(1e-30) {
                return Err(Error::domain("norm search requires a reversible chain"));
            }
        }
    }

    // dense transition matrix, one uniformization run per basis vector
    let mut pt = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = sg.apply_to_function(&e, t)?;
        for i in 0..n {
            pt[(i, j)] = col[i];
        }
    }

    let norm2 = |f: &[f64]| -> f64 {
        (0..n).map(|i| nu.weight(i) * f[i] * f[i]).sum::<f64>().sqrt()
    };
    let norm_p = |g: &[f64]| -> f64 {
        (0..n).map(|i| nu.weight(i) * g[i].abs().powf(p)).sum::<f64>().powf(1.0 / p)
    };
    let objective = |f: &[f64], g: &mut Vec<f64>| -> f64 {
        for i in 0..n {
            g[i] = (0..n).map(|j| pt[(i, j)] * f[j]).sum();
        }
        norm_p(g)
    };

    let mut best = 0.0_f64;
    let mut g = vec![0.0; n];
    for restart in 0..=restarts {
        let mut f: Vec<f64> = if restart == 0 {
            vec![1.0; n]
        } else {
            (0..n).map(|_| rng.uniform() * 2.0 - 1.0).collect()
        };
        let s = norm2(&f);
        f.iter_mut().for_each(|v| *v /= s);
        let mut value = objective(&f, &mut g);
        let mut step = 0.5;
        for _ in 0..200 {
            // gradient of ‖g‖_p wrt f, via reversibility: Ptᵀ = D_ν Pt D_ν⁻¹
            let scale = value.powf(1.0 - p);
            let mut dg: Vec<f64> =
                (0..n).map(|i| nu.weight(i) * g[i].signum() * g[i].abs().powf(p - 1.0) * scale)
                    .collect();
            for v in &mut dg {
                if !v.is_finite() {
                    *v = 0.0;
                }
            }
            // grad_f = Ptᵀ dg
            let mut grad = vec![0.0; n];
            for i in 0..n {
                let w = dg[i];
                if w != 0.0 {
                    for j in 0..n {
                        grad[j] += pt[(i, j)] * w;
                    }
                }
            }
            let mut improved = false;
            while step > 1e-10 {
                let mut cand: Vec<f64> =
                    f.iter().zip(&grad).map(|(&fi, &gi)| fi + step * gi).collect();
                let s = norm2(&cand);
                if s == 0.0 {
                    break;
                }
                cand.iter_mut().for_each(|v| *v /= s);
                let cand_val = objective(&cand, &mut g);
                if cand_val > value + 1e-14 {
                    f = cand;
                    value = cand_val;
                    improved = true;
                    step *= 1.3;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        // recompute g for the accepted f before the next restart reuses it
        let final_val = objective(&f, &mut g);
        best = best.max(final_val);
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Data-processing inequality
// ---------------------------------------------------------------------------

/// Verifies `Ent_φ(m̃ Ξ | m Ξ) ≤ Ent_φ(m̃ | m)` on random finite triples for
/// the KL and quadratic shapes, with `m` fully supported. Returns the worst
/// slack violation seen (0 when clean).
pub fn data_processing_test(trials: usize, rng: &mut Stream) -> Result<f64> {
    if trials == 0 {
        return Err(Error::domain("data processing test needs at least one trial"));
    }
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let from = 3 + rng.below(4);
        let to = 2 + rng.below(4);
        let m_tilde = random_measure(from, false, rng);
        let m = random_measure(from, true, rng);
        // random row-stochastic kernel
        let mut xi = vec![vec![0.0; to]; from];
        for row in &mut xi {
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = rng.exponential();
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        let push = |meas: &DiscreteMeasure| -> DiscreteMeasure {
            let mut out = vec![0.0; to];
            for i in 0..from {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += meas.weight(i) * xi[i][j];
                }
            }
            DiscreteMeasure::normalized(out).expect("push-forward of a probability")
        };
        let (mt_push, m_push) = (push(&m_tilde), push(&m));
        for kind in [PhiKind::KlDiv, PhiKind::PowerP(2.0)] {
            let before = phi_entropy(&m_tilde, &m, kind)?;
            let after = phi_entropy(&mt_push, &m_push, kind)?;
            if after.is_finite() {
                worst = worst.max(after - before.min(f64::MAX));
            }
        }
    }
    Ok(worst)
}

/// Random probability vector; `positive` forces every atom above 2%.
pub fn random_measure(len: usize, positive: bool, rng: &mut Stream) -> DiscreteMeasure {
    let mut w: Vec<f64> = (0..len).map(|_| rng.exponential()).collect();
    if positive {
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v = 0.8 * *v / total + 0.2 / len as f64;
        }
    }
    DiscreteMeasure::normalized(w).expect("positive weights")
}
