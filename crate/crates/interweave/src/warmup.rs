//! Warm-up time laws.
//!
//! A warm-up law is the distribution of the random delay `τ` in a
//! factorization `Λ Λ̃ = P_τ`. Different kernels pin down different subsets
//! of {density, sampler, Laplace transform}, so [`WarmupLaw`] exposes each
//! capability separately and errors on the ones a law does not carry.
//!
//! Every law shipped here is infinitely divisible, so `-ln E[e^{-uτ}]` is a
//! Bernstein exponent and fractional subordination powers are well defined.

use crate::error::{require_nonneg, require_positive, Error, Result};
use crate::rng::Stream;
use crate::special::{log_add_exp, log_gamma_unchecked, sample_log_gamma_variate};

/// A warm-up time distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum WarmupLaw {
    /// Point mass at `t0 ≥ 0`.
    Dirac { t0: f64 },
    /// `τ = -ln R` with `R ~ Beta(ε, β)`; density
    /// `Γ(β+ε)/(Γ(β)Γ(ε)) · e^{-εs} (1-e^{-s})^{β-1}` on `(0, ∞)`.
    NegLogBeta { eps: f64, beta: f64 },
    /// The Jacobi warm-up: Laplace-transform-only law with
    /// `E[e^{-uτ}] = Γ(λ₁-β)Γ(ρ(u)+λ₁/2) / (Γ(ρ(u)+λ₁-β)Γ(λ₁/2))`,
    /// `ρ(u) = √(u + (λ₁-1)²/4) - (λ₁-1)/2`.
    Jacobi { lambda1: f64, beta: f64 },
    /// Fractional convolution power: Laplace transform `exp(-t·φ_base(u))`.
    Subordinated { base: Box<WarmupLaw>, time: f64 },
    /// Sum of independent warm-up times; Laplace transforms multiply.
    Sum(Vec<WarmupLaw>),
}

impl WarmupLaw {
    /// `τ^{(β,ε)}`, the negative-log-beta law.
    pub fn neg_log_beta(eps: f64, beta: f64) -> Result<Self> {
        require_positive("neg-log-beta ε", eps)?;
        require_positive("neg-log-beta β", beta)?;
        Ok(WarmupLaw::NegLogBeta { eps, beta })
    }

    /// `τ^{(β)}`: the `ε = 1` member, matching the generalized-Laguerre
    /// factorization transform `Γ(1+β)Γ(u+1)/Γ(u+β+1)`.
    pub fn beta_one(beta: f64) -> Result<Self> {
        WarmupLaw::neg_log_beta(1.0, beta)
    }

    pub fn dirac(t0: f64) -> Result<Self> {
        require_nonneg("dirac t0", t0)?;
        Ok(WarmupLaw::Dirac { t0 })
    }

    pub fn jacobi(lambda1: f64, beta: f64) -> Result<Self> {
        if !(lambda1 >= 2.0 * beta && 2.0 * beta > 2.0) {
            return Err(Error::domain(format!(
                "jacobi warm-up requires λ₁ ≥ 2β > 2, got λ₁={lambda1}, β={beta}"
            )));
        }
        Ok(WarmupLaw::Jacobi { lambda1, beta })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WarmupLaw::Dirac { t0 } => require_nonneg("dirac t0", *t0),
            WarmupLaw::NegLogBeta { eps, beta } => {
                require_positive("neg-log-beta ε", *eps)?;
                require_positive("neg-log-beta β", *beta)
            }
            WarmupLaw::Jacobi { lambda1, beta } => {
                WarmupLaw::jacobi(*lambda1, *beta).map(|_| ())
            }
            WarmupLaw::Subordinated { base, time } => {
                require_nonneg("subordination time", *time)?;
                base.validate()
            }
            WarmupLaw::Sum(parts) => parts.iter().try_for_each(|p| p.validate()),
        }
    }

    /// `ln E[e^{-uτ}]`.
    pub fn log_laplace(&self, u: f64) -> Result<f64> {
        require_nonneg("laplace argument u", u)?;
        self.validate()?;
        Ok(self.log_laplace_unchecked(u))
    }

    fn log_laplace_unchecked(&self, u: f64) -> f64 {
        match self {
            WarmupLaw::Dirac { t0 } => -u * t0,
            WarmupLaw::NegLogBeta { eps, beta } => {
                log_gamma_unchecked(beta + eps) + log_gamma_unchecked(u + eps)
                    - log_gamma_unchecked(*eps)
                    - log_gamma_unchecked(u + beta + eps)
            }
            WarmupLaw::Jacobi { lambda1, beta } => {
                let half_gap = (lambda1 - 1.0) / 2.0;
                let rho = (u + half_gap * half_gap).sqrt() - half_gap;
                log_gamma_unchecked(lambda1 - beta) + log_gamma_unchecked(rho + lambda1 / 2.0)
                    - log_gamma_unchecked(rho + lambda1 - beta)
                    - log_gamma_unchecked(lambda1 / 2.0)
            }
            WarmupLaw::Subordinated { base, time } => time * base.log_laplace_unchecked(u),
            WarmupLaw::Sum(parts) => parts.iter().map(|p| p.log_laplace_unchecked(u)).sum(),
        }
    }

    /// `E[e^{-uτ}]`.
    pub fn laplace(&self, u: f64) -> Result<f64> {
        Ok(self.log_laplace(u)?.exp())
    }

    /// Bernstein exponent `φ(u) = -ln E[e^{-uτ}]`; defined for every shipped
    /// law since they are all infinitely divisible.
    pub fn bernstein_exponent(&self, u: f64) -> Result<f64> {
        Ok(-self.log_laplace(u)?)
    }

    /// Density at `s`; only the negative-log-beta family carries one.
    pub fn density(&self, s: f64) -> Result<f64> {
        self.validate()?;
        match self {
            WarmupLaw::NegLogBeta { eps, beta } => {
                if s <= 0.0 {
                    return Ok(0.0);
                }
                let log_norm = log_gamma_unchecked(beta + eps)
                    - log_gamma_unchecked(*beta)
                    - log_gamma_unchecked(*eps);
                // (1 - e^{-s})^{β-1} via ln(1 - e^{-s}) = ln(-expm1(-s))
                let log_body = -eps * s + (beta - 1.0) * (-(-s).exp_m1()).ln();
                Ok((log_norm + log_body).exp())
            }
            WarmupLaw::Dirac { .. } => Err(Error::Unsupported(
                "a point mass has no density; use the sampler or transform".into(),
            )),
            _ => Err(Error::Unsupported(format!(
                "no closed-form density for {self:?}; use the Laplace transform"
            ))),
        }
    }

    /// One draw of `τ`. Supported for Dirac, negative-log-beta and sums of
    /// sampleable laws.
    pub fn sample(&self, rng: &mut Stream) -> Result<f64> {
        self.validate()?;
        match self {
            WarmupLaw::Dirac { t0 } => Ok(*t0),
            WarmupLaw::NegLogBeta { eps, beta } => {
                // τ = ln(G_ε + G_β) - ln(G_ε), stable even for tiny ε
                let la = sample_log_gamma_variate(*eps, rng);
                let lb = sample_log_gamma_variate(*beta, rng);
                Ok(log_add_exp(la, lb) - la)
            }
            WarmupLaw::Sum(parts) => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.sample(rng)?;
                }
                Ok(acc)
            }
            _ => Err(Error::Unsupported(format!("no sampler for {self:?}"))),
        }
    }

    pub fn has_density(&self) -> bool {
        matches!(self, WarmupLaw::NegLogBeta { .. })
    }

    pub fn has_sampler(&self) -> bool {
        match self {
            WarmupLaw::Dirac { .. } | WarmupLaw::NegLogBeta { .. } => true,
            WarmupLaw::Sum(parts) => parts.iter().all(|p| p.has_sampler()),
            _ => false,
        }
    }
}

/// Law of the sum of two independent warm-up times. Dirac masses merge.
pub fn convolve(a: &WarmupLaw, b: &WarmupLaw) -> Result<WarmupLaw> {
    a.validate()?;
    b.validate()?;
    match (a, b) {
        (WarmupLaw::Dirac { t0: s }, WarmupLaw::Dirac { t0: t }) => WarmupLaw::dirac(s + t),
        (WarmupLaw::Sum(xs), WarmupLaw::Sum(ys)) => {
            let mut parts = xs.clone();
            parts.extend(ys.iter().cloned());
            Ok(WarmupLaw::Sum(parts))
        }
        (WarmupLaw::Sum(xs), other) | (other, WarmupLaw::Sum(xs)) => {
            let mut parts = xs.clone();
            parts.push(other.clone());
            Ok(WarmupLaw::Sum(parts))
        }
        _ => Ok(WarmupLaw::Sum(vec![a.clone(), b.clone()])),
    }
}

/// Shifts a law by a deterministic `t ≥ 0` (Laplace transform × `e^{-ut}`).
pub fn shift(law: &WarmupLaw, t: f64) -> Result<WarmupLaw> {
    convolve(law, &WarmupLaw::dirac(t)?)
}

/// Outcome of a complete-monotonicity or Bernstein check.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicityReport {
    pub pass: bool,
    /// Largest normalized sign violation observed (0 when clean).
    pub worst_violation: f64,
}

const CM_TOL: f64 = 1e-9;

fn divided_difference_table(values: &[f64], grid: &[f64], order: usize) -> Vec<Vec<f64>> {
    let mut table = Vec::with_capacity(order + 1);
    table.push(values.to_vec());
    for k in 1..=order {
        let prev = &table[k - 1];
        let mut next = Vec::with_capacity(prev.len() - 1);
        for i in 0..prev.len() - 1 {
            next.push((prev[i + 1] - prev[i]) / (grid[i + k] - grid[i]));
        }
        table.push(next);
    }
    table
}

fn check_grid(grid: &[f64], order: usize) -> Result<()> {
    if grid.len() < order + 2 {
        return Err(Error::domain(format!(
            "grid of {} points is too short for order {order}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    Ok(())
}

/// Checks that `(-1)^k Δ^k f ≥ 0` (divided differences) up to `order` on the
/// grid, within a normalized tolerance. Divided differences carry the sign of
/// `f^{(k)}`, so this is the discrete complete-monotonicity test.
pub fn check_complete_monotonicity(
    f: impl Fn(f64) -> f64,
    grid: &[f64],
    order: usize,
) -> Result<MonotonicityReport> {
    if order < 1 {
        return Err(Error::domain("complete-monotonicity order must be ≥ 1"));
    }
    check_grid(grid, order)?;
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let table = divided_difference_table(&values, grid, order);
    let mut worst = 0.0_f64;
    for (k, diffs) in table.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let scale = diffs.iter().fold(0.0_f64, |a, &d| a.max(d.abs())).max(1e-300);
        for &d in diffs {
            let signed = sign * d;
            if signed < 0.0 {
                worst = worst.max(-signed / scale);
            }
        }
    }
    Ok(MonotonicityReport { pass: worst <= CM_TOL, worst_violation: worst })
}

/// Bernstein-function check: `φ(grid[0]) ≥ 0` and the first divided
/// differences are completely monotone, i.e. `(-1)^{k-1} Δ^k φ ≥ 0` for
/// `k = 1..=order`.
pub fn bernstein_check(
    phi: impl Fn(f64) -> f64,
    grid: &[f64],
    order: usize,
) -> Result<MonotonicityReport> {
    if order < 1 {
        return Err(Error::domain("bernstein check order must be ≥ 1"));
    }
    check_grid(grid, order)?;
    let values: Vec<f64> = grid.iter().map(|&x| phi(x)).collect();
    let table = divided_difference_table(&values, grid, order);
    let mut worst = 0.0_f64;
    let base_scale = values.iter().fold(0.0_f64, |a, &v| a.max(v.abs())).max(1e-300);
    if values[0] < 0.0 {
        worst = worst.max(-values[0] / base_scale);
    }
    for (k, diffs) in table.iter().enumerate().skip(1) {
        let sign = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let scale = diffs.iter().fold(0.0_f64, |a, &d| a.max(d.abs())).max(1e-300);
        for &d in diffs {
            let signed = sign * d;
            if signed < 0.0 {
                worst = worst.max(-signed / scale);
            }
        }
    }
    Ok(MonotonicityReport { pass: worst <= CM_TOL, worst_violation: worst })
}

/// Uniform grid helper.
pub fn uniform_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    let h = (b - a) / (points - 1) as f64;
    (0..points).map(|i| a + h * i as f64).collect()
}
