//! Markov kernels as samplers, and the two-point-space construction.
//!
//! The polynomial module treats kernels as triangular matrices; this module
//! is the probabilistic counterpart: every kernel can be sampled, and
//! Monte-Carlo averages of polynomial test functions must agree with the
//! matrix action (a property the tests enforce).

use crate::error::{require_positive, Error, Result};
use crate::polyop::{self, Basis, PolyOp};
use crate::rng::Stream;
use crate::special::{sample_beta, sample_gamma, sample_poisson};
use crate::stats::mean_and_se;
use nalgebra::Matrix2;

/// A sampleable Markov kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `x ↦ Poisson(σx)`, half-line to lattice.
    Poisson { sigma: f64 },
    /// `n ↦ Gamma(n+β, scale 1/σ)`, lattice to half-line.
    GammaMixture { beta: f64, sigma: f64 },
    /// `x ↦ x·B` with `B ~ Beta(ε, β)`.
    BetaMultiplication { beta: f64, eps: f64 },
    /// `x ↦ x + G` with `G ~ Gamma(β, 1)`.
    GammaShift { beta: f64 },
    /// Row-stochastic 2×2 kernel on `{0, 1}`.
    TwoPoint { rows: [[f64; 2]; 2] },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Poisson { sigma } => require_positive("poisson kernel σ", *sigma),
            KernelSpec::GammaMixture { beta, sigma } => {
                require_positive("gamma kernel β", *beta)?;
                require_positive("gamma kernel σ", *sigma)
            }
            KernelSpec::BetaMultiplication { beta, eps } => {
                require_positive("beta-mult β", *beta)?;
                require_positive("beta-mult ε", *eps)
            }
            KernelSpec::GammaShift { beta } => require_positive("gamma shift β", *beta),
            KernelSpec::TwoPoint { rows } => {
                for row in rows {
                    if row.iter().any(|&p| !(-1e-12..=1.0 + 1e-12).contains(&p)) {
                        return Err(Error::domain(format!(
                            "two-point kernel entries must lie in [0,1], got {row:?}"
                        )));
                    }
                    if ((row[0] + row[1]) - 1.0).abs() > 1e-10 {
                        return Err(Error::domain("two-point kernel rows must sum to 1"));
                    }
                }
                Ok(())
            }
        }
    }

    /// One transition from `x`.
    pub fn sample(&self, x: f64, rng: &mut Stream) -> Result<f64> {
        self.validate()?;
        match *self {
            KernelSpec::Poisson { sigma } => {
                if x < 0.0 {
                    return Err(Error::domain(format!("poisson kernel needs x ≥ 0, got {x}")));
                }
                Ok(sample_poisson(sigma * x, rng))
            }
            KernelSpec::GammaMixture { beta, sigma } => {
                if x < 0.0 || x.fract() != 0.0 {
                    return Err(Error::domain(format!(
                        "gamma kernel needs a non-negative integer state, got {x}"
                    )));
                }
                Ok(sample_gamma(x + beta, 1.0 / sigma, rng))
            }
            KernelSpec::BetaMultiplication { beta, eps } => {
                if x < 0.0 {
                    return Err(Error::domain(format!("beta-mult needs x ≥ 0, got {x}")));
                }
                Ok(x * sample_beta(eps, beta, rng))
            }
            KernelSpec::GammaShift { beta } => {
                if x < 0.0 {
                    return Err(Error::domain(format!("gamma shift needs x ≥ 0, got {x}")));
                }
                Ok(x + sample_gamma(beta, 1.0, rng))
            }
            KernelSpec::TwoPoint { rows } => {
                let i = if x == 0.0 {
                    0
                } else if x == 1.0 {
                    1
                } else {
                    return Err(Error::domain(format!("two-point kernel needs x ∈ {{0,1}}, got {x}")));
                };
                Ok(if rng.uniform() < rows[i][0] { 0.0 } else { 1.0 })
            }
        }
    }

    /// The polynomial (moment) action of this kernel, when it has one.
    pub fn polyop(&self, degree: usize) -> Result<PolyOp> {
        match *self {
            KernelSpec::Poisson { sigma } => polyop::poisson_kernel(sigma, degree),
            KernelSpec::GammaMixture { beta, sigma } => {
                polyop::gamma_mixture_kernel(beta, sigma, degree)
            }
            KernelSpec::BetaMultiplication { beta, eps } => {
                polyop::beta_multiplication_kernel(beta, eps, degree)
            }
            KernelSpec::GammaShift { beta } => polyop::gamma_shift_kernel(beta, degree),
            KernelSpec::TwoPoint { .. } => Err(Error::Unsupported(
                "the two-point kernel is a 2×2 matrix, not a polynomial operator".into(),
            )),
        }
    }
}

/// Monte-Carlo estimate of `(Λf)(x)` with its standard error.
pub fn apply_kernel_mc(
    spec: &KernelSpec,
    f: impl Fn(f64) -> f64,
    x: f64,
    nsamples: usize,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    if nsamples == 0 {
        return Err(Error::domain("apply_kernel_mc needs at least one sample"));
    }
    let mut vals = Vec::with_capacity(nsamples);
    for _ in 0..nsamples {
        vals.push(f(spec.sample(x, rng)?));
    }
    Ok(mean_and_se(&vals))
}

/// Evaluates basis element `k` at a point, for checking moment actions.
pub fn eval_basis(basis: Basis, k: usize, x: f64) -> f64 {
    match basis {
        Basis::Monomial => x.powi(k as i32),
        Basis::FallingFactorial => (0..k).fold(1.0, |acc, j| acc * (x - j as f64)),
    }
}

// ---------------------------------------------------------------------------
// The two-point space
// ---------------------------------------------------------------------------

/// A probability pair on `{0, 1}` with both atoms positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityPair {
    pub p0: f64,
    pub p1: f64,
}

impl ProbabilityPair {
    pub fn new(p0: f64) -> Result<Self> {
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(Error::domain(format!(
                "two-point measure needs both atoms positive, got μ(0) = {p0}"
            )));
        }
        Ok(ProbabilityPair { p0, p1: 1.0 - p0 })
    }

    pub fn uniform() -> Self {
        ProbabilityPair { p0: 0.5, p1: 0.5 }
    }

    /// `l = √(μ(1)/μ(0))`.
    pub fn l(&self) -> f64 {
        (self.p1 / self.p0).sqrt()
    }

    /// The `L²(μ)`-normalized eigenfunction `(l, -1/l)`.
    pub fn eigenfunction(&self) -> [f64; 2] {
        let l = self.l();
        [l, -1.0 / l]
    }

    pub fn min_mass(&self) -> f64 {
        self.p0.min(self.p1)
    }
}

/// Generator `λ(μ - Id)` on `{0, 1}` together with its invariant pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointModel {
    pub rate: f64,
    pub mu: ProbabilityPair,
}

impl TwoPointModel {
    pub fn new(rate: f64, mu0: f64) -> Result<Self> {
        require_positive("two-point rate λ", rate)?;
        Ok(TwoPointModel { rate, mu: ProbabilityPair::new(mu0)? })
    }

    /// `λ(μ - Id)` as a matrix acting on functions (rows indexed by state).
    pub fn generator(&self) -> Matrix2<f64> {
        let m = &self.mu;
        Matrix2::new(
            self.rate * (m.p0 - 1.0),
            self.rate * m.p1,
            self.rate * m.p0,
            self.rate * (m.p1 - 1.0),
        )
    }

    /// `exp(tL)` in closed form: `e^{-λt} Id + (1 - e^{-λt}) μ`.
    pub fn semigroup(&self, t: f64) -> Matrix2<f64> {
        let decay = (-self.rate * t).exp();
        let m = &self.mu;
        Matrix2::new(
            decay + (1.0 - decay) * m.p0,
            (1.0 - decay) * m.p1,
            (1.0 - decay) * m.p0,
            decay + (1.0 - decay) * m.p1,
        )
    }
}

/// The linear map sending `1 ↦ 1` and `φ̃ ↦ ε φ`, solved row by row from
/// those two conditions, together with its Markov-feasibility flag
/// (all entries in `[0,1]` up to 1e-12; boundary cases count as feasible).
pub fn two_point_lambda(
    mu: ProbabilityPair,
    mu_tilde: ProbabilityPair,
    eps: f64,
) -> Result<(Matrix2<f64>, bool)> {
    require_positive("two-point ε", eps)?;
    let phi = mu.eigenfunction();
    let phi_t = mu_tilde.eigenfunction();
    let denom = phi_t[0] - phi_t[1]; // l̃ + 1/l̃ > 0
    let mut rows = [[0.0; 2]; 2];
    for (x, row) in rows.iter_mut().enumerate() {
        let first = (eps * phi[x] - phi_t[1]) / denom;
        row[0] = first;
        row[1] = 1.0 - first;
    }
    let feasible = rows
        .iter()
        .flatten()
        .all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v));
    Ok((Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]), feasible))
}

/// Output of the optimal two-point construction.
#[derive(Debug, Clone)]
pub struct TwoPointInterweaving {
    /// Largest ε keeping both kernels Markovian: `min(l/l̃, l̃/l)`.
    pub eps0: f64,
    /// `-ln(ε₀²)`: the warm-up time of the unit-rate semigroups. For
    /// generators with rate `λ` the factorization holds at time `t0 / λ`.
    pub t0: f64,
    /// Kernel sending `φ̃ ↦ ε₀ φ` (rows indexed by the μ-side states).
    pub lambda: Matrix2<f64>,
    /// Kernel sending `φ ↦ ε₀ φ̃`.
    pub lambda_tilde: Matrix2<f64>,
}

/// Builds the optimal pair of two-point kernels: `Λ Λ̃ = exp(t0 (μ - Id))`
/// and `Λ̃ Λ = exp(t0 (μ̃ - Id))` hold exactly.
pub fn two_point_optimal(
    mu: ProbabilityPair,
    mu_tilde: ProbabilityPair,
) -> Result<TwoPointInterweaving> {
    let (l, lt) = (mu.l(), mu_tilde.l());
    let eps0 = (l / lt).min(lt / l);
    let t0 = -(eps0 * eps0).ln();
    let (lambda, ok1) = two_point_lambda(mu, mu_tilde, eps0)?;
    let (lambda_tilde, ok2) = two_point_lambda(mu_tilde, mu, eps0)?;
    if !ok1 || !ok2 {
        return Err(Error::Infeasible(
            "optimal two-point kernels failed the Markov bound; degenerate input?".into(),
        ));
    }
    Ok(TwoPointInterweaving { eps0, t0: t0.max(0.0), lambda, lambda_tilde })
}
