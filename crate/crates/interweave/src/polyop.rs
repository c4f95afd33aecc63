//! Exact operator calculus on degree-truncated polynomial spaces.
//!
//! Generators, semigroups and Markov kernels act on polynomials without
//! raising the degree, so on the span of the first `N+1` basis elements they
//! are upper-triangular `(N+1)×(N+1)` matrices and every intertwining or
//! interweaving identity can be checked entry by entry. Truncation introduces
//! no modelling error, only floating-point roundoff, which is why residuals
//! are reported relative to the magnitude of the composites being compared.
//!
//! Column `n` of a [`PolyOp`] holds the coefficients of the image of the
//! `n`-th basis element in the codomain basis. Operator composition
//! `A ∘ B` (apply `B`, then `A`) is the matrix product `A · B`; this is the
//! same order as Markov-kernel composition, so an interweaving identity
//! `Λ Λ̃ = P_τ` is literally `lambda.compose(&lambda_tilde) ≈ p_warm`.

use crate::error::{require_nonneg, require_positive, Error, Result};
use crate::linalg::{self, max_abs};
use crate::special::{log_binomial, log_gamma_unchecked};
use nalgebra::{DMatrix, DVector};

/// State space a polynomial family lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// `[0, ∞)`
    RealHalfLine,
    /// `[0, 1]`
    UnitInterval,
    /// `{0, 1, 2, ...}`
    Integers,
}

/// Polynomial basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `p_n(x) = x^n`
    Monomial,
    /// `(n)_k = n (n-1) ⋯ (n-k+1)` on the integers
    FallingFactorial,
}

/// One side (domain or codomain) of an operator: where the functions live
/// and which basis their coefficients refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Side {
    pub space: Space,
    pub basis: Basis,
}

impl Side {
    pub const REAL: Side = Side { space: Space::RealHalfLine, basis: Basis::Monomial };
    pub const UNIT: Side = Side { space: Space::UnitInterval, basis: Basis::Monomial };
    pub const INT_FF: Side = Side { space: Space::Integers, basis: Basis::FallingFactorial };
    pub const INT_MONO: Side = Side { space: Space::Integers, basis: Basis::Monomial };

    fn check(&self) -> Result<()> {
        if self.basis == Basis::FallingFactorial && self.space != Space::Integers {
            return Err(Error::domain(
                "falling-factorial basis is only defined on the integer lattice",
            ));
        }
        Ok(())
    }
}

/// A linear operator on a degree-truncated polynomial space.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyOp {
    matrix: DMatrix<f64>,
    dom: Side,
    cod: Side,
}

impl PolyOp {
    /// Wraps a matrix; must be square.
    pub fn new(matrix: DMatrix<f64>, dom: Side, cod: Side) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "PolyOp matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        dom.check()?;
        cod.check()?;
        Ok(PolyOp { matrix, dom, cod })
    }

    pub fn identity(degree: usize, side: Side) -> Self {
        PolyOp { matrix: DMatrix::identity(degree + 1, degree + 1), dom: side, cod: side }
    }

    pub fn from_multipliers(mults: &[f64], dom: Side, cod: Side) -> Self {
        let d = DVector::from_row_slice(mults);
        PolyOp { matrix: DMatrix::from_diagonal(&d), dom, cod }
    }

    pub fn degree(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dom(&self) -> Side {
        self.dom
    }

    pub fn cod(&self) -> Side {
        self.cod
    }

    /// Multiplies every entry (e.g. to rate-scale a generator).
    pub fn scaled(&self, factor: f64) -> Self {
        PolyOp { matrix: &self.matrix * factor, dom: self.dom, cod: self.cod }
    }

    /// `self ∘ other`: apply `other` first. Fails unless `other`'s codomain
    /// matches `self`'s domain (space and basis).
    pub fn compose(&self, other: &PolyOp) -> Result<PolyOp> {
        if self.matrix.nrows() != other.matrix.nrows() {
            return Err(Error::Dimension(format!(
                "compose: degree mismatch {} vs {}",
                self.degree(),
                other.degree()
            )));
        }
        if self.dom != other.cod {
            return Err(Error::Dimension(format!(
                "compose: domain {:?} does not match codomain {:?}",
                self.dom, other.cod
            )));
        }
        Ok(PolyOp { matrix: &self.matrix * &other.matrix, dom: other.dom, cod: self.cod })
    }

    /// True when column `n` has no entries below row `n` (degree
    /// non-increasing), exactly.
    pub fn is_triangular(&self) -> bool {
        let n = self.matrix.nrows();
        (0..n).all(|j| ((j + 1)..n).all(|i| self.matrix[(i, j)] == 0.0))
    }

    /// True when the constant basis element maps to itself exactly
    /// (column 0 equals `e_0`), as every Markov kernel must.
    pub fn preserves_constants(&self) -> bool {
        let n = self.matrix.nrows();
        self.matrix[(0, 0)] == 1.0 && (1..n).all(|i| self.matrix[(i, 0)] == 0.0)
    }

    /// Applies the operator to a coefficient vector.
    pub fn apply(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        if coeffs.len() != self.matrix.ncols() {
            return Err(Error::Dimension(format!(
                "apply: vector length {} vs dimension {}",
                coeffs.len(),
                self.matrix.ncols()
            )));
        }
        Ok(&self.matrix * coeffs)
    }

    /// Row-major CSV dump; the header records both sides and the degree.
    pub fn to_csv(&self) -> String {
        let n = self.matrix.nrows();
        let mut out = format!(
            "# dom={:?}/{:?} cod={:?}/{:?} degree={}\n",
            self.dom.space,
            self.dom.basis,
            self.cod.space,
            self.cod.basis,
            self.degree()
        );
        let header: Vec<String> = (0..n).map(|j| format!("col{j}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..n {
            let row: Vec<String> =
                (0..n).map(|j| format!("{:.17e}", self.matrix[(i, j)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Scaled max-abs difference of two composites.
///
/// High-degree kernels have entries of size `Γ(n+β)`-ish, so an absolute
/// residual would be dominated by representation noise. Residuals are
/// therefore reported relative to the largest entry of the matrices being
/// compared (clamped at 1, so well-scaled checks are plain max-abs).
fn scaled_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = max_abs(a).max(max_abs(b)).max(1.0);
    max_abs(&(a - b)) / scale
}

/// Residual of the intertwining identity `P Λ = Λ P̃`.
pub fn check_intertwining(p: &PolyOp, lambda: &PolyOp, p_tilde: &PolyOp) -> Result<f64> {
    let lhs = p.compose(lambda)?;
    let rhs = lambda.compose(p_tilde)?;
    Ok(scaled_residual(&lhs.matrix, &rhs.matrix))
}

/// Residual of the interweaving identity `Λ Λ̃ = P_warm`.
pub fn check_interweaving(lambda: &PolyOp, lambda_tilde: &PolyOp, p_warm: &PolyOp) -> Result<f64> {
    let composite = lambda.compose(lambda_tilde)?;
    if composite.dom != p_warm.dom || composite.cod != p_warm.cod {
        return Err(Error::Dimension(
            "interweaving: kernel composite and warm semigroup act on different spaces".into(),
        ));
    }
    Ok(scaled_residual(&composite.matrix, &p_warm.matrix))
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Finite-activity Bernstein function `φ(u) = u + m + Σ w_i (e^{-u y_i} - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinSpec {
    drift: f64,
    atoms: Vec<(f64, f64)>, // (location y_i > 0, weight w_i ≥ 0)
}

impl BernsteinSpec {
    pub fn new(drift: f64, atoms: Vec<(f64, f64)>) -> Result<Self> {
        require_nonneg("bernstein drift m", drift)?;
        for &(y, w) in &atoms {
            require_positive("atom location", y)?;
            require_nonneg("atom weight", w)?;
        }
        Ok(BernsteinSpec { drift, atoms })
    }

    /// The pure-drift case `φ(u) = u`.
    pub fn pure_drift() -> Self {
        BernsteinSpec { drift: 0.0, atoms: Vec::new() }
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// `φ(u)`.
    pub fn phi(&self, u: f64) -> f64 {
        u + self.drift + self.atoms.iter().map(|&(y, w)| w * ((-u * y).exp() - 1.0)).sum::<f64>()
    }

    /// First moment of the jump measure, `Σ w_i y_i`.
    pub fn pi_bar(&self) -> f64 {
        self.atoms.iter().map(|&(y, w)| w * y).sum()
    }

    /// `ln W_φ(n+1) = Σ_{k=1}^{n} ln φ(k)`, with `W_φ(1) = 1`.
    pub fn log_w(&self, n: u32) -> Result<f64> {
        let mut acc = 0.0;
        for k in 1..=n {
            let p = self.phi(f64::from(k));
            if p <= 0.0 {
                return Err(Error::domain(format!("φ({k}) = {p} ≤ 0; W_φ undefined")));
            }
            acc += p.ln();
        }
        Ok(acc)
    }
}

/// Tagged descriptions of the generators whose polynomial action is exact.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// `L = λ(μ - Id)` on `{0, 1}`; not a polynomial operator (see the
    /// two-point machinery in [`crate::kernels`]).
    TwoPoint { lambda: f64, mu0: f64 },
    /// `x ∂² + β ∂` on `[0, ∞)`.
    BesselDiffusion { beta: f64 },
    /// `(n+β) ∂₊ + n ∂₋` on the integers.
    BesselBirthDeath { beta: f64 },
    /// `ς x ∂² + (ςβ - x) ∂` on `[0, ∞)`.
    LaguerreDiffusion { beta: f64, sigma: f64 },
    /// `σ(n+β) ∂₊ + (σ+1) n ∂₋` on the integers.
    LaguerreBirthDeath { beta: f64, sigma: f64 },
    /// `x(1-x) ∂² + (λ₁ - β - λ₁ x) ∂` on `[0, 1]`, `λ₁ ≥ 2β > 2`.
    Jacobi { lambda1: f64, beta: f64 },
    /// Non-local Laguerre-type generator acting on monomials as
    /// `p_n ↦ n φ(n) p_{n-1} - n p_n`.
    GeneralizedLaguerre { bernstein: BernsteinSpec },
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorSpec::TwoPoint { lambda, mu0 } => {
                require_positive("two-point rate λ", *lambda)?;
                if !(*mu0 > 0.0 && *mu0 < 1.0) {
                    return Err(Error::domain(format!(
                        "two-point μ(0) must lie strictly inside (0,1), got {mu0}"
                    )));
                }
                Ok(())
            }
            GeneratorSpec::BesselDiffusion { beta } | GeneratorSpec::BesselBirthDeath { beta } => {
                require_positive("bessel β", *beta)
            }
            GeneratorSpec::LaguerreDiffusion { beta, sigma }
            | GeneratorSpec::LaguerreBirthDeath { beta, sigma } => {
                require_positive("laguerre β", *beta)?;
                require_positive("laguerre rate", *sigma)
            }
            GeneratorSpec::Jacobi { lambda1, beta } => {
                if !(*lambda1 >= 2.0 * *beta && 2.0 * *beta > 2.0) {
                    return Err(Error::domain(format!(
                        "jacobi requires λ₁ ≥ 2β > 2, got λ₁={lambda1}, β={beta}"
                    )));
                }
                Ok(())
            }
            GeneratorSpec::GeneralizedLaguerre { .. } => Ok(()),
        }
    }

    /// Triangular matrix of the generator on the degree-`n` truncation.
    pub fn polyop(&self, degree: usize) -> Result<PolyOp> {
        self.validate()?;
        if degree < 1 {
            return Err(Error::domain("generator truncation needs degree ≥ 1"));
        }
        let n = degree + 1;
        let mut m = DMatrix::zeros(n, n);
        let (dom, cod);
        match self {
            GeneratorSpec::TwoPoint { .. } => {
                return Err(Error::Unsupported(
                    "the two-point generator has no polynomial action; use kernels::TwoPointModel"
                        .into(),
                ));
            }
            GeneratorSpec::BesselDiffusion { beta } => {
                for k in 1..n {
                    let kf = k as f64;
                    m[(k - 1, k)] = kf * (kf + beta - 1.0);
                }
                dom = Side::REAL;
                cod = Side::REAL;
            }
            GeneratorSpec::BesselBirthDeath { beta } => {
                for k in 1..n {
                    let kf = k as f64;
                    m[(k - 1, k)] = kf * (kf + beta - 1.0);
                }
                dom = Side::INT_FF;
                cod = Side::INT_FF;
            }
            GeneratorSpec::LaguerreDiffusion { beta, sigma } => {
                for k in 1..n {
                    let kf = k as f64;
                    m[(k - 1, k)] = sigma * kf * (kf + beta - 1.0);
                    m[(k, k)] = -kf;
                }
                dom = Side::REAL;
                cod = Side::REAL;
            }
            GeneratorSpec::LaguerreBirthDeath { beta, sigma } => {
                for k in 1..n {
                    let kf = k as f64;
                    m[(k - 1, k)] = sigma * kf * (kf + beta - 1.0);
                    m[(k, k)] = -kf;
                }
                dom = Side::INT_FF;
                cod = Side::INT_FF;
            }
            GeneratorSpec::Jacobi { lambda1, beta } => {
                for k in 1..n {
                    let kf = k as f64;
                    m[(k - 1, k)] = kf * (kf - 1.0) + (lambda1 - beta) * kf;
                    m[(k, k)] = -kf * (kf - 1.0) - lambda1 * kf;
                }
                dom = Side::UNIT;
                cod = Side::UNIT;
            }
            GeneratorSpec::GeneralizedLaguerre { bernstein } => {
                for k in 1..n {
                    let kf = k as f64;
                    m[(k - 1, k)] = kf * bernstein.phi(kf);
                    m[(k, k)] = -kf;
                }
                dom = Side::REAL;
                cod = Side::REAL;
            }
        }
        PolyOp::new(m, dom, cod)
    }
}

/// Convenience wrapper matching the operation list.
pub fn generator_polyop(spec: &GeneratorSpec, degree: usize) -> Result<PolyOp> {
    spec.polyop(degree)
}

// ---------------------------------------------------------------------------
// Semigroups (triangular matrix exponential)
// ---------------------------------------------------------------------------

/// `exp(t · gen)` for a triangular generator.
///
/// Uses the Parlett recurrence when the diagonal entries are well separated
/// (every generator here except the Bessel ones), otherwise falls back to
/// scaling-and-squaring.
pub fn semigroup_polyop(gen: &PolyOp, t: f64) -> Result<PolyOp> {
    require_nonneg("time t", t)?;
    if !gen.is_triangular() {
        return Err(Error::domain("semigroup_polyop expects a triangular generator"));
    }
    if t == 0.0 {
        return Ok(PolyOp::identity(gen.degree(), gen.dom));
    }
    let a = &gen.matrix * t;
    let n = a.nrows();
    let mut min_gap = f64::INFINITY;
    let mut scale = 0.0_f64;
    for i in 0..n {
        scale = scale.max(a[(i, i)].abs());
        for j in (i + 1)..n {
            min_gap = min_gap.min((a[(i, i)] - a[(j, j)]).abs());
        }
    }
    let matrix = if min_gap > 1e-8 * scale.max(1.0) {
        expm_parlett(&a)
    } else {
        linalg::expm(&a)
    };
    Ok(PolyOp { matrix, dom: gen.dom, cod: gen.cod })
}

fn expm_parlett(t: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.nrows();
    let mut f = DMatrix::zeros(n, n);
    for i in 0..n {
        f[(i, i)] = t[(i, i)].exp();
    }
    for sep in 1..n {
        for i in 0..(n - sep) {
            let j = i + sep;
            let mut s = t[(i, j)] * (f[(i, i)] - f[(j, j)]);
            for k in (i + 1)..j {
                s += f[(i, k)] * t[(k, j)] - t[(i, k)] * f[(k, j)];
            }
            f[(i, j)] = s / (t[(i, i)] - t[(j, j)]);
        }
    }
    f
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// Poisson kernel `x ↦ Poisson(σx)`: diagonal `σ^k` from falling factorials
/// to monomials (Poisson factorial moments are `E[(N)_k] = (σx)^k`).
pub fn poisson_kernel(sigma: f64, degree: usize) -> Result<PolyOp> {
    require_positive("poisson σ", sigma)?;
    let mults: Vec<f64> = (0..=degree as u32).map(|k| sigma.powi(k as i32)).collect();
    Ok(PolyOp::from_multipliers(&mults, Side::INT_FF, Side::REAL))
}

/// Gamma kernel `n ↦ Gamma(n+β, scale 1/σ)`: sends `x^k` to the rising
/// factorial `(n+β)(n+β+1)⋯(n+β+k-1)/σ^k`, expanded in falling factorials.
pub fn gamma_mixture_kernel(beta: f64, sigma: f64, degree: usize) -> Result<PolyOp> {
    require_positive("gamma kernel β", beta)?;
    require_positive("gamma kernel σ", sigma)?;
    let n = degree + 1;
    let s2 = stirling_second_kind(degree);
    let mut m = DMatrix::zeros(n, n);
    // rising factorial in powers of n, then convert columns with S2
    let mut mono = vec![0.0; n]; // coefficients of Π (n + β + i)
    mono[0] = 1.0;
    m[(0, 0)] = 1.0;
    let mut len = 1;
    for k in 1..n {
        // multiply by (n + β + (k-1))
        let shift = beta + (k - 1) as f64;
        let mut next = vec![0.0; n];
        for (j, &c) in mono.iter().enumerate().take(len) {
            next[j] += shift * c;
            next[j + 1] += c;
        }
        len += 1;
        mono = next;
        let scale = sigma.powi(-(k as i32));
        for i in 0..n {
            // (column k in falling factorials) = Σ_j S2(j, i) mono[j]
            let mut acc = 0.0;
            for (j, &c) in mono.iter().enumerate().take(len) {
                acc += s2[(i, j)] * c;
            }
            m[(i, k)] = acc * scale;
        }
    }
    PolyOp::new(m, Side::REAL, Side::INT_FF)
}

/// Multiplication by a `Beta(ε, β)` variable: diagonal with multipliers
/// `Γ(β+ε) Γ(n+ε) / (Γ(ε) Γ(n+β+ε))`.
pub fn beta_multiplication_kernel(beta: f64, eps: f64, degree: usize) -> Result<PolyOp> {
    require_positive("beta-mult β", beta)?;
    require_positive("beta-mult ε", eps)?;
    let mults: Vec<f64> = (0..=degree as u32)
        .map(|k| beta_multiplication_multiplier(beta, eps, f64::from(k)))
        .collect();
    Ok(PolyOp::from_multipliers(&mults, Side::REAL, Side::REAL))
}

/// The diagonal multiplier of the beta-multiplication kernel at (real) `u`.
pub fn beta_multiplication_multiplier(beta: f64, eps: f64, u: f64) -> f64 {
    (log_gamma_unchecked(beta + eps) + log_gamma_unchecked(u + eps)
        - log_gamma_unchecked(eps)
        - log_gamma_unchecked(u + beta + eps))
        .exp()
}

/// Additive `Gamma(β, 1)` noise `x ↦ x + G`: column `n` is the binomial sum
/// `Σ_m C(n,m) Γ(β+m)/Γ(β) p_{n-m}`.
pub fn gamma_shift_kernel(beta: f64, degree: usize) -> Result<PolyOp> {
    require_positive("gamma shift β", beta)?;
    let n = degree + 1;
    let lg_beta = log_gamma_unchecked(beta);
    let mut m = DMatrix::zeros(n, n);
    for col in 0..n {
        for row in 0..=col {
            let k = (col - row) as u32; // moment order
            let lw = log_binomial(col as f64, k) + log_gamma_unchecked(beta + f64::from(k))
                - lg_beta;
            m[(row, col)] = lw.exp();
        }
        m[(col, col)] = 1.0;
    }
    PolyOp::new(m, Side::REAL, Side::REAL)
}

/// Multiplicative kernel of the exponential functional attached to `φ`:
/// diagonal `Γ(n+1) / W_φ(n+1)`.
pub fn exp_functional_kernel(spec: &BernsteinSpec, degree: usize) -> Result<PolyOp> {
    let mut mults = Vec::with_capacity(degree + 1);
    for k in 0..=degree as u32 {
        let lw = spec.log_w(k)?;
        mults.push((log_gamma_unchecked(f64::from(k) + 1.0) - lw).exp());
    }
    Ok(PolyOp::from_multipliers(&mults, Side::REAL, Side::REAL))
}

/// Closure kernel for the quotient Bernstein function `φ_β(u) = φ(u)/(u+β)`:
/// diagonal `Γ(1+β) W_φ(n+1) / Γ(n+1+β)`. Requires `β` above the jump mass
/// plus drift so the quotient stays Bernstein.
pub fn bernstein_quotient_kernel(spec: &BernsteinSpec, beta: f64, degree: usize) -> Result<PolyOp> {
    require_positive("quotient kernel β", beta)?;
    let floor = spec.pi_bar() + spec.drift();
    if beta <= floor {
        return Err(Error::domain(format!(
            "quotient kernel requires β > Π̄ + m = {floor}, got {beta}"
        )));
    }
    let lg1b = log_gamma_unchecked(1.0 + beta);
    let mut mults = Vec::with_capacity(degree + 1);
    for k in 0..=degree as u32 {
        let lw = spec.log_w(k)?;
        mults.push((lg1b + lw - log_gamma_unchecked(f64::from(k) + 1.0 + beta)).exp());
    }
    Ok(PolyOp::from_multipliers(&mults, Side::REAL, Side::REAL))
}

// ---------------------------------------------------------------------------
// Basis conversion (exact Stirling numbers)
// ---------------------------------------------------------------------------

fn stirling_second_kind_table(degree: usize) -> Vec<Vec<i128>> {
    let n = degree + 1;
    let mut table = vec![vec![0i128; n]; n];
    table[0][0] = 1;
    for j in 1..n {
        for i in 1..=j {
            table[j][i] = i as i128 * table[j - 1][i] + table[j - 1][i - 1];
        }
    }
    table
}

fn stirling_first_kind_table(degree: usize) -> Vec<Vec<i128>> {
    let n = degree + 1;
    let mut table = vec![vec![0i128; n]; n];
    table[0][0] = 1;
    for j in 1..n {
        for i in 0..=j {
            let carry = if i > 0 { table[j - 1][i - 1] } else { 0 };
            table[j][i] = carry - (j as i128 - 1) * table[j - 1][i];
        }
    }
    table
}

/// Matrix sending monomial coefficients to falling-factorial coefficients:
/// entry `(i, j)` is the Stirling number of the second kind `S2(j, i)`.
pub fn stirling_second_kind(degree: usize) -> DMatrix<f64> {
    let table = stirling_second_kind_table(degree);
    let n = degree + 1;
    DMatrix::from_fn(n, n, |i, j| table[j][i] as f64)
}

/// Matrix sending falling-factorial coefficients to monomial coefficients:
/// entry `(i, j)` is the signed Stirling number of the first kind `s1(j, i)`.
pub fn stirling_first_kind(degree: usize) -> DMatrix<f64> {
    let table = stirling_first_kind_table(degree);
    let n = degree + 1;
    DMatrix::from_fn(n, n, |i, j| table[j][i] as f64)
}

/// Re-expresses every integer-lattice side of `op` in `target` basis.
/// Errors when the operator has no integer side to convert.
pub fn convert_basis(op: &PolyOp, target: Basis) -> Result<PolyOp> {
    let deg = op.degree();
    let has_int = op.dom.space == Space::Integers || op.cod.space == Space::Integers;
    if !has_int {
        return Err(Error::domain(
            "basis conversion only applies to operators with an integer-lattice side",
        ));
    }
    let mut matrix = op.matrix.clone();
    let mut dom = op.dom;
    let mut cod = op.cod;
    if cod.space == Space::Integers && cod.basis != target {
        // output coefficients are in the old basis; push them to `target`
        let fwd = match target {
            Basis::FallingFactorial => stirling_second_kind(deg),
            Basis::Monomial => stirling_first_kind(deg),
        };
        matrix = &fwd * &matrix;
        cod = Side { space: cod.space, basis: target };
    }
    if dom.space == Space::Integers && dom.basis != target {
        // incoming coefficients arrive in `target`; translate them back to
        // the operator's native basis before applying it
        let back = match target {
            Basis::Monomial => stirling_second_kind(deg),
            Basis::FallingFactorial => stirling_first_kind(deg),
        };
        matrix = &matrix * &back;
        dom = Side { space: dom.space, basis: target };
    }
    PolyOp::new(matrix, dom, cod)
}

// ---------------------------------------------------------------------------
// Spectral helpers
// ---------------------------------------------------------------------------

/// Multipliers of `op` on the eigenpolynomial ladders of two triangular
/// generators: `op · v_n = μ_n w_n` with `v_n`, `w_n` the degree-`n`
/// eigenpolynomials (leading coefficient 1) of `dom_gen` and `cod_gen`.
#[derive(Debug, Clone)]
pub struct EigenMultipliers {
    /// `μ_n` for `n = 0..=degree`.
    pub multipliers: Vec<f64>,
    /// Worst relative deviation of `op · v_n` from the line spanned by `w_n`.
    /// Small values certify that `op` genuinely maps eigenbasis to eigenbasis.
    pub alignment: f64,
}

/// Monic-normalized eigenvector columns of a triangular generator.
pub fn eigen_polynomials(gen: &PolyOp, tol: f64) -> Result<DMatrix<f64>> {
    if !gen.is_triangular() {
        return Err(Error::domain("eigen_polynomials expects a triangular generator"));
    }
    let n = gen.matrix.nrows();
    let g = &gen.matrix;
    for i in 0..n {
        for j in (i + 1)..n {
            if (g[(i, i)] - g[(j, j)]).abs() <= tol * (1.0 + g[(i, i)].abs()) {
                return Err(Error::Degenerate(format!(
                    "diagonal entries {} and {} coincide; eigenbasis is not unique",
                    g[(i, i)],
                    g[(j, j)]
                )));
            }
        }
    }
    let mut v = DMatrix::zeros(n, n);
    for col in 0..n {
        v[(col, col)] = 1.0;
        let lambda = g[(col, col)];
        for i in (0..col).rev() {
            let mut s = 0.0;
            for k in (i + 1)..=col {
                s += g[(i, k)] * v[(k, col)];
            }
            v[(i, col)] = s / (lambda - g[(i, i)]);
        }
    }
    Ok(v)
}

/// Computes [`EigenMultipliers`] of `op` relative to `(dom_gen, cod_gen)`.
pub fn eigen_multipliers(
    op: &PolyOp,
    dom_gen: &PolyOp,
    cod_gen: &PolyOp,
) -> Result<EigenMultipliers> {
    if op.dom != dom_gen.dom || op.cod != cod_gen.dom {
        return Err(Error::Dimension(
            "eigen_multipliers: operator sides do not match the generators".into(),
        ));
    }
    let tol = 1e-9;
    let v = eigen_polynomials(dom_gen, tol)?;
    let w = eigen_polynomials(cod_gen, tol)?;
    let n = v.nrows();
    let image = &op.matrix * &v;
    let mut multipliers = Vec::with_capacity(n);
    let mut alignment = 0.0_f64;
    for col in 0..n {
        let mu = image[(col, col)]; // leading coefficients are 1
        multipliers.push(mu);
        let mut err = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..n {
            let want = mu * w[(i, col)];
            err = err.max((image[(i, col)] - want).abs());
            scale = scale.max(image[(i, col)].abs()).max(want.abs());
        }
        alignment = alignment.max(err / scale.max(1.0));
    }
    Ok(EigenMultipliers { multipliers, alignment })
}

/// Similarity transform `M P M⁻¹`.
pub fn similarity_transform(p: &PolyOp, m: &PolyOp) -> Result<PolyOp> {
    if p.matrix.nrows() != m.matrix.nrows() {
        return Err(Error::Dimension("similarity: degree mismatch".into()));
    }
    let lu = m.matrix.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::Singular("similarity transform with a singular M".into()))?;
    let matrix = &m.matrix * &p.matrix * inv;
    Ok(PolyOp { matrix, dom: m.cod, cod: m.cod })
}

/// Diagonal dilation `f(x) ↦ f(ςx)`: diagonal `ς^n` in the monomial basis.
pub fn dilation(sigma: f64, degree: usize, side: Side) -> Result<PolyOp> {
    require_positive("dilation ς", sigma)?;
    if side.basis != Basis::Monomial {
        return Err(Error::domain("dilation is diagonal only in a monomial basis"));
    }
    let mults: Vec<f64> = (0..=degree as u32).map(|k| sigma.powi(k as i32)).collect();
    Ok(PolyOp::from_multipliers(&mults, side, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DEG: usize = 12;

    fn laguerre_diff(beta: f64, sigma: f64) -> GeneratorSpec {
        GeneratorSpec::LaguerreDiffusion { beta, sigma }
    }

    #[test]
    fn generator_columns_match_hand_calculations() {
        // generalized Laguerre, column 1 = φ(1) p₀ - p₁
        let spec = BernsteinSpec::new(0.2, vec![(1.0, 0.5)]).unwrap();
        let phi1 = spec.phi(1.0);
        let g = GeneratorSpec::GeneralizedLaguerre { bernstein: spec }.polyop(DEG).unwrap();
        assert!((g.matrix()[(0, 1)] - phi1).abs() < 1e-14);
        assert_eq!(g.matrix()[(1, 1)], -1.0);

        // Jacobi diagonal
        let j = GeneratorSpec::Jacobi { lambda1: 5.0, beta: 1.6 }.polyop(DEG).unwrap();
        for k in 0..=DEG {
            let kf = k as f64;
            assert_eq!(j.matrix()[(k, k)], -kf * (kf - 1.0) - 5.0 * kf);
        }

        // Laguerre diffusion, column 1 = ςβ p₀ - p₁
        let l = laguerre_diff(1.4, 0.7).polyop(DEG).unwrap();
        assert!((l.matrix()[(0, 1)] - 0.7 * 1.4).abs() < 1e-14);
        assert_eq!(l.matrix()[(1, 1)], -1.0);

        // Bessel diffusion lowers degree only
        let b = GeneratorSpec::BesselDiffusion { beta: 2.0 }.polyop(DEG).unwrap();
        for k in 0..=DEG {
            assert_eq!(b.matrix()[(k, k)], 0.0);
        }
        assert_eq!(b.matrix()[(0, 1)], 2.0);
    }

    #[test]
    fn generator_validation() {
        assert!(GeneratorSpec::Jacobi { lambda1: 3.0, beta: 1.0 }.validate().is_err()); // 2β = 2
        assert!(GeneratorSpec::LaguerreDiffusion { beta: -1.0, sigma: 1.0 }.validate().is_err());
        assert!(GeneratorSpec::TwoPoint { lambda: 1.0, mu0: 0.3 }.polyop(5).is_err());
    }

    #[test]
    fn semigroup_at_zero_is_identity() {
        let g = laguerre_diff(1.0, 1.0).polyop(DEG).unwrap();
        let p = semigroup_polyop(&g, 0.0).unwrap();
        assert_eq!(p.matrix(), PolyOp::identity(DEG, Side::REAL).matrix());
    }

    #[test]
    fn laguerre_semigroup_first_moment() {
        // image of p₁ at time t: constant term ςβ(1 - e^{-t}), p₁-coefficient e^{-t}
        let (beta, sigma, t) = (1.7, 0.6, 0.9);
        let g = laguerre_diff(beta, sigma).polyop(DEG).unwrap();
        let p = semigroup_polyop(&g, t).unwrap();
        assert!((p.matrix()[(1, 1)] - (-t as f64).exp()).abs() < 1e-13);
        assert!((p.matrix()[(0, 1)] - sigma * beta * (1.0 - (-t as f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn bessel_semigroup_is_polynomial_in_t() {
        let g = GeneratorSpec::BesselDiffusion { beta: 1.3 }.polyop(DEG).unwrap();
        let p = semigroup_polyop(&g, 2.5).unwrap();
        assert!((p.matrix()[(0, 1)] - 1.3 * 2.5).abs() < 1e-12);
        assert_eq!(p.matrix()[(1, 1)], 1.0);
    }

    #[test]
    fn semigroup_law() {
        for spec in [
            laguerre_diff(0.5, 1.0),
            GeneratorSpec::LaguerreBirthDeath { beta: 2.0, sigma: 0.5 },
            GeneratorSpec::Jacobi { lambda1: 4.0, beta: 1.5 },
            GeneratorSpec::BesselDiffusion { beta: 1.0 },
            GeneratorSpec::GeneralizedLaguerre {
                bernstein: BernsteinSpec::new(0.2, vec![(1.0, 0.5)]).unwrap(),
            },
        ] {
            let g = spec.polyop(DEG).unwrap();
            let (s, t) = (0.1, 0.7);
            let lhs = semigroup_polyop(&g, s).unwrap().compose(&semigroup_polyop(&g, t).unwrap());
            let rhs = semigroup_polyop(&g, s + t).unwrap();
            let resid = scaled_residual(lhs.unwrap().matrix(), rhs.matrix());
            assert!(resid < 1e-10, "{spec:?}: semigroup law residual {resid}");
        }
    }

    #[test]
    fn kernels_preserve_constants_exactly() {
        let bern = BernsteinSpec::new(0.2, vec![(1.0, 0.5)]).unwrap();
        let ops = [
            poisson_kernel(2.0, DEG).unwrap(),
            gamma_mixture_kernel(1.5, 2.0, DEG).unwrap(),
            beta_multiplication_kernel(0.5, 0.3, DEG).unwrap(),
            gamma_shift_kernel(1.5, DEG).unwrap(),
            exp_functional_kernel(&bern, DEG).unwrap(),
            bernstein_quotient_kernel(&bern, 1.0, DEG).unwrap(),
        ];
        for op in &ops {
            assert!(op.preserves_constants(), "kernel does not fix constants");
            assert!(op.is_triangular());
        }
    }

    #[test]
    fn generator_triangularity() {
        for spec in [
            GeneratorSpec::BesselDiffusion { beta: 0.5 },
            GeneratorSpec::BesselBirthDeath { beta: 0.5 },
            laguerre_diff(1.0, 2.0),
            GeneratorSpec::LaguerreBirthDeath { beta: 1.0, sigma: 2.0 },
            GeneratorSpec::Jacobi { lambda1: 6.0, beta: 2.0 },
        ] {
            assert!(spec.polyop(DEG).unwrap().is_triangular());
        }
    }

    #[test]
    fn beta_multiplication_action_on_p1() {
        // Λ_{β,ε} p₁ = ε/(β+ε) p₁
        let (beta, eps) = (2.0, 0.7);
        let k = beta_multiplication_kernel(beta, eps, DEG).unwrap();
        assert!((k.matrix()[(1, 1)] - eps / (beta + eps)).abs() < 1e-14);
    }

    #[test]
    fn poisson_kernel_factorial_moments() {
        // (n)₂ ↦ σ² p₂
        let k = poisson_kernel(1.7, DEG).unwrap();
        assert!((k.matrix()[(2, 2)] - 1.7f64.powi(2)).abs() < 1e-14);
        assert_eq!(k.matrix()[(0, 2)], 0.0);
    }

    #[test]
    fn gamma_shift_action_on_p1() {
        // x ↦ x + Gamma(β,1): p₁ ↦ p₁ + β p₀
        let k = gamma_shift_kernel(2.5, DEG).unwrap();
        assert!((k.matrix()[(0, 1)] - 2.5).abs() < 1e-13);
        assert_eq!(k.matrix()[(1, 1)], 1.0);
    }

    #[test]
    fn gamma_mixture_first_columns() {
        // Λ̃[p₁](n) = (n+β)/σ = (1/σ)(n)₁ + (β/σ)(n)₀
        let (beta, sigma) = (1.5, 2.0);
        let k = gamma_mixture_kernel(beta, sigma, DEG).unwrap();
        assert!((k.matrix()[(1, 1)] - 1.0 / sigma).abs() < 1e-14);
        assert!((k.matrix()[(0, 1)] - beta / sigma).abs() < 1e-14);
        // Λ̃[p₂](n) = (n+β)(n+β+1)/σ²; at n=0: β(β+1)/σ²
        assert!((k.matrix()[(0, 2)] - beta * (beta + 1.0) / sigma.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn stirling_matrices_are_mutually_inverse() {
        // exact integer verification up to the default truncation degree
        for deg in [3usize, 8, 20] {
            let s2 = stirling_second_kind_table(deg);
            let s1 = stirling_first_kind_table(deg);
            let n = deg + 1;
            for i in 0..n {
                for j in 0..n {
                    // (S1 · S2)_{ij} in matrix-entry indexing: rows of our
                    // matrices are basis indices, columns are source degrees
                    let sum: i128 = (0..n).map(|k| s1[k][i] * s2[j][k]).sum();
                    let want = i128::from(i == j);
                    assert_eq!(sum, want, "degree {deg}: entry ({i},{j})");
                }
            }
        }
        // float matrices match the exact product at small degrees, where the
        // entries stay far below the 2^53 integer limit
        for deg in [3usize, 8] {
            let prod = stirling_first_kind(deg) * stirling_second_kind(deg);
            let n = deg + 1;
            let resid = scaled_residual(&prod, &DMatrix::identity(n, n));
            assert!(resid < 1e-12, "degree {deg}: residual {resid}");
        }
    }

    #[test]
    fn monomial_square_in_falling_factorials() {
        // n² = (n)₂ + (n)₁
        let s2 = stirling_second_kind(4);
        assert_eq!(s2[(1, 2)], 1.0);
        assert_eq!(s2[(2, 2)], 1.0);
        assert_eq!(s2[(0, 2)], 0.0);
    }

    #[test]
    fn convert_basis_identity_and_errors() {
        let id = PolyOp::identity(6, Side::INT_FF);
        let conv = convert_basis(&id, Basis::Monomial).unwrap();
        assert_eq!(conv.dom().basis, Basis::Monomial);
        let back = convert_basis(&conv, Basis::FallingFactorial).unwrap();
        assert!(scaled_residual(back.matrix(), id.matrix()) < 1e-12);

        let real = PolyOp::identity(6, Side::REAL);
        assert!(convert_basis(&real, Basis::FallingFactorial).is_err());
    }

    proptest! {
        #[test]
        fn convert_basis_round_trip(seed in 0u64..1000) {
            // random triangular op on the lattice: round-trip through the
            // monomial basis reproduces it. Degree 5 keeps the Stirling
            // condition number low enough for a 1e-12 bound.
            let deg = 5;
            let mut rng = crate::rng::Stream::seeded(seed);
            let mut m = DMatrix::zeros(deg + 1, deg + 1);
            for j in 0..=deg {
                for i in 0..=j {
                    m[(i, j)] = rng.uniform() * 2.0 - 1.0;
                }
            }
            let op = PolyOp::new(m, Side::INT_FF, Side::INT_FF).unwrap();
            let there = convert_basis(&op, Basis::Monomial).unwrap();
            let back = convert_basis(&there, Basis::FallingFactorial).unwrap();
            prop_assert!(scaled_residual(back.matrix(), op.matrix()) < 1e-12);
        }
    }

    #[test]
    fn convert_basis_round_trip_degrades_gracefully() {
        // the conversion pair's condition number grows factorially with the
        // degree; at 10 the round trip still holds well below 1e-6
        let deg = 10;
        let mut rng = crate::rng::Stream::seeded(77);
        let mut m = DMatrix::zeros(deg + 1, deg + 1);
        for j in 0..=deg {
            for i in 0..=j {
                m[(i, j)] = rng.uniform() * 2.0 - 1.0;
            }
        }
        let op = PolyOp::new(m, Side::INT_FF, Side::INT_FF).unwrap();
        let there = convert_basis(&op, Basis::Monomial).unwrap();
        let back = convert_basis(&there, Basis::FallingFactorial).unwrap();
        assert!(scaled_residual(back.matrix(), op.matrix()) < 1e-6);
    }

    #[test]
    fn intertwining_identity_trivial_case() {
        let g = laguerre_diff(1.0, 1.0).polyop(DEG).unwrap();
        let p = semigroup_polyop(&g, 0.8).unwrap();
        let id = PolyOp::identity(DEG, Side::REAL);
        assert_eq!(check_intertwining(&p, &id, &p).unwrap(), 0.0);
        let idw = check_interweaving(&id, &id, &id).unwrap();
        assert_eq!(idw, 0.0);
    }

    /// Poisson-gamma gateway for the squared Bessel pair: the Poisson kernel
    /// intertwines the diffusion with the rate-σ birth-death chain and the
    /// kernels factorize the diffusion semigroup at warm-up time 1/σ.
    #[test]
    fn bessel_gateway_at_degree_12() {
        let (beta, sigma, t) = (1.5, 2.0, 0.6);
        let diff = GeneratorSpec::BesselDiffusion { beta }.polyop(DEG).unwrap();
        let bd = GeneratorSpec::BesselBirthDeath { beta }.polyop(DEG).unwrap().scaled(sigma);
        let p = semigroup_polyop(&diff, t).unwrap();
        let p_tilde = semigroup_polyop(&bd, t).unwrap();
        let lambda = poisson_kernel(sigma, DEG).unwrap();
        let lambda_tilde = gamma_mixture_kernel(beta, sigma, DEG).unwrap();

        let r1 = check_intertwining(&p, &lambda, &p_tilde).unwrap();
        assert!(r1 < 1e-9, "intertwining residual {r1}");

        let warm = semigroup_polyop(&diff, 1.0 / sigma).unwrap();
        let r2 = check_interweaving(&lambda, &lambda_tilde, &warm).unwrap();
        assert!(r2 < 1e-9, "interweaving residual {r2}");

        // symmetric identity on the lattice side
        let warm_tilde = semigroup_polyop(&bd, 1.0 / sigma).unwrap();
        let r3 = check_interweaving(&lambda_tilde, &lambda, &warm_tilde).unwrap();
        assert!(r3 < 1e-8, "symmetric interweaving residual {r3}");
    }

    /// Laguerre gateway: Λ_σ pairs the (β,ς) diffusion with the (β,σς)
    /// birth-death chain; with Λ̃_{β,σ+1/ς} the warm-up time is ln(1+1/(ςσ)).
    #[test]
    fn laguerre_gateway_at_degree_12() {
        let (beta, sigma, varsigma, t) = (1.0, 2.0, 0.7, 0.5);
        let diff = laguerre_diff(beta, varsigma).polyop(DEG).unwrap();
        let bd = GeneratorSpec::LaguerreBirthDeath { beta, sigma: sigma * varsigma }
            .polyop(DEG)
            .unwrap();
        let p = semigroup_polyop(&diff, t).unwrap();
        let p_tilde = semigroup_polyop(&bd, t).unwrap();
        let lambda = poisson_kernel(sigma, DEG).unwrap();
        let lambda_tilde = gamma_mixture_kernel(beta, sigma + 1.0 / varsigma, DEG).unwrap();

        let r1 = check_intertwining(&p, &lambda, &p_tilde).unwrap();
        assert!(r1 < 1e-9, "intertwining residual {r1}");

        let t0 = (1.0 + 1.0 / (varsigma * sigma)).ln();
        let warm = semigroup_polyop(&diff, t0).unwrap();
        let r2 = check_interweaving(&lambda, &lambda_tilde, &warm).unwrap();
        assert!(r2 < 1e-9, "interweaving residual {r2}");

        let warm_tilde = semigroup_polyop(&bd, t0).unwrap();
        let r3 = check_interweaving(&lambda_tilde, &lambda, &warm_tilde).unwrap();
        assert!(r3 < 1e-8, "symmetric interweaving residual {r3}");
    }

    /// Beta-multiplication factorization: Λ_{β,ε} Λ*_{β,ε} acts diagonally on
    /// the eigenbasis of the shape-(β+ε) Laguerre generator with gamma-ratio
    /// multipliers, and Λ* is the additive-gamma kernel.
    #[test]
    fn beta_gamma_factorization_multipliers() {
        let (beta, eps) = (0.5, 0.3);
        let deg = 20;
        let lam = beta_multiplication_kernel(beta, eps, deg).unwrap();
        let lam_star = gamma_shift_kernel(beta, deg).unwrap();
        let composite = lam.compose(&lam_star).unwrap();
        let gen = laguerre_diff(beta + eps, 1.0).polyop(deg).unwrap();
        let em = eigen_multipliers(&composite, &gen, &gen).unwrap();
        assert!(em.alignment < 1e-10, "alignment {}", em.alignment);
        for (n, &m) in em.multipliers.iter().enumerate() {
            let want = beta_multiplication_multiplier(beta, eps, n as f64);
            assert!(
                ((m - want) / want).abs() < 1e-10,
                "n={n}: multiplier {m} vs {want}"
            );
        }
    }

    #[test]
    fn interweaving_vs_diagonal_warm_operator() {
        // Λ Λ* equals the diagonal operator with the factorization
        // multipliers on the eigenbasis: compare (ΛΛ*)·V against V·D, which
        // is the identity right-multiplied by the (invertible) eigenvector
        // matrix and avoids its poor conditioning.
        let (beta, eps) = (1.0, 1.0);
        let deg = 15;
        let lam = beta_multiplication_kernel(beta, eps, deg).unwrap();
        let lam_star = gamma_shift_kernel(beta, deg).unwrap();
        let composite = lam.compose(&lam_star).unwrap();
        let gen = laguerre_diff(beta + eps, 1.0).polyop(deg).unwrap();
        let v = eigen_polynomials(&gen, 1e-9).unwrap();
        let mults: Vec<f64> = (0..=deg)
            .map(|n| beta_multiplication_multiplier(beta, eps, n as f64))
            .collect();
        let diag = DMatrix::from_diagonal(&DVector::from_row_slice(&mults));
        let lhs = composite.matrix() * &v;
        let rhs = &v * diag;
        let r = scaled_residual(&lhs, &rhs);
        assert!(r < 1e-10, "interweaving residual {r}");
    }

    #[test]
    fn eigen_multipliers_identity_and_errors() {
        let gen = laguerre_diff(1.0, 1.0).polyop(10).unwrap();
        let id = PolyOp::identity(10, Side::REAL);
        let em = eigen_multipliers(&id, &gen, &gen).unwrap();
        assert!(em.multipliers.iter().all(|&m| (m - 1.0).abs() < 1e-14));
        assert!(em.alignment < 1e-14);

        // Bessel generator has a fully degenerate diagonal
        let bess = GeneratorSpec::BesselDiffusion { beta: 1.0 }.polyop(10).unwrap();
        assert!(eigen_polynomials(&bess, 1e-9).is_err());
    }

    /// Chaining two beta-multiplication factorizations multiplies their
    /// gamma-ratio multipliers (warm-up times add).
    #[test]
    fn transitivity_of_factorizations() {
        let deg = 18;
        let (b1, eps) = (0.6, 0.4);
        let b2 = 0.9;
        // relation 1 links shapes (b1+eps, eps); relation 2 links (b2+b1+eps, b1+eps)
        let lam1 = beta_multiplication_kernel(b1, eps, deg).unwrap();
        let lam2 = beta_multiplication_kernel(b2, b1 + eps, deg).unwrap();
        let star1 = gamma_shift_kernel(b1, deg).unwrap();
        let star2 = gamma_shift_kernel(b2, deg).unwrap();
        let composite = lam2
            .compose(&lam1)
            .unwrap()
            .compose(&star1)
            .unwrap()
            .compose(&star2)
            .unwrap();
        let gen = laguerre_diff(b2 + b1 + eps, 1.0).polyop(deg).unwrap();
        let em = eigen_multipliers(&composite, &gen, &gen).unwrap();
        assert!(em.alignment < 1e-9);
        for (n, &m) in em.multipliers.iter().enumerate() {
            let want = beta_multiplication_multiplier(b1, eps, n as f64)
                * beta_multiplication_multiplier(b2, b1 + eps, n as f64);
            assert!(((m - want) / want).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn similarity_preserves_spectrum_and_dilates_rates() {
        let deg = 10;
        let p = semigroup_polyop(&laguerre_diff(1.2, 1.0).polyop(deg).unwrap(), 0.7).unwrap();

        // identity conjugation
        let id = PolyOp::identity(deg, Side::REAL);
        let same = similarity_transform(&p, &id).unwrap();
        assert!(scaled_residual(same.matrix(), p.matrix()) < 1e-14);

        // conjugating by the dilation x ↦ x/ς maps the rate-1 semigroup onto
        // the rate-ς one (a change of variables in the generator)
        let sigma = 0.6;
        let m = dilation(1.0 / sigma, deg, Side::REAL).unwrap();
        let conj = similarity_transform(&p, &m).unwrap();
        let scaled = semigroup_polyop(&laguerre_diff(1.2, sigma).polyop(deg).unwrap(), 0.7)
            .unwrap();
        assert!(scaled_residual(conj.matrix(), scaled.matrix()) < 1e-12);

        // random triangular invertible conjugation preserves eigen-multipliers
        let mut rng = crate::rng::Stream::seeded(5);
        let mut mm = DMatrix::identity(deg + 1, deg + 1);
        for j in 0..=deg {
            for i in 0..j {
                mm[(i, j)] = rng.uniform() - 0.5;
            }
        }
        let m2 = PolyOp::new(mm, Side::REAL, Side::REAL).unwrap();
        let conj2 = similarity_transform(&p, &m2).unwrap();
        for k in 0..=deg {
            assert!((conj2.matrix()[(k, k)] - p.matrix()[(k, k)]).abs() < 1e-10);
        }
    }

    /// Deterministic subordination consistency: exponentiating the Bernstein
    /// exponent of the factorization multipliers at t = 1 returns them.
    #[test]
    fn bernstein_exponent_round_trip() {
        let (beta, eps) = (0.8, 0.5);
        for n in 0..=20u32 {
            let f = beta_multiplication_multiplier(beta, eps, f64::from(n));
            let phi = -f.ln();
            assert!(((-phi).exp() - f).abs() < 1e-12 * f);
        }
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let p = PolyOp::identity(2, Side::REAL);
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].contains("degree=2"));
        assert!(lines[1].starts_with("col0,"));
    }
}
