//! Affine-Gaussian kernel calculus for Ornstein-Uhlenbeck semigroups.
//!
//! An [`AffineGaussianKernel`] is the map `x ↦ Normal(Mx + c, Σ)`. The class
//! is closed under composition, contains every OU transition kernel, and is
//! rigid enough that a factorization `Λ Λ̃ = P_t` determines `Λ̃` uniquely
//! once `Λ` is fixed — which is how the right factor is recovered here.
//!
//! The OU semigroup associated to a pair `(Γ, B)` (diffusion matrix `Γ`,
//! drift matrix `B` with spectrum in the right half-plane) has transitions
//! `x ↦ Normal(e^{-tB} x, Γ_t)` with `Γ_t = ∫_0^t e^{-sB} Γ e^{-sB^T} ds`.
//! Degenerate `Γ` is allowed as long as `Γ_t` is non-singular for `t > 0`
//! (hypoellipticity).

use crate::error::{require_nonneg, Error, Result};
use crate::linalg::{
    expm, max_abs, min_symmetric_eigenvalue, real_eigen, solve_lyapunov, spd_condition_number,
    spsd_sqrt, symmetric_eigenvalues,
};
use crate::rng::Stream;
use crate::stats::mean_and_se;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

const SYM_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-9;

/// `x ↦ Normal(Mx + c, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGaussianKernel {
    pub m: DMatrix<f64>,
    pub c: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl AffineGaussianKernel {
    pub fn new(m: DMatrix<f64>, c: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d || c.len() != d || sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::Dimension("affine-Gaussian kernel pieces disagree in size".into()));
        }
        let asym = max_abs(&(&sigma - sigma.transpose()));
        if asym > SYM_TOL * max_abs(&sigma).max(1.0) {
            return Err(Error::domain(format!("Σ must be symmetric; asymmetry {asym}")));
        }
        let sym = (&sigma + sigma.transpose()) * 0.5;
        let min_eig = min_symmetric_eigenvalue(&sym);
        if min_eig < PSD_TOL * max_abs(&sym).max(1.0) {
            return Err(Error::domain(format!(
                "Σ must be positive semi-definite; min eigenvalue {min_eig}"
            )));
        }
        Ok(AffineGaussianKernel { m, c, sigma: sym })
    }

    /// The no-motion kernel.
    pub fn identity(d: usize) -> Self {
        AffineGaussianKernel {
            m: DMatrix::identity(d, d),
            c: DVector::zeros(d),
            sigma: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// One transition from `x`.
    pub fn sample(&self, x: &DVector<f64>, rng: &mut Stream) -> Result<DVector<f64>> {
        let root = spsd_sqrt(&self.sigma)?;
        let z = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        Ok(&self.m * x + &self.c + root * z)
    }

    /// Largest componentwise deviation between two kernels, each piece
    /// normalized by its own magnitude (clamped at 1): covariances can carry
    /// entries of size `e^{b·warmup}`, where an absolute comparison would
    /// only measure representation noise.
    pub fn distance(&self, other: &AffineGaussianKernel) -> f64 {
        let rel = |diff: f64, a: f64, b: f64| diff / a.max(b).max(1.0);
        let dm = rel(max_abs(&(&self.m - &other.m)), max_abs(&self.m), max_abs(&other.m));
        let ds = rel(
            max_abs(&(&self.sigma - &other.sigma)),
            max_abs(&self.sigma),
            max_abs(&other.sigma),
        );
        let dc = rel(
            (&self.c - &other.c).abs().max(),
            self.c.abs().max(),
            other.c.abs().max(),
        );
        dm.max(ds).max(dc)
    }
}

/// Kernel of "first `k1`, then `k2`".
pub fn compose(
    k1: &AffineGaussianKernel,
    k2: &AffineGaussianKernel,
) -> Result<AffineGaussianKernel> {
    if k1.dim() != k2.dim() {
        return Err(Error::Dimension(format!(
            "compose: dimensions {} vs {}",
            k1.dim(),
            k2.dim()
        )));
    }
    let m = &k2.m * &k1.m;
    let c = &k2.m * &k1.c + &k2.c;
    let sigma = &k2.m * &k1.sigma * k2.m.transpose() + &k2.sigma;
    AffineGaussianKernel::new(m, c, sigma)
}

/// Recovers the unique affine-Gaussian `K̃` with `compose(K_left, K̃) =
/// K_target` (the order matching `Λ Λ̃ = P_t`). Errors when the resulting
/// noise covariance fails to be positive semi-definite within `-1e-9`, which
/// signals a warm-up time too small for the factorization.
pub fn solve_right_factor(
    target: &AffineGaussianKernel,
    left: &AffineGaussianKernel,
) -> Result<AffineGaussianKernel> {
    if target.dim() != left.dim() {
        return Err(Error::Dimension("solve_right_factor: dimension mismatch".into()));
    }
    let inv = left
        .m
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("left kernel has a singular linear part".into()))?;
    let m = &target.m * inv;
    let c = &target.c - &m * &left.c;
    let sigma_raw = &target.sigma - &m * &left.sigma * m.transpose();
    let sym = (&sigma_raw + sigma_raw.transpose()) * 0.5;
    let min_eig = min_symmetric_eigenvalue(&sym);
    if min_eig < PSD_TOL * max_abs(&sym).max(1.0) {
        return Err(Error::Infeasible(format!(
            "right factor needs indefinite noise (min eigenvalue {min_eig}); \
             warm-up time too small"
        )));
    }
    // clamp the roundoff-negative part so downstream sampling stays valid
    let eig = sym.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    let q = &eig.eigenvectors;
    let sigma = q * DMatrix::from_diagonal(&vals) * q.transpose();
    AffineGaussianKernel::new(m, c, sigma)
}

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck models
// ---------------------------------------------------------------------------

/// An OU pair `(Γ, B)` with stable drift and hypoelliptic noise.
#[derive(Debug, Clone, PartialEq)]
pub struct OUModel {
    b: DMatrix<f64>,
    gamma: DMatrix<f64>,
}

impl OUModel {
    pub fn new(b: DMatrix<f64>, gamma: DMatrix<f64>) -> Result<Self> {
        let d = b.nrows();
        if b.ncols() != d || gamma.nrows() != d || gamma.ncols() != d {
            return Err(Error::Dimension("OU model matrices must be square, same size".into()));
        }
        let asym = max_abs(&(&gamma - gamma.transpose()));
        if asym > SYM_TOL * max_abs(&gamma).max(1.0) {
            return Err(Error::domain("Γ must be symmetric"));
        }
        if min_symmetric_eigenvalue(&gamma) < PSD_TOL * max_abs(&gamma).max(1.0) {
            return Err(Error::domain("Γ must be positive semi-definite"));
        }
        for ev in b.clone().complex_eigenvalues().iter() {
            if ev.re <= 0.0 {
                return Err(Error::domain(format!(
                    "drift spectrum must lie in the open right half-plane, found {} + {}i",
                    ev.re, ev.im
                )));
            }
        }
        let model = OUModel { b, gamma };
        model.check_hypoelliptic()?;
        Ok(model)
    }

    /// Kinetic 2-d example: position/velocity pair in a quadratic potential
    /// with noise acting on the velocity only. Drift eigenvalues `1 ∓ 1/√2`,
    /// stationary covariance `diag(1/2, 1/4)`.
    pub fn kinetic() -> Self {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.5, 2.0]);
        let gamma = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        OUModel::new(b, gamma).expect("the kinetic pair is a valid model")
    }

    /// Diagonal self-adjoint model with diffusion `diag(g)` and drift
    /// `diag(b)`.
    pub fn diagonal(g: &[f64], b: &[f64]) -> Result<Self> {
        if g.len() != b.len() {
            return Err(Error::Dimension("diagonal model needs equal-length vectors".into()));
        }
        OUModel::new(
            DMatrix::from_diagonal(&DVector::from_row_slice(b)),
            DMatrix::from_diagonal(&DVector::from_row_slice(g)),
        )
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// Kalman-style rank condition plus a determinant scan of `Γ_t`.
    fn check_hypoelliptic(&self) -> Result<()> {
        let d = self.dim();
        let root = spsd_sqrt(&self.gamma)?;
        let mut blocks = DMatrix::zeros(d, d * d);
        let mut cur = root.clone();
        for k in 0..d {
            blocks.view_mut((0, k * d), (d, d)).copy_from(&cur);
            cur = &self.b * cur;
        }
        let rank = blocks.svd(false, false).rank(1e-10);
        if rank < d {
            return Err(Error::domain(format!(
                "noise does not spread to the whole space (controllability rank {rank} < {d})"
            )));
        }
        for &t in &[1e-3, 1e-2, 1e-1, 1.0] {
            let gt = self.covariance_at(t)?;
            let det = gt.determinant();
            if det <= 1e-14 * max_abs(&gt).powi(d as i32).max(1e-300) {
                return Err(Error::domain(format!("Γ_t singular at t = {t} (det {det})")));
            }
        }
        Ok(())
    }

    /// Stationary covariance: solves `B Γ_∞ + Γ_∞ Bᵀ = Γ`.
    pub fn gamma_infinity(&self) -> Result<DMatrix<f64>> {
        gamma_infinity(&self.b, &self.gamma)
    }

    /// Time-`t` covariance by adaptive Runge-Kutta integration of
    /// `dΓ_t/dt = Γ - B Γ_t - Γ_t Bᵀ` from `Γ_0 = 0`.
    pub fn covariance_at(&self, t: f64) -> Result<DMatrix<f64>> {
        require_nonneg("time t", t)?;
        let d = self.dim();
        if t == 0.0 {
            return Ok(DMatrix::zeros(d, d));
        }
        let deriv = |g: &DMatrix<f64>| &self.gamma - &self.b * g - g * self.b.transpose();
        Ok(integrate_matrix_ode(deriv, DMatrix::zeros(d, d), t, 1e-11))
    }

    /// Closed form `Γ_t = Γ_∞ - e^{-tB} Γ_∞ e^{-tBᵀ}`; used as a cross-check
    /// of the integrator and in hot loops.
    pub fn covariance_at_closed(&self, t: f64) -> Result<DMatrix<f64>> {
        let ginf = self.gamma_infinity()?;
        let decay = expm(&(&self.b * -t));
        Ok(&ginf - &decay * &ginf * decay.transpose())
    }

    /// Transition kernel at time `t`.
    pub fn kernel(&self, t: f64) -> Result<AffineGaussianKernel> {
        let m = expm(&(&self.b * -t));
        let sigma = self.covariance_at(t)?;
        AffineGaussianKernel::new(m, DVector::zeros(self.dim()), sigma)
    }

    /// Same kernel via the stationary-covariance closed form.
    pub fn kernel_closed(&self, t: f64) -> Result<AffineGaussianKernel> {
        let m = expm(&(&self.b * -t));
        let sigma = self.covariance_at_closed(t)?;
        AffineGaussianKernel::new(m, DVector::zeros(self.dim()), sigma)
    }
}

/// Stationary covariance of the OU pair `(Γ, B)` (standalone version).
pub fn gamma_infinity(b: &DMatrix<f64>, gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    for ev in b.clone().complex_eigenvalues().iter() {
        if ev.re <= 0.0 {
            return Err(Error::domain(
                "stationary covariance needs a stable drift (spectrum in the right half-plane)",
            ));
        }
    }
    solve_lyapunov(b, gamma)
}

/// Adaptive RK45 (Dormand-Prince) for matrix-valued ODEs.
fn integrate_matrix_ode(
    deriv: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
    mut y: DMatrix<f64>,
    t_end: f64,
    tol: f64,
) -> DMatrix<f64> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] =
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut t = 0.0;
    let mut h = (t_end / 16.0).min(0.1).max(1e-6);
    while t < t_end {
        h = h.min(t_end - t);
        let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
        k.push(deriv(&y));
        for stage in 0..6 {
            let mut arg = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let coeff = A[stage][j];
                if coeff != 0.0 {
                    arg += kj * (coeff * h);
                }
            }
            k.push(deriv(&arg));
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                y5 += kj * (B5[j] * h);
            }
            if B4[j] != 0.0 {
                y4 += kj * (B4[j] * h);
            }
        }
        let err = max_abs(&(&y5 - &y4));
        let scale = tol * max_abs(&y5).max(1.0);
        if err <= scale {
            t += h;
            y = y5;
        }
        let ratio = if err > 0.0 { (scale / err).powf(0.2) } else { 4.0 };
        h *= (0.9 * ratio).clamp(0.2, 4.0);
    }
    y
}

// ---------------------------------------------------------------------------
// Diagonal comparison semigroup and its intertwining kernel
// ---------------------------------------------------------------------------

/// Output of the diagonal-comparison construction: a self-adjoint diagonal OU
/// model `P̃`, a Gaussian kernel `Λ` intertwining `P` with it, and the
/// deterministic warm-up time at which `Λ Λ̃ = P_t` becomes feasible.
#[derive(Debug, Clone)]
pub struct DiagonalComparison {
    /// Rows diagonalize the drift: `V B V⁻¹ = diag(b)`.
    pub v: DMatrix<f64>,
    /// Drift eigenvalues, ascending.
    pub b: Vec<f64>,
    /// Stationary variances of the comparison semigroup.
    pub alpha: Vec<f64>,
    /// `(1/b_min) ln κ(V Γ_∞ Vᵀ)`.
    pub warmup: f64,
    /// Condition number `κ(V Γ_∞ Vᵀ)`.
    pub kappa: f64,
    /// The intertwining kernel `x ↦ Normal(Vx, D_α - V Γ_∞ Vᵀ)`.
    pub lambda: AffineGaussianKernel,
    /// The diagonal self-adjoint model `(diag(2 α b), diag(b))`, whose
    /// stationary covariance is exactly `diag(α)`.
    pub comparison: OUModel,
}

/// Builds the diagonal comparison for a model with diagonalizable drift and
/// real positive spectrum.
///
/// With `G = V Γ_∞ Vᵀ`, `κ = κ(G)` and `b_min` the smallest drift
/// eigenvalue, the stationary variances are
/// `α_i = γ_min(G) · exp((b_i / b_min) ln κ)`. This makes `D_α ⪰ G` (so `Λ`
/// is a genuine Gaussian kernel) and `D_α e^{-2 b · warmup} ⪯ G` (so the
/// right factor exists at the warm-up time); the intertwining
/// `P_t Λ = Λ P̃_t` then holds identically in `t`.
pub fn diagonal_comparison(model: &OUModel) -> Result<DiagonalComparison> {
    let (b_vals, right_vecs) = real_eigen(model.drift(), 1e-9)?;
    let v = right_vecs
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("eigenvector matrix is singular".into()))?;
    let ginf = model.gamma_infinity()?;
    let g = &v * &ginf * v.transpose();
    let kappa = spd_condition_number(&g)?;
    let eigs = symmetric_eigenvalues(&g);
    let gamma_min = eigs[0];
    let b_min = b_vals[0];
    let warmup = kappa.ln() / b_min;
    let alpha: Vec<f64> =
        b_vals.iter().map(|&bi| gamma_min * ((bi / b_min) * kappa.ln()).exp()).collect();

    let d = model.dim();
    let d_alpha = DMatrix::from_diagonal(&DVector::from_row_slice(&alpha));
    let sigma_lambda = &d_alpha - &g;
    let lambda = AffineGaussianKernel::new(v.clone(), DVector::zeros(d), sigma_lambda)?;

    let two_ab: Vec<f64> = alpha.iter().zip(&b_vals).map(|(&a, &b)| 2.0 * a * b).collect();
    let comparison = OUModel::diagonal(&two_ab, &b_vals)?;

    Ok(DiagonalComparison { v, b: b_vals, alpha, warmup, kappa, lambda, comparison })
}

impl DiagonalComparison {
    /// Componentwise residual of `P_t Λ = Λ P̃_t`.
    pub fn intertwining_residual(&self, model: &OUModel, t: f64) -> Result<f64> {
        let lhs = compose(&model.kernel(t)?, &self.lambda)?;
        let rhs = compose(&self.lambda, &self.comparison.kernel(t)?)?;
        Ok(lhs.distance(&rhs))
    }

    /// Recovers `Λ̃` from `Λ Λ̃ = P_warmup`.
    pub fn right_factor(&self, model: &OUModel) -> Result<AffineGaussianKernel> {
        solve_right_factor(&model.kernel(self.warmup)?, &self.lambda)
    }

    /// Smallest `t` (within `tol`) at which the right factor exists, found by
    /// bisection against the construction's own warm-up time.
    pub fn smallest_feasible_warmup(&self, model: &OUModel, tol: f64) -> Result<f64> {
        let feasible = |t: f64| -> bool {
            model.kernel_closed(t).and_then(|k| solve_right_factor(&k, &self.lambda)).is_ok()
        };
        if !feasible(self.warmup) {
            return Err(Error::Infeasible(
                "factorization infeasible even at the nominal warm-up time".into(),
            ));
        }
        if feasible(0.0) {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0, self.warmup);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

// ---------------------------------------------------------------------------
// Gaussian distributions, total variation, variance of quadratics
// ---------------------------------------------------------------------------

/// A non-degenerate Gaussian distribution with cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct GaussianDist {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianDist {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Dimension("gaussian mean/covariance size mismatch".into()));
        }
        let sym = (&cov + cov.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("covariance is not positive definite".into()))?;
        let l = chol.l();
        let log_det = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(GaussianDist { mean, cov: sym, chol: l, log_norm })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_pdf(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let z = self.chol.solve_lower_triangular(&diff).expect("cholesky factor is regular");
        self.log_norm - 0.5 * z.norm_squared()
    }

    pub fn sample(&self, rng: &mut Stream) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        &self.mean + &self.chol * z
    }
}

/// Importance-sampled total variation with standard error, using log-density
/// differences throughout.
///
/// Estimates `E_p (1 - q(X)/p(X))₊`, which equals `½ E_p |1 - q/p|` (both
/// are `∫(p-q)₊ = ‖p-q‖_tv`) but stays bounded in `[0,1]` per sample: the
/// `|·|` form has unbounded variance when the measures are nearly singular,
/// exactly the regime cut-off profiles live in.
pub fn tv_gaussian_mc(
    p: &GaussianDist,
    q: &GaussianDist,
    nsamples: usize,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension("total variation of different dimensions".into()));
    }
    if nsamples == 0 {
        return Err(Error::domain("tv_gaussian_mc needs samples"));
    }
    let mut vals = Vec::with_capacity(nsamples);
    for _ in 0..nsamples {
        let x = p.sample(rng);
        let log_ratio = q.log_pdf(&x) - p.log_pdf(&x);
        vals.push((1.0 - log_ratio.exp()).max(0.0));
    }
    Ok(mean_and_se(&vals))
}

/// Centered quadratic observable `f(x) = xᵀ A x + cᵀ x` (centering constants
/// do not affect variances).
#[derive(Debug, Clone)]
pub struct QuadraticObservable {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl QuadraticObservable {
    /// Variance under `Normal(0, cov)`: `2 tr((A cov)²) + cᵀ cov c`.
    pub fn variance(&self, cov: &DMatrix<f64>) -> f64 {
        let ac = &self.a * cov;
        let tr2 = (&ac * &ac).trace();
        2.0 * tr2 + (self.c.transpose() * cov * &self.c)[(0, 0)]
    }

    /// Pushforward under the OU transition at time `t`: quadratic part
    /// `MᵀAM`, linear part `Mᵀc` with `M = e^{-tB}`.
    pub fn evolve(&self, model: &OUModel, t: f64) -> QuadraticObservable {
        let m = expm(&(model.drift() * -t));
        QuadraticObservable { a: m.transpose() * &self.a * &m, c: m.transpose() * &self.c }
    }
}

// ---------------------------------------------------------------------------
// CSV matrix interchange
// ---------------------------------------------------------------------------

/// RFC-4180-style matrix dump with a header row `c0,c1,...`.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("c{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a matrix from CSV with a mandatory header row.
pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue; // header
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::domain(format!("line {}: bad number {tok:?}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Dimension(format!("ragged csv at line {}", lineno + 1)));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::domain("csv contains no data rows"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}
