//! Runnable semigroups: finite-state distribution evolution, truncated
//! birth-death chains, exact diffusion transition sampling, Gillespie path
//! simulation, subordination, and the interweaving-based sampler for the
//! Laguerre diffusion.

use crate::error::{require_nonneg, require_positive, Error, Result};
use crate::rng::Stream;
use crate::special::{log_gamma_unchecked, sample_gamma, sample_poisson};
use crate::warmup::WarmupLaw;
use nalgebra::DMatrix;

/// A finite probability vector over `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("a measure needs at least one state"));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::domain("measure weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("measure mass {total} is not 1")));
        }
        Ok(DiscreteMeasure { weights })
    }

    /// Normalizes an arbitrary non-negative vector.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::domain(format!("cannot normalize mass {total}")));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(DiscreteMeasure { weights })
    }

    /// Point mass at `state`.
    pub fn dirac(state: usize, len: usize) -> Result<Self> {
        if state >= len {
            return Err(Error::domain(format!("dirac state {state} outside 0..{len}")));
        }
        let mut weights = vec![0.0; len];
        weights[state] = 1.0;
        Ok(DiscreteMeasure { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `Σ f(i) m(i)`.
    pub fn expect(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().enumerate().map(|(i, &w)| w * f(i)).sum()
    }
}

/// A truncated continuous-time Markov generator with its invariant measure.
#[derive(Debug, Clone)]
pub struct FiniteSemigroup {
    q: DMatrix<f64>,
    nu: DiscreteMeasure,
    mass_defect: f64,
    /// `(birth, death)` bands when the generator is a birth-death chain.
    bands: Option<(Vec<f64>, Vec<f64>)>,
}

impl FiniteSemigroup {
    /// Wraps a general generator matrix (rows sum to zero, off-diagonals
    /// non-negative) with a given invariant measure.
    pub fn new(q: DMatrix<f64>, nu: DiscreteMeasure, mass_defect: f64) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n || nu.len() != n {
            return Err(Error::Dimension("generator and measure sizes disagree".into()));
        }
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                if i != j && q[(i, j)] < 0.0 {
                    return Err(Error::domain(format!(
                        "off-diagonal rate q[{i},{j}] = {} is negative",
                        q[(i, j)]
                    )));
                }
                row += q[(i, j)];
            }
            if row.abs() > 1e-12 * q.row(i).amax().max(1.0) {
                return Err(Error::domain(format!("row {i} of the generator sums to {row}")));
            }
        }
        Ok(FiniteSemigroup { q, nu, mass_defect, bands: None })
    }

    /// Truncation of the lattice Laguerre chain: birth rates `σ(n+β)`
    /// (zeroed at the cap, reflecting), death rates `(σ+1) n`. The invariant
    /// measure is the negative-binomial restricted to `0..=cap` and
    /// renormalized; the mass cut away is reported as `mass_defect`.
    pub fn laguerre_birth_death(beta: f64, sigma: f64, cap: usize) -> Result<Self> {
        require_positive("chain β", beta)?;
        require_positive("chain σ", sigma)?;
        if cap < 10 {
            return Err(Error::domain("truncation cap must be at least 10"));
        }
        let n = cap + 1;
        let birth: Vec<f64> =
            (0..n).map(|k| if k == cap { 0.0 } else { sigma * (k as f64 + beta) }).collect();
        let death: Vec<f64> = (0..n).map(|k| (sigma + 1.0) * k as f64).collect();

        // negative-binomial weights in log space
        let lg_beta = log_gamma_unchecked(beta);
        let log_ratio = (sigma / (sigma + 1.0)).ln();
        let log_norm = -beta * (1.0 + sigma).ln();
        let log_w: Vec<f64> = (0..n)
            .map(|k| {
                let kf = k as f64;
                log_norm + kf * log_ratio + log_gamma_unchecked(kf + beta)
                    - lg_beta
                    - log_gamma_unchecked(kf + 1.0)
            })
            .collect();
        let kept: f64 = log_w.iter().map(|&lw| lw.exp()).sum();
        let mass_defect = (1.0 - kept).max(0.0);
        let nu = DiscreteMeasure::normalized(log_w.iter().map(|&lw| lw.exp()).collect())?;

        let mut q = DMatrix::zeros(n, n);
        for k in 0..n {
            if k + 1 < n {
                q[(k, k + 1)] = birth[k];
            }
            if k > 0 {
                q[(k, k - 1)] = death[k];
            }
            q[(k, k)] = -(birth[k] + death[k]);
        }
        Ok(FiniteSemigroup { q, nu, mass_defect, bands: Some((birth, death)) })
    }

    /// The two-state generator `λ(μ - Id)`.
    pub fn two_point(model: &crate::kernels::TwoPointModel) -> Self {
        let g = model.generator();
        let q = DMatrix::from_row_slice(2, 2, &[g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]]);
        let nu = DiscreteMeasure::new(vec![model.mu.p0, model.mu.p1]).expect("valid pair");
        FiniteSemigroup { q, nu, mass_defect: 0.0, bands: None }
    }

    pub fn len(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn invariant(&self) -> &DiscreteMeasure {
        &self.nu
    }

    pub fn mass_defect(&self) -> f64 {
        self.mass_defect
    }

    /// Largest total jump rate, the uniformization constant.
    fn max_rate(&self) -> f64 {
        (0..self.len()).map(|i| -self.q[(i, i)]).fold(0.0f64, f64::max)
    }

    /// `v ↦ v P` for the uniformized kernel `P = I + Q/Λ` (measure side).
    fn step_measure(&self, v: &[f64], rate: f64, out: &mut [f64]) {
        let n = self.len();
        match &self.bands {
            Some((birth, death)) => {
                for (j, o) in out.iter_mut().enumerate() {
                    let stay = v[j] * (1.0 - (birth[j] + death[j]) / rate);
                    let from_left = if j > 0 { v[j - 1] * birth[j - 1] / rate } else { 0.0 };
                    let from_right =
                        if j + 1 < n { v[j + 1] * death[j + 1] / rate } else { 0.0 };
                    *o = stay + from_left + from_right;
                }
            }
            None => {
                for (j, o) in out.iter_mut().enumerate() {
                    let mut acc = v[j];
                    for i in 0..n {
                        acc += v[i] * self.q[(i, j)] / rate;
                    }
                    *o = acc;
                }
            }
        }
    }

    /// `f ↦ P f` for the uniformized kernel (function side).
    fn step_function(&self, f: &[f64], rate: f64, out: &mut [f64]) {
        let n = self.len();
        match &self.bands {
            Some((birth, death)) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let up = if i + 1 < n { birth[i] * (f[i + 1] - f[i]) } else { 0.0 };
                    let down = if i > 0 { death[i] * (f[i - 1] - f[i]) } else { 0.0 };
                    *o = f[i] + (up + down) / rate;
                }
            }
            None => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = f[i];
                    for j in 0..n {
                        acc += self.q[(i, j)] * f[j] / rate;
                    }
                    *o = acc;
                }
            }
        }
    }

    /// Poisson-weighted accumulation `Σ_k w_k(Λt) vₖ` shared by both sides.
    fn uniformize(&self, start: Vec<f64>, t: f64, measure_side: bool) -> Vec<f64> {
        let n = start.len();
        let rate = self.max_rate().max(1e-12);
        let lt = rate * t;
        let kmax = (lt + 12.0 * lt.sqrt() + 60.0).ceil() as usize;
        let mut acc = vec![0.0; n];
        let mut cur = start;
        let mut next = vec![0.0; n];
        let mut log_w = -lt; // ln of the Poisson(Λt) mass at 0
        let mut cum = 0.0;
        for k in 0..=kmax {
            let w = log_w.exp();
            if w > 0.0 {
                for (a, &c) in acc.iter_mut().zip(&cur) {
                    *a += w * c;
                }
                cum += w;
                if 1.0 - cum < 1e-14 {
                    break;
                }
            }
            if measure_side {
                self.step_measure(&cur, rate, &mut next);
            } else {
                self.step_function(&cur, rate, &mut next);
            }
            std::mem::swap(&mut cur, &mut next);
            log_w += (lt / (k as f64 + 1.0)).ln();
        }
        acc
    }

    /// `m₀ exp(tQ)`, renormalized.
    pub fn evolve(&self, m0: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
        require_nonneg("time t", t)?;
        if m0.len() != self.len() {
            return Err(Error::Dimension("measure does not match the chain".into()));
        }
        if t == 0.0 {
            return Ok(m0.clone());
        }
        let acc = self.uniformize(m0.weights().to_vec(), t, true);
        DiscreteMeasure::normalized(acc.iter().map(|&w| w.max(0.0)).collect())
    }

    /// `exp(tQ) f` acting on a function.
    pub fn apply_to_function(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        require_nonneg("time t", t)?;
        if f.len() != self.len() {
            return Err(Error::Dimension("function does not match the chain".into()));
        }
        if t == 0.0 {
            return Ok(f.to_vec());
        }
        Ok(self.uniformize(f.to_vec(), t, false))
    }
}

// ---------------------------------------------------------------------------
// Exact samplers
// ---------------------------------------------------------------------------

/// One exact draw of the Laguerre diffusion (`ς x f'' + (ςβ - x) f'`) at
/// time `t` started from `x`, via the Poisson-gamma mixture
/// `N ~ Poisson(x e^{-t} / (ς(1-e^{-t})))`, `X ~ Gamma(β + N, ς(1-e^{-t}))`.
///
/// The mixture is validated against the polynomial semigroup moments (orders
/// up to four, several parameter sets) in this module's tests before any
/// downstream use as an oracle.
pub fn exact_laguerre_transition(
    beta: f64,
    varsigma: f64,
    t: f64,
    x: f64,
    rng: &mut Stream,
) -> Result<f64> {
    require_positive("β", beta)?;
    require_positive("ς", varsigma)?;
    require_positive("t", t)?;
    require_nonneg("x", x)?;
    let decay = (-t).exp();
    let spread = varsigma * (1.0 - decay);
    let pois_mean = x * decay / spread;
    let n = sample_poisson(pois_mean, rng);
    Ok(sample_gamma(beta + n, spread, rng))
}

/// Final state and event count of a Gillespie path of the lattice Laguerre
/// chain (birth `σ(n+β)`, death `(σ+1) n`) run to time `t` from `n0`.
pub fn gillespie_birth_death_detailed(
    beta: f64,
    sigma: f64,
    t: f64,
    n0: u64,
    rng: &mut Stream,
) -> Result<(u64, u64)> {
    require_positive("β", beta)?;
    require_positive("σ", sigma)?;
    require_nonneg("t", t)?;
    let mut state = n0;
    let mut clock = 0.0;
    let mut events = 0u64;
    loop {
        let birth = sigma * (state as f64 + beta);
        let death = (sigma + 1.0) * state as f64;
        let total = birth + death;
        clock += rng.exponential() / total;
        if clock > t {
            return Ok((state, events));
        }
        events += 1;
        if rng.uniform() * total < birth {
            state += 1;
        } else {
            state -= 1;
        }
    }
}

/// Final state of the Gillespie path.
pub fn gillespie_birth_death(
    beta: f64,
    sigma: f64,
    t: f64,
    n0: u64,
    rng: &mut Stream,
) -> Result<u64> {
    gillespie_birth_death_detailed(beta, sigma, t, n0, rng).map(|(s, _)| s)
}

/// Samples the Laguerre diffusion at time `ln(1 + 1/(ςσ)) + t` from `x` by
/// routing through the lattice chain:
///
/// 1. `n₀ ~ Poisson(σx)`;
/// 2. run the `(β, σς)` birth-death chain for time `t` from `n₀`;
/// 3. return `Gamma(n_t + β, scale 1/(ς⁻¹ + σ))`.
pub fn intertwined_laguerre_sampler(
    beta: f64,
    varsigma: f64,
    sigma: f64,
    t: f64,
    x: f64,
    rng: &mut Stream,
) -> Result<f64> {
    require_positive("β", beta)?;
    require_positive("ς", varsigma)?;
    require_positive("σ", sigma)?;
    require_nonneg("t", t)?;
    require_nonneg("x", x)?;
    let n0 = sample_poisson(sigma * x, rng) as u64;
    let nt = if t > 0.0 {
        gillespie_birth_death(beta, sigma * varsigma, t, n0, rng)?
    } else {
        n0
    };
    Ok(sample_gamma(nt as f64 + beta, 1.0 / (1.0 / varsigma + sigma), rng))
}

/// Multipliers `e^{-t φ(λ_n)}` of the semigroup subordinated by the law's
/// convolution stream, evaluated on a list of generator eigenvalues. At
/// `t = 1` this is the law's Laplace transform at each eigenvalue.
pub fn subordinate_multipliers(
    eigenvalues: &[f64],
    law: &WarmupLaw,
    t: f64,
) -> Result<Vec<f64>> {
    require_nonneg("subordination time t", t)?;
    eigenvalues
        .iter()
        .map(|&lam| {
            require_nonneg("eigenvalue", lam)?;
            Ok((-t * law.bernstein_exponent(lam)?).exp())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::TwoPointModel;
    use crate::linalg::expm;
    use crate::polyop::{semigroup_polyop, GeneratorSpec};
    use crate::rng::Stream;
    use crate::stats::{ks_two_sample, mean_and_se, transformed_mean_and_se};

    #[test]
    fn truncated_chain_detailed_balance() {
        let (beta, sigma, cap) = (1.7, 0.6, 60);
        let sg = FiniteSemigroup::laguerre_birth_death(beta, sigma, cap).unwrap();
        let nu = sg.invariant();
        for n in 0..cap {
            let lhs = nu.weight(n) * sigma * (n as f64 + beta);
            let rhs = nu.weight(n + 1) * (sigma + 1.0) * (n as f64 + 1.0);
            assert!(
                ((lhs - rhs) / lhs).abs() < 1e-12,
                "detailed balance fails at {n}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn geometric_invariant_for_unit_parameters() {
        let sg = FiniteSemigroup::laguerre_birth_death(1.0, 1.0, 80).unwrap();
        let nu = sg.invariant();
        for n in 0..10 {
            let want = 2.0f64.powi(-(n as i32) - 1);
            assert!(((nu.weight(n) - want) / want).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn mass_defect_is_tiny_at_cap_200() {
        let sg = FiniteSemigroup::laguerre_birth_death(1.0, 1.0, 200).unwrap();
        assert!(sg.mass_defect() < 1e-10, "defect {}", sg.mass_defect());
    }

    #[test]
    fn invariant_measure_is_stationary() {
        let sg = FiniteSemigroup::laguerre_birth_death(2.0, 0.8, 100).unwrap();
        // ν Q = 0
        let n = sg.len();
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += sg.invariant().weight(i) * sg.generator()[(i, j)];
            }
            assert!(acc.abs() < 1e-10, "νQ component {j} = {acc}");
        }
        // evolving ν returns ν
        let evolved = sg.evolve(sg.invariant(), 2.5).unwrap();
        for i in 0..n {
            assert!((evolved.weight(i) - sg.invariant().weight(i)).abs() < 1e-10);
        }
    }

    #[test]
    fn evolve_at_time_zero_is_identity() {
        let sg = FiniteSemigroup::laguerre_birth_death(1.0, 1.0, 40).unwrap();
        let m0 = DiscreteMeasure::dirac(3, sg.len()).unwrap();
        assert_eq!(sg.evolve(&m0, 0.0).unwrap(), m0);
    }

    #[test]
    fn two_point_evolution_closed_form() {
        let model = TwoPointModel::new(1.3, 0.35).unwrap();
        let sg = FiniteSemigroup::two_point(&model);
        let m0 = DiscreteMeasure::dirac(0, 2).unwrap();
        for &t in &[0.0, 0.4, 2.0] {
            let got = sg.evolve(&m0, t).unwrap();
            let decay = (-1.3 * t).exp();
            let want0 = model.mu.p0 + decay * (1.0 - model.mu.p0);
            assert!((got.weight(0) - want0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn uniformization_matches_dense_matrix_exponential() {
        let mut rng = Stream::seeded(31);
        for trial in 0..5 {
            let n = 20;
            let mut q = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        q[(i, j)] = rng.uniform();
                    }
                }
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
                q[(i, i)] = -off;
            }
            let uniform = DiscreteMeasure::new(vec![1.0 / n as f64; n]).unwrap();
            let sg = FiniteSemigroup::new(q.clone(), uniform, 0.0).unwrap();
            let m0 = DiscreteMeasure::dirac(trial % n, n).unwrap();
            let t = 0.7;
            let evolved = sg.evolve(&m0, t).unwrap();
            let dense = expm(&(q.transpose() * t));
            let start = DMatrix::from_fn(n, 1, |i, _| m0.weight(i));
            let want = &dense * start;
            for i in 0..n {
                assert!(
                    (evolved.weight(i) - want[(i, 0)]).abs() < 1e-10,
                    "trial {trial} state {i}"
                );
            }
        }
    }

    #[test]
    fn function_side_agrees_with_measure_side() {
        let sg = FiniteSemigroup::laguerre_birth_death(1.5, 1.2, 50).unwrap();
        let t = 0.9;
        let f: Vec<f64> = (0..sg.len()).map(|i| (i as f64).sin()).collect();
        let ptf = sg.apply_to_function(&f, t).unwrap();
        // <m0 P_t, f> == <m0, P_t f>
        let m0 = DiscreteMeasure::dirac(7, sg.len()).unwrap();
        let lhs: f64 = sg
            .evolve(&m0, t)
            .unwrap()
            .weights()
            .iter()
            .zip(&f)
            .map(|(&w, &v)| w * v)
            .sum();
        assert!((lhs - ptf[7]).abs() < 1e-9, "{lhs} vs {}", ptf[7]);
    }

    /// Gate for the exact-transition oracle: moments up to order four match
    /// the polynomial semigroup on three parameter sets.
    #[test]
    fn exact_transition_matches_polynomial_moments() {
        let deg = 4;
        for (idx, &(beta, vs, t, x)) in
            [(1.0, 1.0, 0.7, 3.0), (0.5, 2.0, 0.4, 1.0), (2.0, 0.7, 1.5, 0.0)].iter().enumerate()
        {
            let gen = GeneratorSpec::LaguerreDiffusion { beta, sigma: vs }.polyop(deg).unwrap();
            let p = semigroup_polyop(&gen, t).unwrap();
            let mut rng = Stream::seeded(400 + idx as u64);
            let draws: Vec<f64> = (0..200_000)
                .map(|_| exact_laguerre_transition(beta, vs, t, x, &mut rng).unwrap())
                .collect();
            for k in 1..=deg {
                let predicted: f64 =
                    (0..=deg).map(|i| p.matrix()[(i, k)] * x.powi(i as i32)).sum();
                let (mc, se) = transformed_mean_and_se(&draws, |y| y.powi(k as i32));
                assert!(
                    (mc - predicted).abs() < 4.0 * se,
                    "params {idx} k={k}: {mc} vs {predicted} (se {se})"
                );
            }
        }
    }

    #[test]
    fn exact_transition_mean_and_equilibrium() {
        let (beta, vs, x) = (1.3, 0.8, 2.0);
        let mut rng = Stream::seeded(41);
        let t = 0.9;
        let draws: Vec<f64> = (0..100_000)
            .map(|_| exact_laguerre_transition(beta, vs, t, x, &mut rng).unwrap())
            .collect();
        let (mean, se) = mean_and_se(&draws);
        let want = vs * beta + (x - vs * beta) * (-t).exp();
        assert!((mean - want).abs() < 4.0 * se);

        // t large: gamma equilibrium moments up to order three
        let far: Vec<f64> = (0..200_000)
            .map(|_| exact_laguerre_transition(beta, vs, 40.0, x, &mut rng).unwrap())
            .collect();
        for k in 1..=3u32 {
            let exact = (log_gamma_unchecked(beta + f64::from(k)) - log_gamma_unchecked(beta))
                .exp()
                * vs.powi(k as i32);
            let (mc, se) = transformed_mean_and_se(&far, |y| y.powi(k as i32));
            assert!((mc - exact).abs() < 4.0 * se, "k={k}: {mc} vs {exact}");
        }
    }

    #[test]
    fn gillespie_distribution_matches_uniformization() {
        let (beta, sigma, t) = (1.0, 1.0, 5.0);
        let cap = 60;
        let sg = FiniteSemigroup::laguerre_birth_death(beta, sigma, cap).unwrap();
        let exact = sg.evolve(&DiscreteMeasure::dirac(0, cap + 1).unwrap(), t).unwrap();
        let mut rng = Stream::seeded(42);
        let paths = 100_000;
        let mut counts = vec![0usize; cap + 1];
        for _ in 0..paths {
            let s = gillespie_birth_death(beta, sigma, t, 0, &mut rng).unwrap() as usize;
            counts[s.min(cap)] += 1;
        }
        let tv: f64 = (0..=cap)
            .map(|i| (counts[i] as f64 / paths as f64 - exact.weight(i)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn gillespie_event_count_for_slow_chains() {
        // from 0 with tiny σ the chain mostly waits at 0; each excursion is a
        // birth followed (quickly) by a death, so events ≈ 2 σ β t
        let (beta, sigma, t) = (1.0, 0.01, 5.0);
        let mut rng = Stream::seeded(43);
        let paths = 40_000;
        let mut events = 0u64;
        for _ in 0..paths {
            events += gillespie_birth_death_detailed(beta, sigma, t, 0, &mut rng).unwrap().1;
        }
        let mean = events as f64 / paths as f64;
        let rough = 2.0 * sigma * beta * t;
        assert!(
            (mean - rough).abs() < 0.25 * rough,
            "mean events {mean} vs rough {rough}"
        );
    }

    #[test]
    fn gillespie_preserves_stationary_moments() {
        let (beta, sigma, t) = (1.5, 0.8, 1.0);
        let cap = 120;
        let sg = FiniteSemigroup::laguerre_birth_death(beta, sigma, cap).unwrap();
        let nu = sg.invariant();
        let mut rng = Stream::seeded(44);
        let paths = 100_000;
        let mut finals = Vec::with_capacity(paths);
        for _ in 0..paths {
            // draw the start from ν by inversion
            let u = rng.uniform();
            let mut acc = 0.0;
            let mut start = 0usize;
            for i in 0..nu.len() {
                acc += nu.weight(i);
                if u <= acc {
                    start = i;
                    break;
                }
            }
            finals
                .push(gillespie_birth_death(beta, sigma, t, start as u64, &mut rng).unwrap()
                    as f64);
        }
        for k in 1..=2u32 {
            let exact = nu.expect(|i| (i as f64).powi(k as i32));
            let (mc, se) = transformed_mean_and_se(&finals, |y| y.powi(k as i32));
            assert!((mc - exact).abs() < 4.0 * se, "k={k}: {mc} vs {exact}");
        }
    }

    #[test]
    fn sampler_parity_with_exact_transition() {
        let (beta, vs, sigma, t, x): (f64, f64, f64, f64, f64) = (1.0, 1.0, 2.0, 0.5, 3.0);
        let warm = (1.0 + 1.0 / (vs * sigma)).ln();
        let mut rng = Stream::seeded(45);
        let n = 100_000;
        let inter: Vec<f64> = (0..n)
            .map(|_| intertwined_laguerre_sampler(beta, vs, sigma, t, x, &mut rng).unwrap())
            .collect();
        let direct: Vec<f64> = (0..n)
            .map(|_| exact_laguerre_transition(beta, vs, warm + t, x, &mut rng).unwrap())
            .collect();
        for k in 1..=3u32 {
            let (a, sa) = transformed_mean_and_se(&inter, |y| y.powi(k as i32));
            let (b, sb) = transformed_mean_and_se(&direct, |y| y.powi(k as i32));
            let se = (sa * sa + sb * sb).sqrt();
            assert!((a - b).abs() < 4.0 * se, "k={k}: {a} vs {b} (se {se})");
        }
    }

    #[test]
    fn sampler_parity_at_pure_warmup_and_large_sigma() {
        let (beta, vs, x): (f64, f64, f64) = (1.0, 1.0, 3.0);
        let mut rng = Stream::seeded(46);
        let n = 100_000;

        // t = 0: the sampler is one Poisson-gamma step
        let sigma = 2.0_f64;
        let warm = (1.0 + 1.0 / (vs * sigma)).ln();
        let inter: Vec<f64> = (0..n)
            .map(|_| intertwined_laguerre_sampler(beta, vs, sigma, 0.0, x, &mut rng).unwrap())
            .collect();
        let direct: Vec<f64> = (0..n)
            .map(|_| exact_laguerre_transition(beta, vs, warm, x, &mut rng).unwrap())
            .collect();
        for k in 1..=3u32 {
            let (a, sa) = transformed_mean_and_se(&inter, |y| y.powi(k as i32));
            let (b, sb) = transformed_mean_and_se(&direct, |y| y.powi(k as i32));
            assert!((a - b).abs() < 4.0 * (sa * sa + sb * sb).sqrt(), "t=0 k={k}");
        }

        // σ large: warm-up shrinks toward zero, sampler approaches the plain
        // transition at time t
        let sigma = 50.0_f64;
        let t = 0.5;
        let warm = (1.0 + 1.0 / (vs * sigma)).ln();
        assert!(warm < 0.02);
        let inter: Vec<f64> = (0..n)
            .map(|_| intertwined_laguerre_sampler(beta, vs, sigma, t, x, &mut rng).unwrap())
            .collect();
        let direct: Vec<f64> = (0..n)
            .map(|_| exact_laguerre_transition(beta, vs, warm + t, x, &mut rng).unwrap())
            .collect();
        let (a, sa) = mean_and_se(&inter);
        let (b, sb) = mean_and_se(&direct);
        assert!((a - b).abs() < 4.0 * (sa * sa + sb * sb).sqrt());
    }

    #[test]
    fn sampler_parity_kolmogorov_smirnov() {
        let (beta, vs, sigma, t, x): (f64, f64, f64, f64, f64) = (1.0, 1.0, 2.0, 0.5, 3.0);
        let warm = (1.0 + 1.0 / (vs * sigma)).ln();
        let mut passes = 0;
        for seed in 0..3u64 {
            let mut rng = Stream::seeded(1000 + seed);
            let n = 10_000;
            let inter: Vec<f64> = (0..n)
                .map(|_| intertwined_laguerre_sampler(beta, vs, sigma, t, x, &mut rng).unwrap())
                .collect();
            let direct: Vec<f64> = (0..n)
                .map(|_| exact_laguerre_transition(beta, vs, warm + t, x, &mut rng).unwrap())
                .collect();
            let (_, p) = ks_two_sample(&inter, &direct);
            if p > 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 2, "only {passes}/3 seeds passed the KS test");
    }

    #[test]
    fn subordinated_multipliers_examples() {
        let beta = 1.5;
        let law = WarmupLaw::beta_one(beta).unwrap();
        let eigenvalues: Vec<f64> = (0..=20).map(f64::from).collect();

        // t = 1 equals the Laplace transform; closed gamma-ratio form
        let m1 = subordinate_multipliers(&eigenvalues, &law, 1.0).unwrap();
        for (n, &m) in m1.iter().enumerate() {
            let nf = n as f64;
            let want = (log_gamma_unchecked(nf + 1.0) + log_gamma_unchecked(beta + 1.0)
                - log_gamma_unchecked(nf + beta + 1.0))
            .exp();
            assert!(((m - want) / want).abs() < 1e-12, "n={n}");
        }

        // n = 1 at general t: variance decay factor (1+β)^{-t}
        let t = 2.7;
        let mt = subordinate_multipliers(&[1.0], &law, t).unwrap();
        assert!((mt[0] - (1.0 + beta).powf(-t)).abs() < 1e-12);

        // point-mass law: plain exponential decay
        let dirac = WarmupLaw::dirac(0.8).unwrap();
        let md = subordinate_multipliers(&[0.0, 1.0, 2.0], &dirac, 1.0).unwrap();
        for (n, &m) in md.iter().enumerate() {
            assert!((m - (-0.8 * n as f64).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn subordinated_multipliers_are_completely_monotone_along_eigenvalues() {
        use crate::warmup::check_complete_monotonicity;
        let grid: Vec<f64> = (0..=40).map(|i| 0.5 * i as f64).collect();
        for &(eps, beta) in &[(0.3, 0.5), (1.0, 1.0), (0.7, 2.0)] {
            let law = WarmupLaw::neg_log_beta(eps, beta).unwrap();
            for &t in &[0.5, 1.0, 2.0] {
                let r = check_complete_monotonicity(
                    |u| subordinate_multipliers(&[u], &law, t).unwrap()[0],
                    &grid,
                    4,
                )
                .unwrap();
                assert!(r.pass, "(ε,β)=({eps},{beta}) t={t}: {}", r.worst_violation);
            }
        }
    }

    #[test]
    fn rejects_bad_generators() {
        let q = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 1.0, -1.0]);
        let nu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        assert!(FiniteSemigroup::new(q, nu.clone(), 0.0).is_err());

        let neg = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, -1.0]);
        assert!(FiniteSemigroup::new(neg, nu, 0.0).is_err());

        assert!(FiniteSemigroup::laguerre_birth_death(1.0, 1.0, 5).is_err());
        assert!(DiscreteMeasure::new(vec![0.5, 0.4]).is_err());
    }
}
