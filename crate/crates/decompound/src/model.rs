//! Compound Poisson data generation and ground truth for the built-in models.
//!
//! An observation is `X = Σ_{j=1}^{N} Y_j` with `N ~ Poisson(λ)` and i.i.d.
//! jumps `Y_j` drawn from a [`JumpDensitySpec`]. Zero observations carry no
//! information about the jumps, so samplers discard them (counting how many
//! were discarded) until the requested number of nonzero values is collected.
//! For models with analytic jump densities the module also provides the
//! density `g` and characteristic function of an observation conditioned on
//! being nonzero, which the estimator targets.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::stream::RandomStream;

/// N(mean, variance) density.
pub(crate) fn normal_density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

/// One component of a normal mixture.
#[derive(Debug, Clone, Copy)]
pub struct MixtureComponent {
    pub mean: f64,
    pub variance: f64,
    pub weight: f64,
}

/// A finite mixture of normal densities.
#[derive(Debug, Clone)]
pub struct NormalMixture {
    components: Vec<MixtureComponent>,
}

impl NormalMixture {
    /// Weights must be nonnegative and sum to 1 within 1e-12; variances must
    /// be strictly positive.
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        let mut total = 0.0;
        for c in &components {
            if !(c.variance > 0.0) || !c.variance.is_finite() {
                return Err(Error::invalid(format!(
                    "component variance must be positive and finite, got {}",
                    c.variance
                )));
            }
            if !(c.weight >= 0.0) {
                return Err(Error::invalid(format!(
                    "component weight must be nonnegative, got {}",
                    c.weight
                )));
            }
            if !c.mean.is_finite() {
                return Err(Error::invalid("component mean must be finite"));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "mixture weights sum to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal_density(x, c.mean, c.variance))
            .sum()
    }

    fn cf(&self, t: f64) -> Complex64 {
        self.components
            .iter()
            .map(|c| c.weight * Complex64::from_polar((-c.variance * t * t / 2.0).exp(), c.mean * t))
            .sum()
    }

    fn sample(&self, stream: &mut RandomStream) -> f64 {
        let mut u: f64 = stream.random();
        let mut chosen = *self.components.last().expect("nonempty");
        for c in &self.components {
            if u < c.weight {
                chosen = *c;
                break;
            }
            u -= c.weight;
        }
        let g: f64 = stream.sample(StandardNormal);
        chosen.mean + chosen.variance.sqrt() * g
    }

    /// k-fold convolution density: sum over component multisets of size k,
    /// each contributing a normal with the summed means and variances.
    fn convolution_density(&self, k: u32, x: f64) -> f64 {
        let mut acc = 0.0;
        convolve_rec(&self.components, k, 1.0, 0.0, 0.0, x, &mut acc);
        acc
    }
}

fn convolve_rec(
    comps: &[MixtureComponent],
    remaining: u32,
    coeff: f64,
    mean: f64,
    variance: f64,
    x: f64,
    acc: &mut f64,
) {
    if comps.len() == 1 {
        let c = comps[0];
        let coeff = coeff * c.weight.powi(remaining as i32);
        if coeff > 0.0 {
            *acc += coeff
                * normal_density(
                    x,
                    mean + remaining as f64 * c.mean,
                    variance + remaining as f64 * c.variance,
                );
        }
        return;
    }
    let c = comps[0];
    // binom(remaining, j) * weight^j, built multiplicatively
    let mut bw = 1.0;
    for j in 0..=remaining {
        if bw > 0.0 {
            convolve_rec(
                &comps[1..],
                remaining - j,
                coeff * bw,
                mean + j as f64 * c.mean,
                variance + j as f64 * c.variance,
                x,
                acc,
            );
        }
        if j < remaining {
            bw *= (remaining - j) as f64 / (j + 1) as f64 * c.weight;
        }
    }
}

/// A caller-supplied jump density: evaluator, characteristic function and
/// sampler. Convolution powers are not available, so operations that need the
/// conditional density `g` reject this variant.
#[derive(Clone)]
pub struct UserJumpDensity {
    pub density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub cf: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    pub sampler: Arc<dyn Fn(&mut RandomStream) -> f64 + Send + Sync>,
}

impl fmt::Debug for UserJumpDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("UserJumpDensity {{ .. }}")
    }
}

/// The jump-size density of the compound Poisson model.
#[derive(Debug, Clone)]
pub enum JumpDensitySpec {
    StandardNormal,
    NormalMixture(NormalMixture),
    UserSupplied(UserJumpDensity),
}

impl JumpDensitySpec {
    pub fn density(&self, x: f64) -> f64 {
        match self {
            JumpDensitySpec::StandardNormal => normal_density(x, 0.0, 1.0),
            JumpDensitySpec::NormalMixture(m) => m.density(x),
            JumpDensitySpec::UserSupplied(u) => (u.density)(x),
        }
    }

    /// Characteristic function of a single jump.
    pub fn cf(&self, t: f64) -> Complex64 {
        match self {
            JumpDensitySpec::StandardNormal => Complex64::new((-t * t / 2.0).exp(), 0.0),
            JumpDensitySpec::NormalMixture(m) => m.cf(t),
            JumpDensitySpec::UserSupplied(u) => (u.cf)(t),
        }
    }

    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        match self {
            JumpDensitySpec::StandardNormal => stream.sample(StandardNormal),
            JumpDensitySpec::NormalMixture(m) => m.sample(stream),
            JumpDensitySpec::UserSupplied(u) => (u.sampler)(stream),
        }
    }

    /// Density of the sum of `k ≥ 1` independent jumps, in closed form.
    pub fn convolution_density(&self, k: u32, x: f64) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("convolution power must be at least 1"));
        }
        match self {
            JumpDensitySpec::StandardNormal => Ok(normal_density(x, 0.0, k as f64)),
            JumpDensitySpec::NormalMixture(m) => Ok(m.convolution_density(k, x)),
            JumpDensitySpec::UserSupplied(_) => Err(Error::UnsupportedJumpSpec(
                "convolution powers are only available for built-in jump densities",
            )),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            JumpDensitySpec::StandardNormal => "standard-normal",
            JumpDensitySpec::NormalMixture(_) => "normal-mixture",
            JumpDensitySpec::UserSupplied(_) => "user-supplied",
        }
    }
}

/// Compound Poisson model: intensity λ plus a jump density.
#[derive(Debug, Clone)]
pub struct CompoundPoissonModel {
    lambda: f64,
    jump: JumpDensitySpec,
}

/// Truncation point for the conditional-density series: far below every test
/// tolerance in the crate.
const POISSON_TAIL_EPS: f64 = 1e-12;

impl CompoundPoissonModel {
    pub fn new(lambda: f64, jump: JumpDensitySpec) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!(
                "intensity must be strictly positive and finite, got {lambda}"
            )));
        }
        Ok(Self { lambda, jump })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn jump(&self) -> &JumpDensitySpec {
        &self.jump
    }

    pub fn jump_name(&self) -> &'static str {
        self.jump.name()
    }

    /// One observation: draws `N ~ Poisson(λ)` and sums `N` jumps. Returns
    /// exactly 0.0 when `N = 0`.
    pub fn sample_compound(&self, stream: &mut RandomStream) -> f64 {
        let n = sample_poisson(self.lambda, stream);
        let mut x = 0.0;
        for _ in 0..n {
            x += self.jump.sample(stream);
        }
        x
    }

    /// Draws until exactly `n` nonzero observations are collected, counting
    /// the discarded zeros. Zero detection is exact floating-point equality:
    /// with continuous jump densities, `X = 0` happens only through `N = 0`
    /// (measure-zero collisions are ignored).
    pub fn sample_until_n_nonzero(&self, n: usize, stream: &mut RandomStream) -> Result<Sample> {
        const DRAW_CAP: u64 = 1_000_000_000;
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let mut z = Vec::with_capacity(n);
        let mut zero_count = 0u64;
        let mut draws = 0u64;
        while z.len() < n {
            if draws >= DRAW_CAP {
                return Err(Error::DegenerateModel {
                    requested: n,
                    cap: DRAW_CAP,
                });
            }
            draws += 1;
            let x = self.sample_compound(stream);
            if x == 0.0 {
                zero_count += 1;
            } else {
                z.push(x);
            }
        }
        Ok(Sample {
            z,
            zero_count,
            seed: stream.seed(),
        })
    }

    /// Density of an observation conditioned on being nonzero:
    /// `g(x) = Σ_{k≥1} P(N = k | N > 0) f^{*k}(x)`, truncated once the
    /// remaining Poisson tail mass is below 1e-12. Needs closed-form
    /// convolution powers, hence a built-in jump density.
    pub fn conditional_density(&self, x: f64) -> Result<f64> {
        let lambda = self.lambda;
        let denom = lambda.exp_m1(); // weights λ^k / (k!·(e^λ − 1))
        let e_neg = (-lambda).exp();
        let mut term = 1.0; // λ^k / k!
        let mut g = 0.0;
        for k in 1..=500u32 {
            term *= lambda / k as f64;
            g += term / denom * self.jump.convolution_density(k, x)?;
            // tail bound: Σ_{j>k} λ^j/j! ≤ term·(λ/(k+1))/(1 − λ/(k+2))
            if (k + 1) as f64 > lambda {
                let next = term * lambda / (k + 1) as f64;
                let tail = e_neg * next / (1.0 - lambda / (k + 2) as f64);
                if tail < POISSON_TAIL_EPS {
                    break;
                }
            }
        }
        Ok(g)
    }

    /// Characteristic function of an observation conditioned on being nonzero:
    /// `(e^{λ·φ_f(t)} − 1) / (e^λ − 1)`.
    pub fn conditional_cf(&self, t: f64) -> Complex64 {
        let num = (self.lambda * self.jump.cf(t)).exp() - 1.0;
        num / self.lambda.exp_m1()
    }
}

/// Poisson draw by inversion with sequential search: exact, and fast at the
/// small intensities used here (expected work λ + 1 steps).
fn sample_poisson(lambda: f64, stream: &mut RandomStream) -> u64 {
    let mut u: f64 = stream.random();
    let mut p = (-lambda).exp();
    let mut k = 0u64;
    while u >= p {
        u -= p;
        k += 1;
        p *= lambda / k as f64;
        if k > 10_000 {
            break; // unreachable for the intensities in scope
        }
    }
    k
}

/// The nonzero observations plus bookkeeping for reproducibility.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    z: Vec<f64>,
    zero_count: u64,
    seed: u64,
}

impl Sample {
    /// All entries must be nonzero.
    pub fn new(z: Vec<f64>, zero_count: u64, seed: u64) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::EmptySample);
        }
        if z.iter().any(|&v| v == 0.0 || !v.is_finite()) {
            return Err(Error::invalid("observations must be nonzero and finite"));
        }
        Ok(Self {
            z,
            zero_count,
            seed,
        })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn zero_count(&self) -> u64 {
        self.zero_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// CSV with a `z` header, one observation per line at 17 significant
    /// digits, preceded by `# key=value` metadata lines.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# zero_count={}", self.zero_count)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "z")?;
        for v in &self.z {
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Sample> {
        let path = path.as_ref();
        let err = |message: String| Error::Parse {
            path: path.display().to_string(),
            message,
        };
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut zero_count = 0u64;
        let mut seed = 0u64;
        let mut header_seen = false;
        let mut z = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((key, value)) = rest.split_once('=') {
                    match key.trim() {
                        "zero_count" => {
                            zero_count = value
                                .trim()
                                .parse()
                                .map_err(|e| err(format!("line {}: {e}", i + 1)))?
                        }
                        "seed" => {
                            seed = value
                                .trim()
                                .parse()
                                .map_err(|e| err(format!("line {}: {e}", i + 1)))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if line != "z" {
                    return Err(err(format!("line {}: expected header `z`", i + 1)));
                }
                header_seen = true;
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|e| err(format!("line {}: {e}", i + 1)))?;
            z.push(v);
        }
        if !header_seen {
            return Err(err("missing `z` header".into()));
        }
        Sample::new(z, zero_count, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section_mixture() -> JumpDensitySpec {
        JumpDensitySpec::NormalMixture(
            NormalMixture::new(vec![
                MixtureComponent {
                    mean: 0.0,
                    variance: 1.0,
                    weight: 0.75,
                },
                MixtureComponent {
                    mean: 1.5,
                    variance: 1.0 / 9.0,
                    weight: 0.25,
                },
            ])
            .unwrap(),
        )
    }

    fn standard_model(lambda: f64) -> CompoundPoissonModel {
        CompoundPoissonModel::new(lambda, JumpDensitySpec::StandardNormal).unwrap()
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(CompoundPoissonModel::new(0.0, JumpDensitySpec::StandardNormal).is_err());
        assert!(CompoundPoissonModel::new(-1.0, JumpDensitySpec::StandardNormal).is_err());
        assert!(CompoundPoissonModel::new(f64::INFINITY, JumpDensitySpec::StandardNormal).is_err());
    }

    #[test]
    fn rejects_bad_mixture() {
        assert!(NormalMixture::new(vec![]).is_err());
        assert!(NormalMixture::new(vec![MixtureComponent {
            mean: 0.0,
            variance: 0.0,
            weight: 1.0
        }])
        .is_err());
        assert!(NormalMixture::new(vec![MixtureComponent {
            mean: 0.0,
            variance: 1.0,
            weight: 0.5
        }])
        .is_err());
    }

    #[test]
    fn zero_probability_matches_poisson() {
        // P(X = 0) = e^{-0.3}; 3 standard errors at 1e6 draws.
        let model = standard_model(0.3);
        let mut stream = RandomStream::new(11);
        let draws = 1_000_000;
        let zeros = (0..draws)
            .filter(|_| model.sample_compound(&mut stream) == 0.0)
            .count();
        let p = zeros as f64 / draws as f64;
        let expected = (-0.3f64).exp();
        let se = (expected * (1.0 - expected) / draws as f64).sqrt();
        assert!(
            (p - expected).abs() < 3.0 * se,
            "p = {p}, expected {expected} ± {}",
            3.0 * se
        );
    }

    #[test]
    fn compound_moments_match_wald() {
        // E[X] = λ·E[Y] = 0 and E[X²] = λ·E[Y²] = 0.3 for standard normal jumps.
        let model = standard_model(0.3);
        let mut stream = RandomStream::new(12);
        let draws = 1_000_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..draws {
            let x = model.sample_compound(&mut stream);
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / draws as f64;
        let second = sum2 / draws as f64;
        // Var[X] = 0.3, so SE of the mean is sqrt(0.3/draws).
        let se_mean = (0.3f64 / draws as f64).sqrt();
        assert!(mean.abs() < 3.0 * se_mean, "mean = {mean}");
        // Var[X²] = E[X⁴] − 0.09 = (κ₄ + 3κ₂²) − 0.09 = 1.08.
        let se_second = (1.08f64 / draws as f64).sqrt();
        assert!(
            (second - 0.3).abs() < 4.0 * se_second,
            "second moment = {second}"
        );
    }

    #[test]
    fn nonzero_sampler_postconditions() {
        let model = standard_model(0.3);
        let mut stream = RandomStream::new(5);
        let sample = model.sample_until_n_nonzero(5, &mut stream).unwrap();
        assert_eq!(sample.len(), 5);
        assert!(sample.z().iter().all(|&v| v != 0.0));
    }

    #[test]
    fn zero_count_matches_geometric_identity() {
        // E[zeros per nonzero] = e^{-λ}/(1 − e^{-λ}) ≈ 2.858 at λ = 0.3.
        let model = standard_model(0.3);
        let n = 1000;
        let reps = 50;
        let mut total_zeros = 0u64;
        for r in 0..reps {
            let mut stream = RandomStream::derive(21, r);
            let s = model.sample_until_n_nonzero(n, &mut stream).unwrap();
            total_zeros += s.zero_count();
        }
        let ratio = total_zeros as f64 / (n * reps as usize) as f64;
        let expected = (-0.3f64).exp() / (-(-0.3f64).exp_m1());
        // per-trial variance of the geometric count is q/p² ≈ 11.03
        let se = (11.03f64 / (n * reps as usize) as f64).sqrt();
        assert!(
            (ratio - expected).abs() < 4.0 * se,
            "ratio = {ratio}, expected {expected}"
        );
    }

    #[test]
    fn sampling_is_reproducible() {
        let model = standard_model(0.3);
        let mut a = RandomStream::new(42);
        let mut b = RandomStream::new(42);
        let sa = model.sample_until_n_nonzero(200, &mut a).unwrap();
        let sb = model.sample_until_n_nonzero(200, &mut b).unwrap();
        assert_eq!(sa.zero_count(), sb.zero_count());
        let bits_a: Vec<u64> = sa.z().iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = sb.z().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn conditional_density_at_zero() {
        // Frozen by the independent summation below; regenerate with
        // `cargo run -p decompound --example gen_constants`.
        let model = standard_model(0.3);
        let got = model.conditional_density(0.0).unwrap();

        // independent summation: explicit Poisson weights and N(0, k) values
        let lambda = 0.3f64;
        let mut expected = 0.0;
        let mut log_fact = 0.0;
        for k in 1..=60u32 {
            log_fact += (k as f64).ln();
            let weight = (-lambda + (k as f64) * lambda.ln() - log_fact).exp()
                / (1.0 - (-lambda).exp());
            expected += weight / (2.0 * PI * k as f64).sqrt();
        }
        // the implementation truncates at Poisson tail mass 1e-12, so allow
        // a few units of that against the untruncated reference sum
        assert!((got - expected).abs() < 5e-12, "got {got}, exp {expected}");
        assert!((got - 0.38153831017).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn conditional_density_integrates_to_one() {
        for model in [
            standard_model(0.3),
            CompoundPoissonModel::new(1.0, section_mixture()).unwrap(),
        ] {
            // Simpson over [-40, 40]; the tails are Gaussian and negligible.
            let (a, b, n) = (-40.0, 40.0, 8000);
            let h = (b - a) / n as f64;
            let mut s = model.conditional_density(a).unwrap() + model.conditional_density(b).unwrap();
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * model.conditional_density(a + i as f64 * h).unwrap();
            }
            let integral = s * h / 3.0;
            assert!((integral - 1.0).abs() < 1e-6, "integral = {integral}");
        }
    }

    #[test]
    fn conditional_density_degenerates_to_jump_density() {
        // As λ → 0, P(N = 1 | N > 0) → 1 and g → f.
        let model = standard_model(0.01);
        let mut worst = 0.0f64;
        for i in 0..=160 {
            let x = -4.0 + i as f64 * 0.05;
            let g = model.conditional_density(x).unwrap();
            let f = model.jump().density(x);
            worst = worst.max((g - f).abs());
        }
        assert!(worst < 1e-2, "sup deviation {worst}");
    }

    #[test]
    fn jump_cf_values() {
        let f = JumpDensitySpec::StandardNormal;
        assert_eq!(f.cf(0.0), Complex64::new(1.0, 0.0));
        assert!((f.cf(1.0).re - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(f.cf(1.0).im, 0.0);

        let m = section_mixture();
        assert!((m.cf(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        for t in [-3.0f64, -0.7, 0.4, 2.2] {
            let expected = 0.75 * Complex64::new((-t * t / 2.0).exp(), 0.0)
                + 0.25 * Complex64::from_polar((-t * t / 18.0).exp(), 1.5 * t);
            assert!((m.cf(t) - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn conditional_cf_identities() {
        let lambda = 0.3;
        let model = standard_model(lambda);
        let e_m1 = lambda.exp_m1();
        assert!((model.conditional_cf(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let c = lambda * lambda.exp() / e_m1;
        let mut t = -50.0;
        while t <= 50.0 {
            let pg = model.conditional_cf(t);
            let pf = model.jump().cf(t);
            assert!(pg.norm() <= 1.0 + 1e-12);
            assert!(pg.norm() <= c * pf.norm() + 1e-12, "bound fails at t = {t}");
            // (e^λ − 1)·φ_g(t) + 1 = e^{λ·φ_f(t)}, modulus at least e^{-λ}
            let curve = e_m1 * pg + 1.0;
            let expected = (lambda * pf).exp();
            assert!((curve - expected).norm() < 1e-12);
            assert!(curve.norm() >= (-lambda).exp() - 1e-12);
            t += 0.25;
        }
    }

    #[test]
    fn convolution_power_of_mixture_is_a_density() {
        let m = match section_mixture() {
            JumpDensitySpec::NormalMixture(m) => m,
            _ => unreachable!(),
        };
        // 3-fold convolution should integrate to 1.
        let (a, b, n) = (-30.0, 30.0, 6000);
        let h = (b - a) / n as f64;
        let mut s = m.convolution_density(3, a) + m.convolution_density(3, b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * m.convolution_density(3, a + i as f64 * h);
        }
        let integral = s * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-8, "integral = {integral}");
        // and match the direct binomial expansion at a point
        let x = 0.7;
        let mut expected = 0.0;
        for j in 0..=3u32 {
            let binom = [1.0, 3.0, 3.0, 1.0][j as usize];
            let w = binom * 0.75f64.powi(j as i32) * 0.25f64.powi((3 - j) as i32);
            let mean = (3 - j) as f64 * 1.5;
            let var = j as f64 + (3 - j) as f64 / 9.0;
            expected += w * normal_density(x, mean, var);
        }
        assert!((m.convolution_density(3, x) - expected).abs() < 1e-14);
    }

    #[test]
    fn user_supplied_spec_round_trip() {
        let spec = JumpDensitySpec::UserSupplied(UserJumpDensity {
            density: Arc::new(|x| normal_density(x, 0.0, 1.0)),
            cf: Arc::new(|t| Complex64::new((-t * t / 2.0).exp(), 0.0)),
            sampler: Arc::new(|s| s.sample(StandardNormal)),
        });
        assert!((spec.density(0.0) - normal_density(0.0, 0.0, 1.0)).abs() < 1e-15);
        assert!(spec.convolution_density(2, 0.0).is_err());
        let model = CompoundPoissonModel::new(0.3, spec).unwrap();
        assert!(model.conditional_density(0.0).is_err());
        let mut stream = RandomStream::new(3);
        let s = model.sample_until_n_nonzero(10, &mut stream).unwrap();
        assert_eq!(s.len(), 10);
    }

    #[test]
    fn sample_csv_round_trip() {
        let model = standard_model(0.3);
        let mut stream = RandomStream::new(9);
        let sample = model.sample_until_n_nonzero(50, &mut stream).unwrap();
        let dir = std::env::temp_dir().join("decompound-model-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sample.csv");
        sample.write_csv(&path).unwrap();
        let back = Sample::read_csv(&path).unwrap();
        assert_eq!(back, sample);
        std::fs::remove_file(&path).ok();
    }
}
