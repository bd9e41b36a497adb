//! Independent slow-path references for the FFT pipeline.
//!
//! [`direct_inversion`] evaluates the same estimator as
//! [`crate::inversion::estimate_density`] by refined quadrature of
//!
//! ```text
//! (1/2πλ) ∫_{-1/h}^{1/h} e^{-itx} Log((e^λ − 1)·φ_emp(t)·φ_w(ht) + 1) dt
//! ```
//!
//! at a single point x. It shares only the distinguished-logarithm module
//! with the FFT path (branch tracking has no simpler independent
//! formulation); grid handling, summation and the empirical characteristic
//! function are evaluated on their own. Agreement between the two routes is
//! the central anti-bug invariant of the crate.
//!
//! The module also provides the first-order asymptotic formulas (variance,
//! leading bias term at β = 2, the induced optimal bandwidth) and the
//! integrated squared error of an estimate.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::charfn::FreqGrid;
use crate::dlog::{distinguished_log, ComplexPath, DEFAULT_MIN_MODULUS};
use crate::error::{Error, Result};
use crate::inversion::Estimate;
use crate::kernel::Kernel;
use crate::model::{CompoundPoissonModel, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

/// Controls the refinement quadrature of [`direct_inversion`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    /// Initial grid density over [-1/h, 1/h]; raised so the first pass has at
    /// least 2^10 points.
    pub points_per_unit: f64,
    /// Successive halvings must agree within rtol·(1 + |value|).
    pub rtol: f64,
    pub max_refinements: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::Simpson,
            points_per_unit: 128.0,
            rtol: 1e-8,
            max_refinements: 12,
        }
    }
}

/// The estimator at a single point by refined direct quadrature.
///
/// The branch of the logarithm is tracked outward from t = 0 along each half
/// of the quadrature grid. A curve that vanishes propagates
/// [`Error::ZeroPath`]; a grid too coarse for branch certification is itself
/// the refinement signal and triggers another halving.
pub fn direct_inversion(
    sample: &Sample,
    lambda: f64,
    kernel: &Kernel,
    h: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(lambda > 0.0) || !(h > 0.0) {
        return Err(Error::invalid("intensity and bandwidth must be positive"));
    }
    if !(spec.rtol > 0.0) {
        return Err(Error::invalid("rtol must be positive"));
    }
    let half_span = 1.0 / h;
    let initial_total = ((spec.points_per_unit * 2.0 * half_span).ceil() as usize).max(1024);
    let mut half_panels = (initial_total / 2).max(2);
    if half_panels % 2 == 1 {
        half_panels += 1;
    }

    let mut prev: Option<f64> = None;
    let mut last_change = f64::INFINITY;
    for _refinement in 0..=spec.max_refinements {
        match quadrature_pass(sample, lambda, kernel, h, x, spec.rule, half_panels) {
            Ok(value) => {
                if let Some(p) = prev {
                    last_change = (value - p).abs();
                    if last_change < spec.rtol * (1.0 + value.abs()) {
                        return Ok(value);
                    }
                }
                prev = Some(value);
            }
            // an uncertifiable branch on a coarse grid is cured by refining
            Err(Error::GridTooCoarse { .. }) => {}
            Err(e) => return Err(e),
        }
        half_panels *= 2;
    }
    Err(Error::QuadratureNonConvergence {
        refinements: spec.max_refinements,
        last_change,
    })
}

/// One fixed-resolution evaluation over [-1/h, 1/h] with `half_panels` panels
/// per half-line.
fn quadrature_pass(
    sample: &Sample,
    lambda: f64,
    kernel: &Kernel,
    h: f64,
    x: f64,
    rule: QuadratureRule,
    half_panels: usize,
) -> Result<f64> {
    let step = 1.0 / h / half_panels as f64;
    let scale = lambda.exp_m1();
    let curve_at = |t: f64| scale * ecf_direct(sample.z(), t) * kernel.cf(h * t) + 1.0;

    let psi_of_half = |sign: f64| -> Result<Vec<Complex64>> {
        let values: Vec<Complex64> = (0..=half_panels)
            .map(|j| curve_at(sign * step * j as f64))
            .collect();
        let grid = FreqGrid::from_zero(step, half_panels + 1)?;
        Ok(distinguished_log(&ComplexPath::new(grid, values)?, DEFAULT_MIN_MODULUS)?.values)
    };
    let psi_pos = psi_of_half(1.0)?;
    let psi_neg = psi_of_half(-1.0)?;

    // symmetric composite rule over 2·half_panels panels
    let m = half_panels as isize;
    let node = |k: isize| -> Complex64 {
        let t = step * k as f64;
        let psi = if k >= 0 {
            psi_pos[k as usize]
        } else {
            psi_neg[(-k) as usize]
        };
        Complex64::from_polar(1.0, -t * x) * psi
    };
    let mut acc = Complex64::new(0.0, 0.0);
    match rule {
        QuadratureRule::Trapezoid => {
            acc += 0.5 * (node(-m) + node(m));
            for k in (-m + 1)..m {
                acc += node(k);
            }
            acc *= step;
        }
        QuadratureRule::Simpson => {
            acc += node(-m) + node(m);
            for k in (-m + 1)..m {
                let odd = (k + m) % 2 == 1;
                acc += if odd { 4.0 } else { 2.0 } * node(k);
            }
            acc *= step / 3.0;
        }
    }
    Ok(acc.re / (2.0 * PI * lambda))
}

/// Plain double-loop empirical characteristic function at a single frequency.
fn ecf_direct(z: &[f64], t: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &v in z {
        acc += Complex64::from_polar(1.0, t * v);
    }
    acc / z.len() as f64
}

/// Leading variance term: (1/nh)·((e^λ − 1)²/λ²)·g(x)·∫w².
pub fn asymptotic_variance(lambda: f64, g_at_x: f64, kernel: &Kernel, n: usize, h: f64) -> f64 {
    let ratio = lambda.exp_m1() / lambda;
    ratio * ratio * g_at_x * kernel.squared_l2() / (n as f64 * h)
}

/// The frequency-side integral shared by the leading bias term and the
/// optimal bandwidth:
///
/// ```text
/// I(x) = ∫ e^{-itx} t²·φ_g(t) / ((e^λ − 1)·φ_g(t) + 1) dt
/// ```
///
/// The integrand decays like t²·φ_f (the denominator equals e^{λφ_f}, of
/// modulus at least e^{-λ}), so the support is expanded until the envelope is
/// negligible and the panel count refined until two halvings agree.
pub fn bias_transform_integral(
    model: &CompoundPoissonModel,
    x: f64,
    rule: QuadratureRule,
) -> Result<f64> {
    let lambda = model.lambda();
    let scale = lambda.exp_m1();
    let integrand = |t: f64| -> Complex64 {
        let pg = model.conditional_cf(t);
        Complex64::from_polar(1.0, -t * x) * (t * t) * pg / (scale * pg + 1.0)
    };

    let mut t_max = 20.0f64;
    while t_max < 1300.0 {
        let edge = integrand(t_max).norm().max(integrand(0.93 * t_max).norm());
        if edge < 1e-16 {
            break;
        }
        t_max *= 2.0;
    }

    let mut panels = 4096usize;
    let mut prev: Option<Complex64> = None;
    let mut last_change = f64::INFINITY;
    for _ in 0..=12 {
        let value = integrate_complex(&integrand, -t_max, t_max, panels, rule);
        if let Some(p) = prev {
            last_change = (value - p).norm();
            if last_change < 1e-8 * (1.0 + value.norm()) {
                return Ok(value.re);
            }
        }
        prev = Some(value);
        panels *= 2;
    }
    Err(Error::QuadratureNonConvergence {
        refinements: 12,
        last_change,
    })
}

fn integrate_complex(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    panels: usize,
    rule: QuadratureRule,
) -> Complex64 {
    let n = if panels % 2 == 0 { panels } else { panels + 1 };
    let step = (b - a) / n as f64;
    let mut acc;
    match rule {
        QuadratureRule::Trapezoid => {
            acc = 0.5 * (f(a) + f(b));
            for i in 1..n {
                acc += f(a + step * i as f64);
            }
            acc *= step;
        }
        QuadratureRule::Simpson => {
            acc = f(a) + f(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(a + step * i as f64);
            }
            acc *= step / 3.0;
        }
    }
    acc
}

/// Leading bias term at β = 2:
/// −h²·(σ²(e^λ − 1)/(4πλ))·I(x) with I from [`bias_transform_integral`].
pub fn leading_bias_beta2(
    lambda_model: &CompoundPoissonModel,
    kernel: &Kernel,
    h: f64,
    x: f64,
) -> Result<f64> {
    let lambda = lambda_model.lambda();
    let integral = bias_transform_integral(lambda_model, x, QuadratureRule::Simpson)?;
    let sigma2 = kernel.second_moment();
    Ok(-h * h * sigma2 * lambda.exp_m1() / (4.0 * PI * lambda) * integral)
}

/// The exact β = 2 optimal bandwidth
/// h_opt = (4π²·g(x)·∫w² / (σ⁴·I(x)²))^{1/5} · n^{-1/5}.
pub fn optimal_bandwidth_beta2(
    model: &CompoundPoissonModel,
    kernel: &Kernel,
    x: f64,
    n: usize,
) -> Result<f64> {
    let integral = bias_transform_integral(model, x, QuadratureRule::Simpson)?;
    if integral.abs() < 1e-10 {
        return Err(Error::invalid(format!(
            "bias integral vanishes at x = {x}; the optimal bandwidth is undefined there"
        )));
    }
    let g = model.conditional_density(x)?;
    let sigma2 = kernel.second_moment();
    let numerator = 4.0 * PI * PI * g * kernel.squared_l2();
    let denominator = sigma2 * sigma2 * integral * integral;
    Ok((numerator / denominator).powf(0.2) * (n as f64).powf(-0.2))
}

/// Trapezoid integral of (estimate − truth)² over the full spatial grid.
pub fn ise(estimate: &Estimate, truth: impl Fn(f64) -> f64) -> f64 {
    ise_within(estimate, truth, f64::INFINITY)
}

/// Same, restricted to |x| ≤ x_limit.
pub fn ise_within(estimate: &Estimate, truth: impl Fn(f64) -> f64, x_limit: f64) -> f64 {
    let grid = estimate.grid();
    let values = estimate.values();
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for u in 0..grid.n() {
        let x = grid.x(u);
        if x.abs() > x_limit {
            prev = None;
            continue;
        }
        let d = values[u] - truth(x);
        let sq = d * d;
        if let Some(p) = prev {
            acc += 0.5 * (p + sq);
        }
        prev = Some(sq);
    }
    acc * grid.delta()
}
