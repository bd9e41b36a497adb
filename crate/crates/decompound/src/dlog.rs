//! Distinguished logarithm of a sampled complex path.
//!
//! The estimator needs Log((e^λ − 1)·φ(t) + 1) as a *continuous* branch along
//! t, starting from the positive real value at t = 0; the principal branch is
//! wrong whenever the path winds around the origin. This module tracks the
//! branch by accumulating principal-value phase increments between adjacent
//! samples. Two failure modes are explicit errors rather than wrong answers:
//!
//! * [`Error::ZeroPath`] — the path came within `min_modulus` of the origin.
//!   The logarithm is undefined there and the estimator must fall back to the
//!   zero function.
//! * [`Error::GridTooCoarse`] — a single phase increment exceeded π/2. At π
//!   the branch choice is ambiguous; capping at π/2 leaves a factor-2 margin
//!   and turns undersampling into a refinement signal instead of a silently
//!   wrong branch.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::charfn::FreqGrid;
use crate::error::{Error, Result};

/// Paths with |z_k| below this default are treated as vanishing: the
/// logarithm is ill-conditioned past useful accuracy there.
pub const DEFAULT_MIN_MODULUS: f64 = 1e-8;

/// Largest accepted phase increment between adjacent samples.
pub const MAX_PHASE_STEP: f64 = FRAC_PI_2;

/// A complex curve sampled on a frequency grid, anchored at a positive real
/// starting value (the curves of interest start at e^λ).
#[derive(Debug, Clone)]
pub struct ComplexPath {
    grid: FreqGrid,
    values: Vec<Complex64>,
}

impl ComplexPath {
    pub fn new(grid: FreqGrid, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::invalid(format!(
                "grid has {} points but {} values were supplied",
                grid.len(),
                values.len()
            )));
        }
        let z0 = values[0];
        if !(z0.re > 0.0) || z0.im.abs() > 1e-12 * z0.re {
            return Err(Error::invalid(format!(
                "path must start at a positive real value, got {z0}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FreqGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// The tracked logarithm along a path.
#[derive(Debug, Clone)]
pub struct DLogResult {
    /// log|z_k| + i·θ_k with θ accumulated continuously from θ_0 = 0.
    pub values: Vec<Complex64>,
    /// Largest |phase increment| encountered.
    pub max_phase_step: f64,
    /// Net turns of the path about the origin: (θ_end − Arg z_end) / 2π.
    pub winding: i64,
}

/// Tracks the continuous logarithm along `path`.
///
/// `values[0] = ln(z_0)` (real); for k > 0, `values[k] = ln|z_k| + i·θ_k`
/// where θ_k adds the principal argument of z_k/z_{k−1} to θ_{k−1}.
pub fn distinguished_log(path: &ComplexPath, min_modulus: f64) -> Result<DLogResult> {
    if !(min_modulus > 0.0) {
        return Err(Error::invalid("min_modulus must be positive"));
    }
    let values = path.values();
    let grid = path.grid();

    let mut out = Vec::with_capacity(values.len());
    let z0 = values[0];
    if z0.re < min_modulus {
        return Err(Error::ZeroPath {
            t: grid.point(0),
            modulus: z0.re,
            min_modulus,
        });
    }
    out.push(Complex64::new(z0.re.ln(), 0.0));

    let mut theta = 0.0;
    let mut max_step = 0.0f64;
    for k in 1..values.len() {
        let z = values[k];
        let modulus = z.norm();
        if modulus < min_modulus {
            return Err(Error::ZeroPath {
                t: grid.point(k),
                modulus,
                min_modulus,
            });
        }
        let step = (z / values[k - 1]).arg();
        if step.abs() > MAX_PHASE_STEP {
            return Err(Error::GridTooCoarse {
                t: grid.point(k),
                step: step.abs(),
            });
        }
        max_step = max_step.max(step.abs());
        theta += step;
        out.push(Complex64::new(modulus.ln(), theta));
    }

    let winding = ((theta - values[values.len() - 1].arg()) / (2.0 * PI)).round() as i64;
    Ok(DLogResult {
        values: out,
        max_phase_step: max_step,
        winding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CompoundPoissonModel, JumpDensitySpec, MixtureComponent, NormalMixture};
    use proptest::prelude::*;

    fn path_from(values: Vec<Complex64>, step: f64) -> ComplexPath {
        let grid = FreqGrid::from_zero(step, values.len()).unwrap();
        ComplexPath::new(grid, values).unwrap()
    }

    #[test]
    fn constant_positive_path() {
        let lambda = 0.3f64;
        let values = vec![Complex64::new(lambda.exp(), 0.0); 64];
        let result = distinguished_log(&path_from(values, 0.01), DEFAULT_MIN_MODULUS).unwrap();
        for v in &result.values {
            assert!((v - Complex64::new(lambda, 0.0)).norm() < 1e-14);
        }
        assert_eq!(result.winding, 0);
        assert_eq!(result.max_phase_step, 0.0);
    }

    #[test]
    fn unit_circle_loop_winds_once() {
        // z(t) = e^{2πi·t}, t ∈ [0, 1]: the principal log of the endpoint is 0,
        // the continuous branch ends at 2πi.
        let n = 257;
        let values: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / (n - 1) as f64))
            .collect();
        let result =
            distinguished_log(&path_from(values, 1.0 / (n - 1) as f64), DEFAULT_MIN_MODULUS)
                .unwrap();
        let last = result.values.last().unwrap();
        assert!((last - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-10);
        assert_eq!(result.winding, 1);
    }

    #[test]
    fn small_lambda_reduces_to_principal_branch() {
        // λ = 0.3 < log 2: the curve (e^λ−1)φ_g + 1 = e^{λφ_f} stays in the
        // right half plane, so the tracked branch equals the principal one.
        let lambda = 0.3f64;
        let model = CompoundPoissonModel::new(lambda, JumpDensitySpec::StandardNormal).unwrap();
        let grid = FreqGrid::from_zero(0.01, 1024).unwrap();
        let values: Vec<Complex64> = grid
            .points()
            .map(|t| lambda.exp_m1() * model.conditional_cf(t) + 1.0)
            .collect();
        let path = ComplexPath::new(grid, values.clone()).unwrap();
        let result = distinguished_log(&path, DEFAULT_MIN_MODULUS).unwrap();
        for (tracked, z) in result.values.iter().zip(&values) {
            assert!((tracked - z.ln()).norm() < 1e-12);
        }
        assert_eq!(result.winding, 0);
    }

    #[test]
    fn winding_model_differs_from_principal_branch() {
        // λ = 6 with a narrow mean-1.5 jump density: arg(e^{λφ_f}) swings past
        // ±π, the curve crosses the negative real axis, and the principal
        // branch is wrong on part of the grid while exp-inversion still holds.
        let jump = JumpDensitySpec::NormalMixture(
            NormalMixture::new(vec![MixtureComponent {
                mean: 1.5,
                variance: 1.0 / 9.0,
                weight: 1.0,
            }])
            .unwrap(),
        );
        let lambda = 6.0f64;
        let model = CompoundPoissonModel::new(lambda, jump).unwrap();
        let grid = FreqGrid::from_zero(0.002, 4001).unwrap();
        let values: Vec<Complex64> = grid
            .points()
            .map(|t| lambda.exp_m1() * model.conditional_cf(t) + 1.0)
            .collect();
        let path = ComplexPath::new(grid, values.clone()).unwrap();
        let result = distinguished_log(&path, DEFAULT_MIN_MODULUS).unwrap();
        let mismatches = result
            .values
            .iter()
            .zip(&values)
            .filter(|(tracked, z)| (*tracked - z.ln()).norm() > 1e-6)
            .count();
        assert!(mismatches > 0, "principal branch was never left");
        for (tracked, z) in result.values.iter().zip(&values) {
            assert!((tracked.exp() - z).norm() <= 1e-10 * z.norm());
        }
    }

    #[test]
    fn zero_path_is_reported() {
        let values = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(1e-9, 0.0),
            Complex64::new(0.5, 0.0),
        ];
        let err = distinguished_log(&path_from(values, 0.1), DEFAULT_MIN_MODULUS).unwrap_err();
        match err {
            Error::ZeroPath { t, modulus, .. } => {
                assert!((t - 0.2).abs() < 1e-15);
                assert!(modulus < 1e-8);
            }
            other => panic!("expected ZeroPath, got {other}"),
        }
    }

    #[test]
    fn coarse_grid_is_reported() {
        // quarter-turn-plus steps: ambiguous branch
        let values: Vec<Complex64> = (0..8)
            .map(|k| Complex64::from_polar(1.0, 1.8 * k as f64))
            .collect();
        let err = distinguished_log(&path_from(values, 0.1), DEFAULT_MIN_MODULUS).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn conjugated_path_gives_conjugated_log() {
        let lambda = 1.4f64;
        let model = CompoundPoissonModel::new(
            lambda,
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
            ),
        )
        .unwrap();
        let grid = FreqGrid::from_zero(0.01, 2048).unwrap();
        let values: Vec<Complex64> = grid
            .points()
            .map(|t| lambda.exp_m1() * model.conditional_cf(t) + 1.0)
            .collect();
        let conj: Vec<Complex64> = values.iter().map(|z| z.conj()).collect();
        let a = distinguished_log(
            &ComplexPath::new(grid.clone(), values).unwrap(),
            DEFAULT_MIN_MODULUS,
        )
        .unwrap();
        let b = distinguished_log(
            &ComplexPath::new(grid, conj).unwrap(),
            DEFAULT_MIN_MODULUS,
        )
        .unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x.conj() - y).norm() < 1e-12);
        }
        assert_eq!(a.winding, -b.winding);
    }

    #[test]
    fn grid_refinement_is_stable() {
        // halving the step changes shared points by < 1e-9 on a smooth path
        let curve = |t: f64| {
            Complex64::new(2.0 + (0.8 * t).cos(), (1.3 * t).sin())
        };
        let coarse: Vec<Complex64> = (0..501).map(|k| curve(0.01 * k as f64)).collect();
        let fine: Vec<Complex64> = (0..1001).map(|k| curve(0.005 * k as f64)).collect();
        let a = distinguished_log(&path_from(coarse, 0.01), DEFAULT_MIN_MODULUS).unwrap();
        let b = distinguished_log(&path_from(fine, 0.005), DEFAULT_MIN_MODULUS).unwrap();
        for (k, x) in a.values.iter().enumerate() {
            assert!((x - b.values[2 * k]).norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_paths_not_anchored_at_positive_real() {
        let grid = FreqGrid::from_zero(0.1, 2).unwrap();
        assert!(ComplexPath::new(grid.clone(), vec![Complex64::new(-1.0, 0.0); 2]).is_err());
        assert!(ComplexPath::new(grid, vec![Complex64::new(1.0, 0.5); 2]).is_err());
    }

    proptest! {
        #[test]
        fn prop_exp_inverts_the_log(
            amp in 0.05f64..0.45,
            freq in 0.1f64..2.0,
            phase_rate in -3.0f64..3.0,
        ) {
            // smooth non-vanishing loops around 1
            let n = 400;
            let step = 0.01;
            let values: Vec<Complex64> = (0..n)
                .map(|k| {
                    let t = step * k as f64;
                    Complex64::new(1.0, 0.0)
                        + amp * Complex64::from_polar(1.0, phase_rate * t) * (freq * t).sin()
                })
                .collect();
            let path = path_from(values.clone(), step);
            if let Ok(result) = distinguished_log(&path, DEFAULT_MIN_MODULUS) {
                for (log, z) in result.values.iter().zip(&values) {
                    prop_assert!((log.exp() - z).norm() <= 1e-10 * z.norm().max(1.0));
                }
            }
        }
    }
}
