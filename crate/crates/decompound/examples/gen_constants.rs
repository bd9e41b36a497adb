//! Regenerates the frozen reference constants asserted in the test suite.
//!
//! Each value is computed by two independent routes where possible (Simpson
//! and trapezoid refinement, or a closed form) and printed with the observed
//! route disagreement, so the committed constants carry their provenance:
//!
//! ```text
//! cargo run -p decompound --example gen_constants
//! ```

use std::f64::consts::PI;

use decompound::kernel::Kernel;
use decompound::model::{CompoundPoissonModel, JumpDensitySpec, Sample};
use decompound::oracle::{
    bias_transform_integral, direct_inversion, leading_bias_beta2, optimal_bandwidth_beta2,
    QuadratureRule, QuadratureSpec,
};

fn main() {
    let model = CompoundPoissonModel::new(0.3, JumpDensitySpec::StandardNormal).unwrap();
    let kernel = Kernel::wand();

    // conditional density at the origin: series vs. explicit log-space sum
    let g0 = model.conditional_density(0.0).unwrap();
    let mut reference = 0.0;
    let mut log_fact = 0.0;
    for k in 1..=80u32 {
        log_fact += (k as f64).ln();
        let weight =
            (-0.3 + k as f64 * 0.3f64.ln() - log_fact).exp() / (1.0 - (-0.3f64).exp());
        reference += weight / (2.0 * PI * k as f64).sqrt();
    }
    println!("g(0) at lambda=0.3, standard normal:");
    println!("  series      = {g0:.17e}");
    println!("  log-space   = {reference:.17e}  (diff {:.2e})", (g0 - reference).abs());

    // kernel constants
    println!("wand kernel:");
    println!("  w(0)        = {:.17e}  (16/(35π) = {:.17e})", kernel.w(0.0), 16.0 / (35.0 * PI));
    println!("  ∫w²         = {:.17e}  (1024/(3003π) = {:.17e})", kernel.squared_l2(), 1024.0 / (3003.0 * PI));

    // bias transform integral at x = 0 by both rules
    let simpson = bias_transform_integral(&model, 0.0, QuadratureRule::Simpson).unwrap();
    let trapezoid = bias_transform_integral(&model, 0.0, QuadratureRule::Trapezoid).unwrap();
    println!("bias transform integral I(0), lambda=0.3, standard normal:");
    println!("  simpson     = {simpson:.17e}");
    println!("  trapezoid   = {trapezoid:.17e}  (diff {:.2e})", (simpson - trapezoid).abs());

    // leading bias at the reference bandwidth and the induced optimal bandwidth
    let bias = leading_bias_beta2(&model, &kernel, 0.14, 0.0).unwrap();
    println!("leading bias term at h=0.14, x=0:");
    println!("  value       = {bias:.17e}");
    let h_opt = optimal_bandwidth_beta2(&model, &kernel, 0.0, 1000).unwrap();
    println!("optimal bandwidth at x=0, n=1000:");
    println!("  value       = {h_opt:.17e}");

    // single-observation estimator value by refined quadrature at two rtols
    let sample = Sample::new(vec![1.0], 0, 0).unwrap();
    let tight = QuadratureSpec {
        rtol: 1e-10,
        ..QuadratureSpec::default()
    };
    let loose = QuadratureSpec::default();
    let v_tight = direct_inversion(&sample, 0.5, &kernel, 1.0, 0.3, &tight).unwrap();
    let v_loose = direct_inversion(&sample, 0.5, &kernel, 1.0, 0.3, &loose).unwrap();
    println!("single observation z=1, lambda=0.5, h=1, x=0.3:");
    println!("  rtol=1e-10  = {v_tight:.17e}");
    println!("  rtol=1e-8   = {v_loose:.17e}  (diff {:.2e})", (v_tight - v_loose).abs());
}
