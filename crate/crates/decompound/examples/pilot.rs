//! Pilot runs for the Monte Carlo gates: prints the observed statistics the
//! frozen acceptance bands were checked against.

use std::time::Instant;

use decompound::experiments::{
    bias_check, figure2_bimodality_rate, mise_rate_sweep, normality_check_with, variance_check,
    Centering, ExperimentConfig,
};

fn main() {
    let t0 = Instant::now();

    let config = ExperimentConfig::variance();
    let report = variance_check(&config, 0.0).unwrap();
    println!("=== variance ===\n{}", report.render());

    let config = ExperimentConfig::mise();
    let report = mise_rate_sweep(&config).unwrap();
    println!("=== mise ===\n{}", report.render());

    let config = ExperimentConfig::normality();
    let report = normality_check_with(&config, 0.0, Centering::McMean).unwrap();
    println!("=== normality ===\n{}", report.render());

    let mut control = ExperimentConfig::normality();
    control.bandwidth =
        decompound::experiments::BandwidthRule::through(0.5, 4000, 0.2).unwrap();
    let report = normality_check_with(&control, 0.0, Centering::TrueDensity).unwrap();
    println!("=== normality negative control (huge h, true-density centering) ===\n{}", report.render());

    let config = ExperimentConfig::bias();
    let report = bias_check(&config, 0.0).unwrap();
    println!("=== bias ===\n{}", report.render());

    let rate = figure2_bimodality_rate(decompound::experiments::DEFAULT_BASE_SEED, 20).unwrap();
    println!("=== figure2 bimodality rate over 20 replicates: {rate} ===");

    println!("total pilot time: {:.1} s", t0.elapsed().as_secs_f64());
}
