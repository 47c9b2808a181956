//! Quick scaling-sweep runner for poking at slopes from the command line:
//!
//!   cargo run --release --example sweep_probe -- schrodinger global 64 4
//!
//! Arguments: phase name, mode, largest radius, restarts. Prints the fitted
//! slope and the per-radius resolution picks without the CLI's report files.

use disperse_core::estimator::{scaling_sweep, SweepBudget, SweepMode};
use disperse_core::phase::builtin_phase;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("schrodinger");
    let mode = match args.get(2).map(String::as_str).unwrap_or("local") {
        "global" => SweepMode::Global,
        _ => SweepMode::Local,
    };
    let rmax: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(64.0);
    let restarts: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(4);

    let phase = builtin_phase(name, 1).unwrap();
    let mut r_list = vec![4.0];
    while *r_list.last().unwrap() < rmax {
        r_list.push(r_list.last().unwrap() * 2.0);
    }
    let budget = SweepBudget {
        restarts,
        ..SweepBudget::default()
    };
    let t0 = Instant::now();
    let fit = scaling_sweep(&phase, 1, &r_list, mode, &budget).unwrap();
    println!(
        "{name} {} slope={:.4} intercept={:.3} max_resid={:.4} elapsed={:.1}s",
        mode.as_str(),
        fit.slope,
        fit.intercept,
        fit.max_residual,
        t0.elapsed().as_secs_f64()
    );
    for p in &fit.points {
        println!(
            "  R={:5.0} N={:7} Nt={:6} norm={:10.4} log2={:7.4} drift={:.2e}",
            p.r,
            p.points_per_axis,
            p.nt,
            p.norm,
            p.norm.log2(),
            p.refinement_drift
        );
    }
}
