//! Timing sweep over the attribute grid. Reps default to 10 here; the
//! acceptance suite and `poabe bench` use 100.
//!
//! ```text
//! cargo run --release --example bench_trends -- 20
//! ```

use poabe::harness::{bench, Algorithm, BenchConfig};

fn main() {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let report = bench(&BenchConfig {
        reps,
        ..BenchConfig::default()
    });
    print!("{}", report.to_table());
    for alg in Algorithm::ALL {
        let fit = report.fit(alg);
        println!(
            "{:<12} slope {:>7.3} ms/attr  intercept {:>7.3} ms  r2 {:.4}  spread {:.2}x",
            alg.name(),
            fit.slope,
            fit.intercept,
            fit.r2,
            report.spread(alg)
        );
    }
}
