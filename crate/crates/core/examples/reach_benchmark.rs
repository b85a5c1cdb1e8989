//! Distance needed to reach a straight path from a lateral offset: the
//! length-optimal rate profile, a grid-search cross-check, the continuous
//! sliding-mode law and a tuned HOSM law.

use smooth_track::harness::{benchmark_reach, ReachBenchConfig};

fn main() -> smooth_track::Result<()> {
    // coarser sampling than the default keeps this example quick
    let cfg = ReachBenchConfig {
        ds: 5e-3,
        ..ReachBenchConfig::default()
    };
    let bench = benchmark_reach(&cfg)?;
    println!("HOSM heading bound {:.2} rad", bench.hosm_psi_bar);
    println!("  psi0   optimal   grid   proposed   hosm");
    let show = |x: Option<f64>| x.map_or("   -  ".into(), |d| format!("{d:6.3}"));
    for r in &bench.rows {
        println!(
            "{:+.3}  {:7.3}  {:6.3}  {:>8}  {:>6}",
            r.psi0,
            r.optimal,
            r.dp,
            show(r.proposed),
            show(r.hosm)
        );
    }
    Ok(())
}
