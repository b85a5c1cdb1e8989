//! Baseline tuning on the arc sequence against three parameter changes:
//! halved lead curvature, quadrupled lead wheelbase and a smaller
//! robustness factor. Ratios are relative to the baseline.

use smooth_track::harness::{arc_sequence_scenario, compare_params, MetricsOptions};

fn main() -> smooth_track::Result<()> {
    let (records, table) = compare_params(&arc_sequence_scenario(), &MetricsOptions::default())?;
    for m in &records {
        println!(
            "{:>14}: t_r {:6.2} s, max e_l {:.4} m",
            m.name, m.t_reach, m.max_e_l_post
        );
    }
    println!("\nratios ({})", table.axes.join(", "));
    for (name, r) in &table.rows {
        let cells: Vec<String> = r.iter().map(|x| format!("{x:.2}")).collect();
        println!("{name:>14}: {}", cells.join("  "));
    }
    Ok(())
}
