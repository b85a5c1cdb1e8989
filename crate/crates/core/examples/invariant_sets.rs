//! Steering-angle bounds of the fictive trailer chain for a few lead
//! curvatures. Each wheel stays within its bound once inside the chain's
//! invariant set, so the first entry bounds the real steering angle.

use smooth_track::smc::invariant_chain;

fn main() -> smooth_track::Result<()> {
    let lambdas = [2.5, 1.5, 1.0];
    println!("lambdas {lambdas:?}");
    for kappa_l in [0.05, 0.1, 0.2, 0.25] {
        let bounds = invariant_chain(kappa_l, &lambdas)?;
        let cells: Vec<String> = bounds.iter().map(|b| format!("{b:.4}")).collect();
        println!("kappa_l {kappa_l:.2}: bounds [rad] {}", cells.join(", "));
    }
    Ok(())
}
