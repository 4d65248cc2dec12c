//! Exact barrier probabilities against their asymptotic expressions.
//!
//! Prints the implied constant `DP / bound` for each shape over a grid of
//! `L`, which should stay bounded as `L` grows.

use sphere_cover::barriers::{asymptotic_bounds, barrier_prob_dp, BarrierEvent};

fn main() -> sphere_cover::Result<()> {
    println!("shape,L,param,dp,bound,implied");
    for levels in [10u32, 14, 18, 22] {
        for z in [0.0, 1.0, 2.0] {
            let e = BarrierEvent::gamma_extinction(levels, z)?;
            row(&e, levels, z)?;
        }
        let k = levels / 2;
        row(&BarrierEvent::alpha_window(levels, 0.0, k, 0.0)?, levels, k as f64)?;
        row(&BarrierEvent::linear_extinction(levels, 2, 1.0)?, levels, 1.0)?;
        row(&BarrierEvent::linear_window(levels, 2, levels / 2, 1.0, 1.0)?, levels, 1.0)?;
    }
    Ok(())
}

fn row(e: &BarrierEvent, levels: u32, param: f64) -> sphere_cover::Result<()> {
    let p = barrier_prob_dp(e)?;
    for b in asymptotic_bounds(e)? {
        println!("{},{levels},{param},{p:e},{:e},{:.4}", b.label, b.value, p / b.value);
    }
    Ok(())
}
