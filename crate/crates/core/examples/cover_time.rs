//! Cover-time sandwich for a few radii on one path per trial.
//!
//! Usage: `cargo run --release --example cover_time -- [trials] [eps...]`

use std::time::Instant;

use sphere_cover::barriers::m_eps;
use sphere_cover::excursions::{CoverConfig, CoverRun};
use sphere_cover::geometry::SpherePoint;
use sphere_cover::rng::stream;

fn main() -> sphere_cover::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let trials: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let eps: Vec<f64> = if args.len() > 1 { args[1..].iter().filter_map(|s| s.parse().ok()).collect() } else { vec![0.2, 0.1] };
    let t0 = Instant::now();
    let run = CoverRun::new(&eps, CoverConfig::default())?;
    for g in run.grids() {
        println!("eps {} grid {} points", g.eps, g.index.len());
    }
    println!("grids built in {:.1?}", t0.elapsed());
    println!("trial,eps,c_lower,c_upper,ratio_lower,ratio_upper,sqrt_c_minus_m,jumps,seconds");
    for trial in 0..trials {
        let t = Instant::now();
        let out = run.run(SpherePoint::SOUTH, &mut stream(7, trial))?;
        for b in &out.bounds {
            let l2 = (1.0 / b.eps).ln().powi(2);
            println!(
                "{trial},{},{:.4},{:.4},{:.4},{:.4},{:.4},{},{:.2}",
                b.eps,
                b.lower,
                b.upper,
                b.lower / l2,
                b.upper / l2,
                b.upper.sqrt() - m_eps(b.eps),
                out.jumps,
                t.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
