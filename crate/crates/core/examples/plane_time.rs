//! Time a planar excursion spends in `B(0, R)`, with reflection at `R`.

use sphere_cover::experiments::stats::SummaryStats;
use sphere_cover::rng::stream;

fn main() -> sphere_cover::Result<()> {
    let (r0, r1) = (0.5, 0.5 / std::f64::consts::E);
    println!("R,mean,se,exact");
    for big_r in [1.0, 2.0, 4.0] {
        let mut rng = stream(4, big_r as u64);
        let times = (0..5000)
            .map(|_| sphere_cover::experiments::plane_excursion_time(r0, r1, big_r, 1e-6, 1e-3, &mut rng))
            .collect::<sphere_cover::Result<Vec<f64>>>()?;
        let s = SummaryStats::of(&times);
        println!("{big_r},{:.4},{:.4},{:.4}", s.mean, s.se, big_r * big_r);
    }
    Ok(())
}
