//! Traversal counts between nested circles against the geometric
//! Galton-Watson law.

use sphere_cover::excursions::{traversal_process, Sampler};
use sphere_cover::geometry::{RadiusSchedule, SpherePoint};
use sphere_cover::gw::{deviation_tail, extinction_prob, law_after};
use sphere_cover::rng::stream;

fn main() -> sphere_cover::Result<()> {
    let schedule = RadiusSchedule::new(1.0, 3)?;
    let x = SpherePoint::from_polar(1.2, 0.4);
    let sampler = Sampler::default();
    let n = 3;
    let trials = 4000;
    let mut counts = vec![0u64; 64];
    for i in 0..trials {
        let t2 = traversal_process(x, &schedule, n, &sampler, stream(5, i))?.t(2);
        counts[(t2 as usize).min(63)] += 1;
    }
    let law = law_after(n, 1)?;
    println!("k,empirical,exact");
    for (k, c) in counts.iter().enumerate().take(12) {
        println!("{k},{:.4},{:.4}", *c as f64 / trials as f64, law.get(k));
    }
    println!("P(extinct after 9 generations | 20) = {:.5}", extinction_prob(20, 9));
    for theta in [1.0, 3.0, 5.0] {
        println!("P(|sqrt(2T_5) - sqrt(2*50)| >= {theta}) = {:.3e}", deviation_tail(50, 5, theta)?);
    }
    Ok(())
}
