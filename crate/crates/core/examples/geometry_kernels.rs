//! Chart geometry, the sphere Poisson kernel and annulus hitting odds.
//!
//! Compares `log(rho2/rho3) / log(rho1/rho3)` with a walk-on-spheres estimate
//! in the stereographic chart.

use sphere_cover::bm_sim::PlanarWalker;
use sphere_cover::geometry::{annulus_hit_prob, h, kappa, stereo_inverse, stereo_project, PlaneCircle, PlanePoint, SpherePoint};
use sphere_cover::rng::stream;

fn main() -> sphere_cover::Result<()> {
    let p = SpherePoint::from_polar(1.0, 0.5);
    let w = stereo_project(&p)?;
    println!("p = {:?} -> w = {:?} -> {:?}", p.coords(), w.w, stereo_inverse(&w).coords());
    println!("h(1) = {:.6}, kappa(h(1/e), h(1)) = {:.6}", h(1.0), kappa(h((-1.0f64).exp()), h(1.0))?);

    println!("rho1,rho2,rho3,exact,estimate");
    for [r1, r2, r3] in [[0.1, 0.5, 1.0], [0.01, 0.1, 1.0], [0.5, 1.5, 4.0]] {
        let circles = [PlaneCircle { center: [0.0, 0.0], radius: r1 }, PlaneCircle { center: [0.0, 0.0], radius: r3 }];
        let mut walker = PlanarWalker::new(PlanePoint::new(r2, 0.0), &circles, 1e-6, 1_000_000, stream(1, 0))?;
        let n = 20_000;
        let mut hits = 0;
        for _ in 0..n {
            walker.position = [r2, 0.0];
            if walker.walk_to_hit(None)?.circle_id == 0 {
                hits += 1;
            }
        }
        println!("{r1},{r2},{r3},{:.4},{:.4}", annulus_hit_prob(r1, r2, r3)?, hits as f64 / n as f64);
    }
    Ok(())
}
