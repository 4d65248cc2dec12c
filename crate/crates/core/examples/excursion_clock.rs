//! Completed excursions around a few centres on one path, against the
//! mean commute time.

use sphere_cover::excursions::{track_centers, StopRule, TrackPolicy, WatchRadii};
use sphere_cover::geometry::{h, kappa, SpherePoint};
use sphere_cover::rng::stream;

fn main() -> sphere_cover::Result<()> {
    let r0 = 3.3;
    let (h0, h1) = (h(r0), h(r0 / std::f64::consts::E));
    let centers: Vec<SpherePoint> = (0..6).map(|i| SpherePoint::from_polar(0.5 * i as f64, 1.1 * i as f64)).collect();
    let m = 100;
    let run = track_centers(
        &centers,
        WatchRadii { outer: h0, inner: h1, deep: None },
        StopRule::Completions(m),
        SpherePoint::SOUTH,
        &TrackPolicy::default(),
        stream(2, 0),
    )?;
    let k = kappa(h1, h0)?;
    println!("center,tau_m,tau_m_over_kappa_m");
    for (i, log) in run.logs.iter().enumerate() {
        let tau = log.completion_times[m as usize - 1];
        println!("{i},{tau:.3},{:.4}", tau / (k * m as f64));
    }
    Ok(())
}
