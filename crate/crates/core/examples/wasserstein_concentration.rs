//! `sqrt(n) W_1` between sampled exit angles and their law.

use sphere_cover::rng::stream;
use sphere_cover::transport::{fit_c0, nu_k, wasserstein1_ref, EmpiricalAngles};

fn main() -> sphere_cover::Result<()> {
    let nu = nu_k((-1.0f64).exp())?;
    let xs = [1.0, 1.5, 2.0];
    println!("n,mean_scaled_w1,fitted_c0");
    for n in [100usize, 1000] {
        let scaled: Vec<f64> = (0..500)
            .map(|i| {
                let mut rng = stream(9, i);
                let s = EmpiricalAngles::new((0..n).map(|_| nu.sample(&mut rng)).collect())?;
                Ok((n as f64).sqrt() * wasserstein1_ref(&s, &nu)?.value)
            })
            .collect::<sphere_cover::Result<_>>()?;
        let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
        println!("{n},{mean:.4},{:.4}", fit_c0(&scaled, &xs, 1.0)?);
    }
    Ok(())
}
