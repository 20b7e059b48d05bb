use pfc_lab::ising::{build_pfc, PfcParams};
use pfc_lab::svmc::*;
use std::time::Instant;

fn main() {
    let problem = build_pfc(&PfcParams::new(3, 1.0, 0.1).unwrap()).unwrap();
    let t0 = Instant::now();
    let spec = CampaignSpec { sweeps: 10_000, n_samples: 10_000, repeats: 12, temperature_mk: 12.0, seed: 4242 };
    let r = campaign(&problem, SvmcVariant::SphericalSvmcTf, &spec).unwrap();
    println!("per-angle engine spherical-svmc-tf: P_ground = {:.4e} [{:.2e}, {:.2e}], P_manifold = {:.4e}, elapsed {:.0?}",
        r.p_ground.median, r.p_ground.lower, r.p_ground.upper, r.p_manifold.median, t0.elapsed());
    println!("fractions: {:?}", r.ground_fractions);
}
