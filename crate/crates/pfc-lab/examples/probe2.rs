use pfc_lab::ising::{build_pfc, PfcParams, AnnealSchedule};
use pfc_lab::ame::*;
use std::time::Instant;

fn main() {
    let schedule = AnnealSchedule::linear();
    let p = build_pfc(&PfcParams::new(3, 1.0, 0.1).unwrap()).unwrap();
    let mut outputs: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
    outputs.push(0.83);
    outputs.sort_by(f64::total_cmp);
    outputs.dedup();
    let t0 = Instant::now();
    let traj = evolve_ame(&p, &schedule, &BathParams::default(), 200.0, &outputs, &AmeOptions::default()).unwrap();
    println!("AME M=3 d=0.1 12mK 200ns done in {:.0?}", t0.elapsed());
    let at = |s: f64| {
        let idx = traj.s_values.iter().position(|&x| (x-s).abs() < 1e-9).unwrap();
        &traj.populations[idx]
    };
    let p83 = at(0.83);
    let p100 = at(1.0);
    println!("P(E0) at s=0.83: {:.4}   P(E1): {:.4}   sum E2..E8: {:.4}",
        p83[0], p83[1], p83[2..9].iter().sum::<f64>());
    println!("P(E0) at s=1.00: {:.4}   P(E1..E8) sum: {:.4}", p100[0], p100[1..9].iter().sum::<f64>());
    let d = traj.diagnostics.last().unwrap();
    println!("trace_dev={:.2e} herm={:.2e}", d.trace_deviation, d.hermiticity_error);
    println!("min_eig(final) = {:.2e}", traj.final_rho.min_eigenvalue());
}
