//! Exact sampling on a small box, checked against enumeration.

use rc_glauber::{cftp_sample, exact_measure, BoundaryCondition, Conditioning, Dynamics, Lattice, RcParams};

fn main() -> rc_glauber::Result<()> {
    let lat = Lattice::new(3)?;
    let bc = BoundaryCondition::wired(&lat);
    let params = RcParams::new(0.5, 2.0)?;

    let exact = exact_measure(&lat, &bc, params, &Conditioning::none())?;
    let dynamics = Dynamics::new(&lat, &bc, params)?;
    let samples = 20_000;
    let mut open = vec![0u32; lat.num_edges()];
    for s in 0..samples {
        let out = cftp_sample(&dynamics, 42, s, rc_glauber::CFTP_DEFAULT_CAP)?;
        for e in out.config.open_edges() {
            open[e] += 1;
        }
    }
    println!("Z = {:.6}", exact.partition_function());
    println!("edge  exact     cftp");
    for (e, p) in exact.edge_marginals().iter().enumerate() {
        println!("{e:>4}  {p:.5}  {:.5}", open[e] as f64 / samples as f64);
    }
    Ok(())
}
