use spatcon_core::harness::{sweep, MacFamily, SweepConfig};
use spatcon_core::outage::{LinkSpec, PathLossModel};
use spatcon_core::pointprocess::Model;
use spatcon_core::rng::derive_seed;

fn main() {
    let ms = [2u32, 3, 4, 5, 6];
    let grid: Vec<f64> = ms.iter().map(|&m| (m as f64).powi(-2)).collect();
    let mut cfg = SweepConfig::new(
        Model::Lattice { spacing: 1.0, rotated: false },
        MacFamily::UnreasonableTdma,
        PathLossModel::Singular { alpha: 4.0 },
        LinkSpec::new(2.0).unwrap(),
    );
    cfg.eta_grid = grid;
    cfg.n_reps = 800;
    cfg.seed = derive_seed(5, &[20]);
    let sw = sweep(&cfg).unwrap();
    for pt in &sw.points {
        println!("eta={:.5} p={:.6} se={:.3e}", pt.eta, pt.p_success, pt.std_err);
    }
    match spatcon_core::harness::classify(&sw, None) {
        Ok(l) => println!("{l:?}"),
        Err(e) => println!("classify error: {e}"),
    }
}
