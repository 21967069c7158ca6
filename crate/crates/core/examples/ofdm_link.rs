//! Pilot-based channel estimation and equalization over a doubly dispersive link.

use kn_gabor::config::Command;
use kn_gabor::{run_pipeline, ScenarioConfig};

fn main() -> kn_gabor::Result<()> {
    for snr in [None, Some(30.0), Some(10.0)] {
        let mut cfg = ScenarioConfig::minimal(Command::OfdmDemo);
        cfg.noise.snr_db = snr;
        let r = run_pipeline(&cfg)?.summary;
        println!(
            "snr {:>5}: {} data symbols, SER {:.4}, EVM {:.1} dB, ||H_est - H|| / ||H|| = {:.2e}",
            snr.map_or("inf".to_string(), |s| format!("{s}")),
            r.data_symbols,
            r.ser,
            r.evm_db,
            r.h_est_relative_error
        );
    }
    Ok(())
}
