//! Regenerates the synthetic instances shipped under `data/`.
//!
//! Usage: cargo run -p gagt-core --example generate_standins -- <data dir>

use std::path::PathBuf;

use gagt::knapsack::{generate_multi_sack, generate_single_sack, to_json, write_orlib_mknap};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    let sk250 = generate_single_sack("sk250-standin", 250, 250);
    let sk100 = generate_single_sack("sk100-standin", 100, 100);
    let mk60 = generate_multi_sack("mk60x30-standin", 60, 30, 60);
    std::fs::write(dir.join("sk250_standin.json"), to_json(&sk250) + "\n")?;
    std::fs::write(dir.join("sk100_standin.json"), to_json(&sk100) + "\n")?;
    std::fs::write(dir.join("mk60x30_standin.dat"), write_orlib_mknap(&[mk60]))?;
    Ok(())
}
