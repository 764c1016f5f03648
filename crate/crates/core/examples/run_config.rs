//! Runs a config through the batch pipeline and lists the checksummed outputs.
//!
//!     cargo run --example run_config -- configs/droplet.toml /tmp/droplet-run

use std::path::PathBuf;

use sgs_core::cli::{output_checksums, run};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| "configs/droplet.toml".into()));
    let target = args.next().map(PathBuf::from);
    let dir = run(&config, target.as_deref())?;
    println!("{}", dir.display());
    for (file, sha) in output_checksums(&dir)? {
        println!("  {sha}  {file}");
    }
    Ok(())
}
