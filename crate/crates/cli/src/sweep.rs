//! `sweep-bins`: decoding accuracy of the orientation channel per bin count.

use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use trolleypose::report::write_sweep_csv;
use trolleypose::simulator::{sweep_bins, SweepConfig};

use crate::config::{config_hash, load};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::simulate::{write_file, MANIFEST_FILE};

pub const SWEEP_FILE: &str = "sweep.csv";

pub struct SweepArgs<'a> {
    pub config: &'a Path,
    /// Without an output directory the table goes to standard output.
    pub out: Option<&'a Path>,
    pub seed: Option<u64>,
}

pub fn run(args: &SweepArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut loaded = load::<SweepConfig>(args.config)?;
    if let Some(seed) = args.seed {
        loaded.value.rng_seed = seed;
    }
    let config = &loaded.value;
    let rows = sweep_bins(config).map_err(|e| loaded.reject(args.config, &e))?;

    let Some(out) = args.out else {
        let mut stdout = io::stdout().lock();
        return write_sweep_csv(&mut stdout, &rows)
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::Io(format!("stdout: {e}")));
    };
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_file(&out.join(SWEEP_FILE), |w| write_sweep_csv(w, &rows))?;
    let manifest = RunManifest::new(config_hash(config), config.rng_seed, &[SWEEP_FILE], started.elapsed());
    write_file(&out.join(MANIFEST_FILE), |w| manifest.write(w))
}
