//! Output directory handling and the per-run `manifest.json`.

use std::collections::hash_map::RandomState;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clockstab::Result;
use serde::Serialize;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct Manifest<'a, P: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: Vec<String>,
    parameters: &'a P,
    inputs: &'a [String],
    seeds: &'a [u64],
    threads: usize,
    outputs: &'a [String],
    wall_time_s: f64,
}

/// One command invocation writing into `out`.
pub struct RunLog {
    command: &'static str,
    out: PathBuf,
    threads: usize,
    started: Instant,
    inputs: Vec<String>,
    seeds: Vec<u64>,
    outputs: Vec<String>,
}

impl RunLog {
    pub fn start(command: &'static str, out: &Path, threads: usize) -> Result<Self> {
        std::fs::create_dir_all(out)?;
        Ok(Self {
            command,
            out: out.to_path_buf(),
            threads,
            started: Instant::now(),
            inputs: Vec::new(),
            seeds: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn seeds(&mut self, seeds: impl IntoIterator<Item = u64>) {
        self.seeds.extend(seeds);
    }

    /// Path inside the output directory, recorded as an output.
    pub fn output_path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.output_path(name);
        std::fs::write(path, contents)?;
        Ok(())
    }

    pub fn finish<P: Serialize>(self, parameters: &P) -> Result<()> {
        let m = Manifest {
            tool: "clockstab",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: std::env::args().collect(),
            parameters,
            inputs: &self.inputs,
            seeds: &self.seeds,
            threads: self.threads,
            outputs: &self.outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        std::fs::write(self.out.join(MANIFEST_FILE), serde_json::to_string_pretty(&m)?)?;
        Ok(())
    }
}

/// The explicit seed, or a fresh one from the process's hash randomness.
pub fn seed_or_random(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let mut h = RandomState::new().build_hasher();
        h.write_u128(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos())
                .unwrap_or_default(),
        );
        h.finish()
    })
}
