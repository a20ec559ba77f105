//! Where a command's bi-point instance comes from, and seeding.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bipoint_core::gap::build_golden;
use bipoint_core::instance::{parse_instance, synthesize_random_bipoint, write_instance, BiPointSolution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::sha256_hex;

#[derive(Clone, Debug, Default, clap::Args)]
pub struct SourceArgs {
    /// Instance file in the line format (`k a b`, `facility`, `client`, `dist`).
    #[arg(long, conflicts_with_all = ["random", "golden"])]
    pub instance: Option<PathBuf>,
    /// Random Euclidean instance: clients,|F1|,|F2|,k.
    #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with = "golden")]
    pub random: Option<Vec<usize>>,
    /// Explicit golden instance B(k).
    #[arg(long)]
    pub golden: Option<usize>,
}

pub struct Loaded {
    pub sol: BiPointSolution,
    pub sha256: String,
}

impl SourceArgs {
    pub fn random(spec: [usize; 4]) -> Self {
        SourceArgs { random: Some(spec.to_vec()), ..Default::default() }
    }

    pub fn load(&self, seed: u64) -> Result<Loaded> {
        let sol = if let Some(p) = &self.instance {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_instance(&text).with_context(|| format!("parsing {}", p.display()))?
        } else if let Some(r) = &self.random {
            let [c, f1, f2, k] = r[..] else { bail!("--random needs clients,f1,f2,k") };
            synthesize_random_bipoint(c, f1, f2, k, seed)?
        } else if let Some(k) = self.golden {
            build_golden(k)?.to_bipoint(20_000)?
        } else {
            bail!("no instance: pass --instance, --random or --golden")
        };
        Ok(Loaded { sha256: instance_sha(&sol), sol })
    }
}

/// Hash of the canonical text form.
pub fn instance_sha(sol: &BiPointSolution) -> String {
    sha256_hex(write_instance(sol).as_bytes())
}

/// `BIPOINT_SEED` wins over the flag.
pub fn effective_seed(flag: u64) -> Result<u64> {
    match std::env::var("BIPOINT_SEED") {
        Ok(s) => s.trim().parse().with_context(|| format!("BIPOINT_SEED={s:?} is not an integer")),
        Err(_) => Ok(flag),
    }
}

/// Independent stream per trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}
