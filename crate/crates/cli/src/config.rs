//! Run parameters shared by every subcommand. A JSON config file supplies
//! defaults; flags given on the command line take precedence.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// JSON config file; keys are the long flag names with `_` for `-`.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Subcommand path recorded in config echoes, e.g. `bounds thm32`.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// Lattice dimension.
    #[arg(long)]
    pub dim: Option<usize>,

    /// delta | coulomb | powerdecay | logpow | random | file:<path>.
    #[arg(long)]
    pub potential: Option<String>,

    /// Coupling scale for delta, coulomb and powerdecay.
    #[arg(long)]
    pub scale: Option<f64>,

    /// Decay exponent p of powerdecay, `(|x|^2+1)^{-p}`.
    #[arg(long)]
    pub exponent: Option<f64>,

    /// Box radius at which infinite families are cut off.
    #[arg(long)]
    pub truncate: Option<i64>,

    /// Support size of a random potential.
    #[arg(long)]
    pub count: Option<usize>,

    /// Support radius of a random potential.
    #[arg(long)]
    pub support_radius: Option<i64>,

    /// Largest value of a random potential.
    #[arg(long)]
    pub vmax: Option<f64>,

    /// Coupling grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,

    /// Spectral parameter grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,

    /// Box radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<i64>>,

    /// Base quadrature grid for the Green function.
    #[arg(long)]
    pub m: Option<usize>,

    /// Lattice point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<i64>>,

    /// Exponent q of the weak classes and of the logpow family.
    #[arg(long)]
    pub q: Option<f64>,

    /// Lower and upper ratio band for thm31, e.g. `0.01,100`.
    #[arg(long, value_delimiter = ',')]
    pub band: Option<Vec<f64>>,

    /// Sparse set sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,

    /// Sparse growth ratios, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,

    /// ray | diagonal.
    #[arg(long)]
    pub pattern: Option<String>,

    /// Value law on sparse sets: power | log (power uses `--law-q`).
    #[arg(long)]
    pub law: Option<String>,

    /// Exponent of the power value law.
    #[arg(long)]
    pub law_q: Option<f64>,

    /// Largest index n of the test-function sequence.
    #[arg(long)]
    pub n_max: Option<u32>,

    /// Truncation multiplier of the test-function sequence.
    #[arg(long)]
    pub r_mult: Option<f64>,

    /// Box radius for negative counts in cor53 and the sparse Hardy side.
    #[arg(long)]
    pub count_radius: Option<i64>,

    /// Hardy weight: delta | coulomb | powerdecay | logpow | file:<path>.
    #[arg(long)]
    pub weight: Option<String>,

    /// Relative tolerance of the subcommand's comparison.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Couplings closer than this relative gap to a threshold are skipped.
    #[arg(long)]
    pub margin: Option<f64>,

    /// Print eigenvalues instead of negative counts (spectrum).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub eigenvalues: Option<bool>,

    /// Seed of the ChaCha generator for random potentials.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker cap; computations are sequential, so any value >= 1 is accepted.
    #[arg(long)]
    pub threads: Option<usize>,

    /// CSV destination (stdout when absent); the config echo goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),* $(,)?) => {
        Params { $($f: $hi.$f.or($lo.$f),)* }
    };
}

impl Params {
    /// Flags in `self` win over values from `file`.
    pub fn over(self, file: Params) -> Params {
        overlay!(
            self, file, config, command, dim, potential, scale, exponent, truncate, count,
            support_radius, vmax, alpha, s, radii, m, x, q, band, n, gamma, pattern, law, law_q,
            n_max, r_mult, count_radius, weight, tol, margin, eigenvalues, seed, threads, out,
        )
    }

    pub fn load(path: &Path) -> Result<Params, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    /// Merges the config file (if any) under the flags and checks that a
    /// recorded subcommand matches the one being run.
    pub fn resolve(self, command: &str) -> Result<Params, CliError> {
        let mut p = match &self.config {
            Some(path) => {
                let file = Params::load(path)?;
                if let Some(c) = &file.command {
                    if c != command {
                        return Err(CliError::usage(format!(
                            "config field `command`: file is for `{c}`, running `{command}`"
                        )));
                    }
                }
                self.clone().over(file)
            }
            None => self,
        };
        p.command = Some(command.to_string());
        p.seed.get_or_insert(0);
        if p.threads == Some(0) {
            return Err(CliError::usage("field `threads`: must be at least 1"));
        }
        Ok(p)
    }

    pub fn echo(&self) -> String {
        let mut p = self.clone();
        p.config = None;
        serde_json::to_string_pretty(&p).expect("params serialize")
    }
}

pub fn require_positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("field `{field}`: must be positive, got {v}")))
    }
}

/// `k` points spaced evenly in log scale on `[lo, hi]`.
pub fn geomspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let flags = Params {
            dim: Some(4),
            ..Params::default()
        };
        let file: Params = serde_json::from_str(r#"{"dim": 3, "q": 1.5, "alpha": [1, 2]}"#).unwrap();
        let p = flags.over(file);
        assert_eq!(p.dim, Some(4));
        assert_eq!(p.q, Some(1.5));
        assert_eq!(p.alpha, Some(vec![1.0, 2.0]));
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = serde_json::from_str::<Params>(r#"{"dimm": 3}"#).unwrap_err().to_string();
        assert!(err.contains("dimm"));
    }

    #[test]
    fn echo_round_trips() {
        let p = Params {
            command: Some("green".into()),
            x: Some(vec![1, -2, 0]),
            seed: Some(9),
            ..Params::default()
        };
        let back: Params = serde_json::from_str(&p.echo()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn geomspace_hits_endpoints() {
        let g = geomspace(1e-2, 1e2, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e-2).abs() < 1e-15 && (g[4] - 1e2).abs() < 1e-10);
        assert!((g[2] - 1.0).abs() < 1e-12);
    }
}
