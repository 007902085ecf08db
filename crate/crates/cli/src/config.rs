use std::path::PathBuf;

use astrong::gadget::require_generator_modulus;
use astrong::zmod::Modulus;
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Trivial,
    Block,
    Search,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Resolved parameters of one run. Paths are kept out of the serialized
/// form so a recorded config does not depend on where files live.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub modulus: u64,
    pub strategy: Option<Strategy>,
    pub n: Option<usize>,
    pub block_size: Option<usize>,
    pub t_goal: Option<usize>,
    pub t: Option<usize>,
    pub seed: u64,
    pub budget: Option<u64>,
    pub levels: usize,
    pub format: Format,
    #[serde(skip)]
    pub inputs: Vec<PathBuf>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(modulus: u64, seed: u64) -> Self {
        ExperimentConfig {
            modulus,
            strategy: None,
            n: None,
            block_size: None,
            t_goal: None,
            t: None,
            seed,
            budget: None,
            levels: 1,
            format: Format::Text,
            inputs: Vec::new(),
            output: None,
        }
    }

    /// The modulus, checked for use by a generator.
    pub fn generator_modulus(&self) -> Result<Modulus, CliError> {
        let m = Modulus::new(self.modulus)?;
        require_generator_modulus(&m, false)?;
        Ok(m)
    }

    pub fn require_n(&self) -> Result<usize, CliError> {
        match self.n {
            Some(n) if n > 0 => Ok(n),
            Some(_) => Err(CliError::Input("--n must be positive".into())),
            None => Err(CliError::Input("--n is required".into())),
        }
    }

    pub fn output_path(&self) -> Result<&std::path::Path, CliError> {
        self.output
            .as_deref()
            .ok_or_else(|| CliError::Input("no output path".into()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
