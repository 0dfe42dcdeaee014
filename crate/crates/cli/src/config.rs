use std::fs;
use std::path::PathBuf;

use blaschke_sums::series::CoefficientSpec;
use blaschke_sums::{BlaschkeProduct, CoefficientSequence};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Options shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Product JSON (`{"zeros": [{"re": 0, "im": 0}, ...]}`): a file path or inline JSON.
    #[arg(long)]
    pub product: Option<String>,
    /// Coefficient JSON (`{"kind": "power", "p": 1}`, ...): a file path or inline JSON.
    #[arg(long)]
    pub coeffs: Option<String>,
    /// Bits carried by boundary points: an integer or "auto".
    #[arg(long)]
    pub precision: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving manifest.json and the command's outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run configuration file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub product: Option<Value>,
    pub coefficients: Option<Value>,
    pub precision_bits: Option<Value>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Precision {
    Auto,
    Bits(u32),
}

/// The resolved configuration echoed into the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub product: Option<Value>,
    pub coefficients: Option<Value>,
    pub precision_bits: Value,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: Value,
}

pub struct Resolved {
    pub config: RunConfig,
    pub precision: Precision,
    pub product: Option<BlaschkeProduct>,
    pub coeffs: Option<CoefficientSequence>,
}

fn load_json(arg: &str, what: &str) -> Result<Value, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg)
            .map_err(|e| CliError::contract(format!("cannot read {what} file '{arg}': {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::contract(format!("invalid {what} JSON: {e}")))
}

fn parse_precision(v: &Value) -> Result<Precision, CliError> {
    match v {
        Value::String(s) if s == "auto" => Ok(Precision::Auto),
        Value::String(s) => s.parse::<u32>().map(Precision::Bits).map_err(|_| {
            CliError::contract(format!(
                "precision must be an integer or \"auto\", got '{s}'"
            ))
        }),
        Value::Number(n) => n
            .as_u64()
            .and_then(|b| u32::try_from(b).ok())
            .map(Precision::Bits)
            .ok_or_else(|| CliError::contract(format!("precision {n} is not a valid bit count"))),
        other => Err(CliError::contract(format!(
            "precision must be an integer or \"auto\", got {other}"
        ))),
    }
}

impl Common {
    pub fn resolve(&self, params: Value) -> Result<Resolved, CliError> {
        let file: RunConfigFile = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::contract(format!("cannot read config '{}': {e}", path.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::contract(format!("invalid config JSON: {e}")))?
            }
            None => RunConfigFile::default(),
        };
        let product_json = match &self.product {
            Some(p) => Some(load_json(p, "product")?),
            None => file.product,
        };
        let coeffs_json = match &self.coeffs {
            Some(c) => Some(load_json(c, "coefficient")?),
            None => file.coefficients,
        };
        let precision_value = match &self.precision {
            Some(p) => Value::String(p.clone()),
            None => file
                .precision_bits
                .unwrap_or_else(|| Value::String("auto".into())),
        };
        let precision = parse_precision(&precision_value)?;
        if precision == Precision::Bits(0) {
            return Err(CliError::contract("precision must be positive"));
        }
        let product = product_json
            .as_ref()
            .map(|v| serde_json::from_value::<BlaschkeProduct>(v.clone()))
            .transpose()
            .map_err(|e| CliError::contract(format!("invalid product: {e}")))?;
        let coeffs = coeffs_json
            .as_ref()
            .map(|v| {
                let spec: CoefficientSpec = serde_json::from_value(v.clone())
                    .map_err(|e| CliError::contract(format!("invalid coefficients: {e}")))?;
                CoefficientSequence::try_from(spec).map_err(CliError::from)
            })
            .transpose()?;
        let config = RunConfig {
            product: product_json,
            coefficients: coeffs_json,
            precision_bits: serde_json::to_value(&precision).expect("serializable"),
            seed: self.seed.or(file.seed).unwrap_or(0),
            output_dir: self
                .out
                .clone()
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            params,
        };
        Ok(Resolved {
            config,
            precision,
            product,
            coeffs,
        })
    }
}

impl Resolved {
    pub fn product(&self) -> Result<&BlaschkeProduct, CliError> {
        self.product
            .as_ref()
            .ok_or_else(|| CliError::contract("--product is required"))
    }

    pub fn coeffs(&self) -> Result<&CoefficientSequence, CliError> {
        self.coeffs
            .as_ref()
            .ok_or_else(|| CliError::contract("--coeffs is required"))
    }

    /// Bits for a computation reaching depth `depth`; "auto" resolves through
    /// the product's precision rule.
    pub fn bits_for(&mut self, depth: usize) -> Result<u32, CliError> {
        let bits = match self.precision {
            Precision::Bits(b) => b,
            Precision::Auto => {
                let f = self.product()?;
                f.required_precision(depth, blaschke_sums::boundary::ACCURACY_BITS)
            }
        };
        self.config.precision_bits = Value::from(bits);
        Ok(bits)
    }

    /// Bits for computations carried in doubles; "auto" means 53.
    pub fn double_bits(&mut self) -> u32 {
        let bits = match self.precision {
            Precision::Bits(b) => b,
            Precision::Auto => blaschke_sums::boundary::ACCURACY_BITS,
        };
        self.config.precision_bits = Value::from(bits);
        bits
    }
}
