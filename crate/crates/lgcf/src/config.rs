//! Resolved run configuration: defaults, `key=value` config files, and
//! flag overrides, merged in that order.

use anyhow::{bail, Context, Result};
use lgcf_core::model::{Activation, ConvMode, ModelConfig};
use lgcf_core::optimizer::OptimConfig;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub out: PathBuf,
    pub dim: usize,
    pub layers: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub margin: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub mode: ConvMode,
    pub activation: Activation,
    pub cutoffs: Vec<usize>,
    pub init_sigma: f64,
    pub test_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::new(),
            out: PathBuf::from("out"),
            dim: 50,
            layers: 3,
            lr: 0.001,
            weight_decay: 0.005,
            margin: 0.5,
            epochs: 1000,
            batch_size: 1024,
            seed: 42,
            mode: ConvMode::Hyperbolic,
            activation: Activation::Relu,
            cutoffs: vec![10, 20],
            init_sigma: 0.1,
            test_fraction: 0.2,
        }
    }
}

pub fn parse_mode(s: &str) -> Result<ConvMode> {
    match s {
        "hyperbolic" => Ok(ConvMode::Hyperbolic),
        "tangent" => Ok(ConvMode::Tangent),
        other => bail!("unknown mode `{other}` (expected hyperbolic|tangent)"),
    }
}

pub fn parse_activation(s: &str) -> Result<Activation> {
    match s {
        "none" => Ok(Activation::None),
        "relu" => Ok(Activation::Relu),
        other => bail!("unknown activation `{other}` (expected none|relu)"),
    }
}

pub fn mode_name(mode: ConvMode) -> &'static str {
    match mode {
        ConvMode::Hyperbolic => "hyperbolic",
        ConvMode::Tangent => "tangent",
    }
}

pub fn activation_name(activation: Activation) -> &'static str {
    match activation {
        Activation::None => "none",
        Activation::Relu => "relu",
    }
}

pub fn parse_cutoffs(s: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().context("bad cutoff list"))
        .collect::<Result<_>>()?;
    if ks.is_empty() || ks.contains(&0) {
        bail!("cutoff list must be nonempty positive integers");
    }
    Ok(ks)
}

impl RunConfig {
    /// Applies one `key=value` setting; keys mirror the CLI flag names.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data" => self.data = PathBuf::from(value),
            "out" => self.out = PathBuf::from(value),
            "dim" => self.dim = value.parse()?,
            "layers" => self.layers = value.parse()?,
            "lr" => self.lr = value.parse()?,
            "weight-decay" => self.weight_decay = value.parse()?,
            "margin" => self.margin = value.parse()?,
            "epochs" => self.epochs = value.parse()?,
            "batch-size" => self.batch_size = value.parse()?,
            "seed" => self.seed = value.parse()?,
            "mode" => self.mode = parse_mode(value)?,
            "activation" => self.activation = parse_activation(value)?,
            "k" => self.cutoffs = parse_cutoffs(value)?,
            "init-sigma" => self.init_sigma = value.parse()?,
            "test-fraction" => self.test_fraction = value.parse()?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Reads a `key=value` config file; `#` lines and blanks are skipped.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected key=value", path.display(), lineno + 1))?;
            self.apply(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model_config()
            .validate()
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        if self.cutoffs.is_empty() {
            bail!("cutoff list must be nonempty");
        }
        if self.lr < 0.0 || self.weight_decay < 0.0 {
            bail!("lr and weight decay must be nonnegative");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            bail!("test fraction must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            dim: self.dim,
            layers: self.layers,
            activation: self.activation,
            mode: self.mode,
            margin: self.margin,
            init_sigma: self.init_sigma,
            per_layer_hinge: false,
        }
    }

    pub fn optim_config(&self) -> OptimConfig {
        OptimConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
        }
    }

    /// Full resolved configuration as `key=value` lines, the format the
    /// run manifest embeds.
    pub fn to_kv(&self) -> String {
        format!(
            "data={}\nout={}\ndim={}\nlayers={}\nlr={}\nweight-decay={}\nmargin={}\nepochs={}\nbatch-size={}\nseed={}\nmode={}\nactivation={}\nk={}\ninit-sigma={}\ntest-fraction={}\n",
            self.data.display(),
            self.out.display(),
            self.dim,
            self.layers,
            self.lr,
            self.weight_decay,
            self.margin,
            self.epochs,
            self.batch_size,
            self.seed,
            mode_name(self.mode),
            activation_name(self.activation),
            self.cutoffs.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
            self.init_sigma,
            self.test_fraction,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_reference_setup() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.dim, 50);
        assert_eq!(cfg.layers, 3);
        assert_eq!(cfg.lr, 0.001);
        assert_eq!(cfg.weight_decay, 0.005);
        assert_eq!(cfg.epochs, 1000);
        assert_eq!(cfg.cutoffs, vec![10, 20]);
    }

    #[test]
    fn config_file_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply("dim", "16").unwrap();
        cfg.apply("mode", "tangent").unwrap();
        cfg.apply("k", "5, 10").unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, cfg.to_kv()).unwrap();

        let mut loaded = RunConfig::default();
        loaded.load_file(&path).unwrap();
        assert_eq!(loaded, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply("nope", "1").is_err());
        assert!(cfg.apply("mode", "euclidean").is_err());
        assert!(cfg.apply("k", "10,0").is_err());
    }
}
