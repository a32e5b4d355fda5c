//! The run configuration: one JSON document, optionally patched from the
//! command line with `--dotted.path value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vsc_core::data::DatasetTag;
use vsc_core::TrainConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// `mnist` or `fashion-mnist`.
    pub tag: String,
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    /// Optional `sha256sum`-style manifest checked by `verify-data`.
    pub checksums: Option<PathBuf>,
    /// Use only the first `limit` training images.
    pub limit: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            tag: "mnist".into(),
            train_images: "data/mnist/train-images-idx3-ubyte.gz".into(),
            train_labels: "data/mnist/train-labels-idx1-ubyte.gz".into(),
            test_images: "data/mnist/t10k-images-idx3-ubyte.gz".into(),
            test_labels: "data/mnist/t10k-labels-idx1-ubyte.gz".into(),
            checksums: None,
            limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Class-mean `γ` above which a dimension counts as active.
    pub threshold: f64,
    pub traverse_lo: f64,
    pub traverse_hi: f64,
    pub traverse_steps: usize,
    /// Index (within the analysis split) of the image traversals start from.
    pub traverse_sample: usize,
    pub pairs_per_class: usize,
    /// Which split heatmaps, similarities, traversals and eval use.
    pub split: Split,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            threshold: 0.5,
            traverse_lo: -3.0,
            traverse_hi: 3.0,
            traverse_steps: 9,
            traverse_sample: 0,
            pairs_per_class: 1024,
            split: Split::Test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub train: TrainConfig,
    pub analysis: AnalysisConfig,
    /// Runs are written to `<out_dir>/run_<seed>/`.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            train: TrainConfig::default(),
            analysis: AnalysisConfig::default(),
            out_dir: "runs".into(),
        }
    }
}

/// Flag spellings that stand for a dotted path.
pub const ALIASES: &[(&str, &str)] = &[
    ("seed", "train.seed"),
    ("lambda-max", "train.sched.lambda_max"),
    ("out_dir", "out_dir"),
    ("out-dir", "out_dir"),
];

impl RunConfig {
    /// Reads `path` (or starts from the defaults), applies `overrides` in
    /// order, validates, and resolves relative paths against the config
    /// file's directory.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let (mut value, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                let value: Value = serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", p.display())))?;
                (value, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (serde_json::to_value(RunConfig::default()).expect("defaults serialize"), PathBuf::new()),
        };
        // Fill in defaults first so overrides can target keys the file omits.
        let filled: RunConfig = parse(value)?;
        value = serde_json::to_value(filled).expect("config serializes");
        for (key, raw) in overrides {
            apply_override(&mut value, key, raw)?;
        }
        let mut config: RunConfig = parse(value)?;
        config.train.validate().map_err(CliError::Usage)?;
        config.tag()?;
        if !(config.analysis.threshold > 0.0 && config.analysis.threshold < 1.0) {
            return Err(CliError::Usage("analysis.threshold must lie in (0, 1)".into()));
        }
        config.resolve_paths(&base);
        Ok(config)
    }

    pub fn tag(&self) -> Result<DatasetTag, CliError> {
        self.data
            .tag
            .parse()
            .map_err(|e| CliError::Usage(format!("data.tag: {e}")))
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(format!("run_{}", self.train.seed))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.train_images);
        fix(&mut self.data.train_labels);
        fix(&mut self.data.test_images);
        fix(&mut self.data.test_labels);
        if let Some(c) = self.data.checksums.as_mut() {
            fix(c);
        }
        fix(&mut self.out_dir);
    }
}

fn parse(value: Value) -> Result<RunConfig, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
}

/// Replaces the leaf at `key` (a dotted path) with `raw`, read as JSON when
/// possible and as a plain string otherwise.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<(), CliError> {
    let unknown = || CliError::Usage(format!("unknown config key --{key}"));
    let mut node = root;
    for part in key.split('.') {
        node = node.as_object_mut().ok_or_else(unknown)?.get_mut(part).ok_or_else(unknown)?;
    }
    if node.is_object() {
        return Err(CliError::Usage(format!("--{key} names a section, not a value")));
    }
    *node = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok(())
}

/// `(dotted.path, raw value)` pairs, in command-line order.
pub type Overrides = Vec<(String, String)>;

/// Splits `--dotted.key value` pairs (and aliases) out of `args`, returning
/// the remaining arguments and the overrides in order.
pub fn extract_overrides(args: &[String]) -> Result<(Vec<String>, Overrides), CliError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg.clone());
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n, Some(v.to_owned())),
            None => (flag, None),
        };
        let path = ALIASES
            .iter()
            .find(|(alias, _)| *alias == name)
            .map(|(_, p)| (*p).to_owned())
            .or_else(|| name.contains('.').then(|| name.to_owned()));
        match path {
            Some(path) => {
                let value = match inline {
                    Some(v) => v,
                    None => iter
                        .next()
                        .cloned()
                        .ok_or_else(|| CliError::Usage(format!("--{name} needs a value")))?,
                };
                overrides.push((path, value));
            }
            None => rest.push(arg.clone()),
        }
    }
    Ok((rest, overrides))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overrides_are_split_from_other_flags() {
        let (rest, ov) = extract_overrides(&strings(&[
            "train",
            "--config",
            "c.json",
            "--seed",
            "7",
            "--train.sched.start_epoch=3",
            "--lambda-max",
            "0",
        ]))
        .unwrap();
        assert_eq!(rest, strings(&["train", "--config", "c.json"]));
        assert_eq!(
            ov,
            vec![
                ("train.seed".into(), "7".into()),
                ("train.sched.start_epoch".into(), "3".into()),
                ("train.sched.lambda_max".into(), "0".into())
            ]
        );
        assert!(extract_overrides(&strings(&["--seed"])).is_err());
    }

    #[test]
    fn overrides_patch_leaves() {
        let c = RunConfig::load(
            None,
            &[
                ("train.seed".into(), "7".into()),
                ("data.tag".into(), "fashion-mnist".into()),
                ("analysis.split".into(), "train".into()),
            ],
        )
        .unwrap();
        assert_eq!(c.train.seed, 7);
        assert_eq!(c.tag().unwrap(), DatasetTag::FashionMnist);
        assert_eq!(c.analysis.split, Split::Train);
        assert_eq!(c.run_dir(), PathBuf::from("runs/run_7"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for key in ["train.sede", "train", "nope.x"] {
            assert!(matches!(
                RunConfig::load(None, &[(key.into(), "1".into())]),
                Err(CliError::Usage(_))
            ));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"train": {"epochs": 2, "bogus": 1}}"#).unwrap();
        assert!(matches!(RunConfig::load(Some(&path), &[]), Err(CliError::Usage(_))));
    }

    #[test]
    fn file_values_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"train": {"epochs": 2}, "out_dir": "out"}"#).unwrap();
        let c = RunConfig::load(Some(&path), &[("train.epochs".into(), "3".into())]).unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.out_dir, dir.path().join("out"));
        assert_eq!(c.data.train_images, dir.path().join("data/mnist/train-images-idx3-ubyte.gz"));
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        assert!(RunConfig::load(None, &[("train.epochs".into(), "0".into())]).is_err());
        assert!(RunConfig::load(None, &[("data.tag".into(), "cifar".into())]).is_err());
        assert!(RunConfig::load(None, &[("analysis.threshold".into(), "1.5".into())]).is_err());
    }
}
