//! Flat `key = value` run configuration with a fixed schema.
//!
//! Values come from built-in defaults, then an optional config file, then
//! `key=value` arguments on the command line. Unset optional values read `none`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use riesz_core::preprocess::BboxParams;
use riesz_core::representation::{Pooling, RieszConfig};

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy)]
enum Kind {
    Usize,
    U64,
    Float,
    Bool,
    Text,
    Choice(&'static [&'static str]),
}

struct Key {
    name: &'static str,
    kind: Kind,
    optional: bool,
    default: &'static str,
    help: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Key {
    Key { name, kind, optional: false, default, help }
}

const fn opt(name: &'static str, kind: Kind, help: &'static str) -> Key {
    Key { name, kind, optional: true, default: "none", help }
}

const SCHEMA: &[Key] = &[
    key("depth", Kind::Usize, "3", "hierarchy depth K"),
    key("angles", Kind::Usize, "4", "rotations M per layer (multiple of 4)"),
    key("scale_constant", Kind::Float, "1", "layer constant C"),
    key("pooling", Kind::Choice(&["mean", "max"]), "mean", "global pooling"),
    opt("presmooth_sigma", Kind::Float, "Gaussian pre-smoothing width in pixels"),
    opt("data_dir", Kind::Text, "root for relative dataset paths (default: $RIESZ_DATA_DIR)"),
    opt("images", Kind::Text, "IDX image file or directory of class subdirectories"),
    opt("labels", Kind::Text, "IDX label file"),
    opt("limit", Kind::Usize, "use only the first N images"),
    opt("manifest", Kind::Text, "multi-scale test manifest"),
    opt("features", Kind::Text, "feature CSV to read"),
    opt("model", Kind::Text, "model file"),
    opt("output", Kind::Text, "output file or directory"),
    opt("confusion_output", Kind::Text, "confusion matrix CSV written by eval"),
    opt("maps_dir", Kind::Text, "directory receiving every feature map of every image"),
    key("bbox", Kind::Bool, "false", "crop with the bounding-box pipeline before extraction"),
    key("bbox_pad", Kind::Usize, "50", "zero padding before thresholding"),
    key("bbox_threshold", Kind::Float, "0.5", "foreground threshold on the normalized image"),
    key("bbox_enlarge", Kind::Float, "0.4", "relative enlargement of the tight box"),
    key("bbox_format", Kind::Choice(&["pgm", "txt"]), "pgm", "file format of cropped images"),
    key("classifier", Kind::Choice(&["svm", "pca"]), "svm", "classifier family"),
    key("normalize", Kind::Choice(&["auto", "true", "false"]), "auto", "max-abs normalization (auto: svm only)"),
    key("components", Kind::Usize, "20", "PCA subspace dimension"),
    key("svm_reg", Kind::Float, "0.0001", "SVM regularization"),
    key("svm_epochs", Kind::Usize, "50", "SVM epochs"),
    opt("classes", Kind::Usize, "class count (default: largest label + 1)"),
    key("seed", Kind::U64, "0", "seed for training and property inputs"),
    opt("split_per_class", Kind::Usize, "train on this many rows per class, evaluate on the rest"),
    key("split_seed", Kind::U64, "0", "seed of the stratified split"),
    opt("min_accuracy", Kind::Float, "eval fails when any accuracy falls below"),
    key("verify_samples", Kind::Usize, "5", "random inputs per property"),
    key("verify_size", Kind::Usize, "32", "side of random property images"),
    key("fault", Kind::Choice(&["none", "dc"]), "none", "inject a defect into the property suite"),
    key("bench_size", Kind::Usize, "64", "side of benchmark images"),
    key("bench_images", Kind::Usize, "20", "benchmark image count"),
];

fn lookup(name: &str) -> Option<&'static Key> {
    SCHEMA.iter().find(|k| k.name == name)
}

fn check_value(k: &Key, value: &str) -> Result<(), ConfigError> {
    if k.optional && value == "none" {
        return Ok(());
    }
    let bad = |what: &str| ConfigError(format!("{}: {what}, got '{value}'", k.name));
    match k.kind {
        Kind::Usize => value.parse::<usize>().map(drop).map_err(|_| bad("expected a non-negative integer")),
        Kind::U64 => value.parse::<u64>().map(drop).map_err(|_| bad("expected a non-negative integer")),
        Kind::Float => match value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(()),
            _ => Err(bad("expected a finite number")),
        },
        Kind::Bool => match value {
            "true" | "false" => Ok(()),
            _ => Err(bad("expected true or false")),
        },
        Kind::Text => {
            if value.is_empty() {
                Err(bad("expected a value"))
            } else {
                Ok(())
            }
        }
        Kind::Choice(options) => {
            if options.contains(&value) {
                Ok(())
            } else {
                Err(bad(&format!("expected one of {}", options.join(", "))))
            }
        }
    }
}

/// Every schema key with a validated textual value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl RunConfig {
    pub fn defaults() -> Self {
        let mut values: BTreeMap<_, _> = SCHEMA.iter().map(|k| (k.name, k.default.to_string())).collect();
        if let Ok(dir) = std::env::var("RIESZ_DATA_DIR") {
            if !dir.is_empty() {
                values.insert("data_dir", dir);
            }
        }
        Self { values }
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<(), ConfigError> {
        let k = lookup(name).ok_or_else(|| ConfigError(format!("unknown key '{name}'")))?;
        let value = value.trim();
        check_value(k, value)?;
        self.values.insert(k.name, value.to_string());
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("{origin}:{}: expected 'key = value'", n + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| ConfigError(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn apply_args(&mut self, args: &[String]) -> Result<(), ConfigError> {
        for a in args {
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("expected key=value, got '{a}'")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    fn raw(&self, name: &str) -> &str {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("'{name}' is not a schema key"))
    }

    fn parsed<T: std::str::FromStr>(&self, name: &str) -> T {
        self.raw(name)
            .parse()
            .unwrap_or_else(|_| panic!("'{name}' was validated on assignment"))
    }

    pub fn usize(&self, name: &str) -> usize {
        self.parsed(name)
    }

    pub fn u64(&self, name: &str) -> u64 {
        self.parsed(name)
    }

    pub fn float(&self, name: &str) -> f64 {
        self.parsed(name)
    }

    pub fn flag(&self, name: &str) -> bool {
        self.raw(name) == "true"
    }

    pub fn text(&self, name: &str) -> &str {
        self.raw(name)
    }

    pub fn maybe<T: std::str::FromStr>(&self, name: &str) -> Option<T> {
        match self.raw(name) {
            "none" => None,
            _ => Some(self.parsed(name)),
        }
    }

    pub fn require(&self, name: &str) -> Result<&str, ConfigError> {
        match self.raw(name) {
            "none" => Err(ConfigError(format!("'{name}' must be set for this command"))),
            v => Ok(v),
        }
    }

    /// An output path as given.
    pub fn out_path(&self, name: &str) -> Result<PathBuf, ConfigError> {
        self.require(name).map(PathBuf::from)
    }

    /// A dataset path; relative paths resolve against `data_dir` when it is set.
    pub fn data_path(&self, name: &str) -> Result<PathBuf, ConfigError> {
        let p = PathBuf::from(self.require(name)?);
        Ok(self.resolve(p))
    }

    pub fn resolve(&self, p: PathBuf) -> PathBuf {
        match self.maybe::<String>("data_dir") {
            Some(root) if p.is_relative() => Path::new(&root).join(p),
            _ => p,
        }
    }

    pub fn riesz(&self) -> Result<RieszConfig, ConfigError> {
        let pooling: Pooling = self.text("pooling").parse().map_err(|e| ConfigError(format!("{e}")))?;
        let cfg = RieszConfig::new(self.usize("depth"), self.usize("angles"), self.float("scale_constant"))
            .map_err(|e| ConfigError(e.to_string()))?
            .with_pooling(pooling)
            .with_presmooth(self.maybe("presmooth_sigma"));
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn bbox(&self) -> Result<BboxParams, ConfigError> {
        let p = BboxParams {
            pad: self.usize("bbox_pad"),
            threshold: self.float("bbox_threshold"),
            enlarge: self.float("bbox_enlarge"),
        };
        if !(0.0..=1.0).contains(&p.threshold) || p.enlarge < 0.0 {
            return Err(ConfigError(format!(
                "bbox_threshold must lie in [0, 1] and bbox_enlarge must be non-negative, got {} and {}",
                p.threshold, p.enlarge
            )));
        }
        Ok(p)
    }

    pub fn normalize(&self) -> bool {
        match self.text("normalize") {
            "auto" => self.text("classifier") == "svm",
            v => v == "true",
        }
    }

    pub fn help() -> String {
        let mut s = String::from("configuration keys (key=value):\n");
        for k in SCHEMA {
            s.push_str(&format!("  {:<18} {:<8} {}\n", k.name, k.default, k.help));
        }
        s
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in SCHEMA {
            writeln!(f, "{} = {}", k.name, self.values[k.name])?;
        }
        Ok(())
    }
}
