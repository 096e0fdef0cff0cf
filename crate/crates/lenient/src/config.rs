//! Run configuration: a single key=value file covering seeds, fractions,
//! cutoffs and length bounds, overridable by CLI flags, and embedded into
//! every output artifact for provenance.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corruptor::CorruptionConfig;
use crate::error::LenientError;
use crate::pipeline::{EmitKind, PipelineConfig};
use crate::train::Profile;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub profile: String,
    pub seed: u64,
    pub jobs: usize,
    /// Synthetic corpus size (files) for `synth`.
    pub files: usize,
    /// Target file sizes in tokens.
    pub file_tokens_min: usize,
    pub file_tokens_max: usize,
    pub drop_fraction: f64,
    pub insert_fraction: f64,
    pub stutter_probability: f64,
    pub double_mutation_fraction: f64,
    pub beam_k: usize,
    pub short_fragment_threshold: usize,
    pub epochs: usize,
    pub emit: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = CorruptionConfig::default();
        let p = PipelineConfig::default();
        RunConfig {
            profile: "desk".into(),
            seed: 7,
            jobs: 2,
            files: 12_000,
            file_tokens_min: 60,
            file_tokens_max: 400,
            drop_fraction: c.drop_fraction,
            insert_fraction: c.insert_fraction,
            stutter_probability: c.stutter_probability,
            double_mutation_fraction: c.double_mutation_fraction,
            beam_k: p.beam_k,
            short_fragment_threshold: p.short_fragment_threshold,
            epochs: 10,
            emit: "both".into(),
        }
    }
}

impl RunConfig {
    pub fn corruption(&self) -> CorruptionConfig {
        CorruptionConfig {
            drop_fraction: self.drop_fraction,
            insert_fraction: self.insert_fraction,
            stutter_probability: self.stutter_probability,
            double_mutation_fraction: self.double_mutation_fraction,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            short_fragment_threshold: self.short_fragment_threshold,
            beam_k: self.beam_k,
            skip_blockfix_when_balanced: true,
            emit: match self.emit.as_str() {
                "ast" => EmitKind::Ast,
                "code" => EmitKind::Code,
                _ => EmitKind::Both,
            },
        }
    }

    pub fn train_profile(&self) -> Result<Profile, LenientError> {
        let mut p = Profile::by_name(&self.profile)?;
        p.epochs = self.epochs;
        Ok(p)
    }

    /// key=value text form, one key per line, in declaration order.
    pub fn to_kv(&self) -> String {
        let json = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = json {
            for (k, v) in map {
                let text = match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                writeln!(out, "{k}={text}").expect("string write");
            }
        }
        out
    }

    pub fn from_kv(text: &str) -> Result<RunConfig, LenientError> {
        let mut cfg = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LenientError::Config(format!("line {}: missing `=`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, LenientError> {
        Self::from_kv(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), LenientError> {
        let bad = |e: &dyn std::fmt::Display| LenientError::Config(format!("{key}: {e}"));
        match key {
            "profile" => self.profile = value.to_string(),
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "jobs" => self.jobs = value.parse().map_err(|e| bad(&e))?,
            "files" => self.files = value.parse().map_err(|e| bad(&e))?,
            "file_tokens_min" => self.file_tokens_min = value.parse().map_err(|e| bad(&e))?,
            "file_tokens_max" => self.file_tokens_max = value.parse().map_err(|e| bad(&e))?,
            "drop_fraction" => self.drop_fraction = value.parse().map_err(|e| bad(&e))?,
            "insert_fraction" => self.insert_fraction = value.parse().map_err(|e| bad(&e))?,
            "stutter_probability" => {
                self.stutter_probability = value.parse().map_err(|e| bad(&e))?
            }
            "double_mutation_fraction" => {
                self.double_mutation_fraction = value.parse().map_err(|e| bad(&e))?
            }
            "beam_k" => self.beam_k = value.parse().map_err(|e| bad(&e))?,
            "short_fragment_threshold" => {
                self.short_fragment_threshold = value.parse().map_err(|e| bad(&e))?
            }
            "epochs" => self.epochs = value.parse().map_err(|e| bad(&e))?,
            "emit" => self.emit = value.to_string(),
            other => return Err(LenientError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LenientError> {
        self.corruption().validate().map_err(LenientError::Config)?;
        if self.beam_k == 0 || self.short_fragment_threshold == 0 {
            return Err(LenientError::Config("beam_k and threshold must be >= 1".into()));
        }
        if self.file_tokens_min > self.file_tokens_max {
            return Err(LenientError::Config("file_tokens_min > file_tokens_max".into()));
        }
        Profile::by_name(&self.profile)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.seed = 99;
        cfg.drop_fraction = 0.4;
        let text = cfg.to_kv();
        let back = RunConfig::from_kv(&text).unwrap();
        assert_eq!(back.seed, 99);
        assert_eq!(back.drop_fraction, 0.4);
        assert_eq!(back.profile, "desk");
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::from_kv("bogus=1").is_err());
    }

    #[test]
    fn invalid_fractions_rejected() {
        assert!(RunConfig::from_kv("drop_fraction=0.9\ninsert_fraction=0.9").is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = RunConfig::from_kv("# a comment\n\nseed=3\n").unwrap();
        assert_eq!(cfg.seed, 3);
    }
}
