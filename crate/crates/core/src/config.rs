//! Key=value configuration covering all pipeline parameters.

use std::fs;
use std::path::Path;

use crate::cluster::{DescriptorWeighting, Measure};
use crate::homogeneity::MergeParams;
use crate::synth::NoiseParams;
use crate::tracker::TrackerParams;
use crate::{Error, Result};

/// Full pipeline configuration; `Default` is the published parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub merge: MergeParams,
    pub tracker: TrackerParams,
    pub noise: NoiseParams,
    pub workers: usize,
    pub measure: Measure,
    pub weighting: DescriptorWeighting,
    pub behind_literal: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            merge: MergeParams::default(),
            tracker: TrackerParams::default(),
            noise: NoiseParams::default(),
            workers: 1,
            measure: Measure::default(),
            weighting: DescriptorWeighting::default(),
            behind_literal: false,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.merge.validate()?;
        self.tracker.validate()?;
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.noise.depth_sigma < 0.0 || self.noise.intensity_rel_sigma < 0.0 {
            return Err(Error::Config("noise sigmas must be non-negative".into()));
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment, blank lines are
    /// ignored, unknown keys are errors.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key=value, got {raw:?}", lineno + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {}: {key} expects {what}, got {value:?}", lineno + 1));
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad("a number"));
            match key {
                "t_z" => cfg.merge.t_z = num(value)?,
                "t_phi" => cfg.merge.t_phi = num(value)?,
                "alpha_z" => cfg.merge.alpha_z = num(value)?,
                "alpha_phi" => cfg.merge.alpha_phi = num(value)?,
                "size_min" => cfg.tracker.size_min = value.parse().map_err(|_| bad("an integer"))?,
                "t_d" => cfg.tracker.t_d = num(value)?,
                "t_phi_track" => cfg.tracker.t_phi_track = num(value)?,
                "r_th" => cfg.tracker.r_th = num(value)?,
                "d_min" => cfg.tracker.d_min = num(value)?,
                "init_frames" => cfg.tracker.init_frames = value.parse().map_err(|_| bad("an integer"))?,
                "noise_depth_sigma" => cfg.noise.depth_sigma = num(value)?,
                "noise_intensity_rel" => cfg.noise.intensity_rel_sigma = num(value)?,
                "workers" => cfg.workers = value.parse().map_err(|_| bad("an integer"))?,
                "measure" => {
                    cfg.measure = match value {
                        "fused" => Measure::Fused,
                        "baseline" => Measure::Baseline,
                        _ => return Err(bad("fused or baseline")),
                    }
                }
                "weighting" => {
                    cfg.weighting = match value {
                        "area" => DescriptorWeighting::Area,
                        "unweighted" => DescriptorWeighting::Unweighted,
                        _ => return Err(bad("area or unweighted")),
                    }
                }
                "behind_literal" => {
                    cfg.behind_literal = match value {
                        "true" | "1" => true,
                        "false" | "0" => false,
                        _ => return Err(bad("true or false")),
                    }
                }
                _ => return Err(Error::Config(format!("line {}: unknown key {key:?}", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        Config::parse(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_table() {
        let c = Config::default();
        assert_eq!(c.merge.t_z, 0.04);
        assert_eq!(c.merge.t_phi, 0.009);
        assert_eq!(c.merge.alpha_z, 8.0 / std::f64::consts::PI);
        assert_eq!(c.merge.alpha_phi, 4.0 / 3.0);
        assert_eq!(c.tracker.size_min, 200);
        assert_eq!(c.tracker.t_d, 0.1);
        assert_eq!(c.tracker.r_th, 0.1);
        assert_eq!(c.tracker.d_min, 0.1);
        assert_eq!(c.tracker.init_frames, 30);
        assert_eq!(c.measure, Measure::Fused);
        assert_eq!(c.weighting, DescriptorWeighting::Area);
        assert!(!c.behind_literal);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let c = Config::parse("# comment\nt_z = 0.05\nworkers=4\nmeasure=baseline # trailing\n\nbehind_literal=1\n").unwrap();
        assert_eq!(c.merge.t_z, 0.05);
        assert_eq!(c.workers, 4);
        assert_eq!(c.measure, Measure::Baseline);
        assert!(c.behind_literal);
        // untouched keys keep defaults
        assert_eq!(c.merge.t_phi, 0.009);
    }

    #[test]
    fn rejects_unknown_key() {
        let err = Config::parse("tz=0.05\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::parse("t_z=abc").is_err());
        assert!(Config::parse("t_z").is_err());
        assert!(Config::parse("workers=0").is_err());
        assert!(Config::parse("measure=other").is_err());
        assert!(Config::parse("t_z=-1").is_err());
    }
}
