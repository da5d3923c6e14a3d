//! Key=value run configuration: file parsing, range checks, flag overrides.
//!
//! The file format is one `key = value` pair per line; `#` starts a comment
//! (whole-line or trailing). Unknown keys and out-of-range values are hard
//! errors carrying the offending line, so a typo cannot silently fall back
//! to a default. Command-line flags are applied after the file and win.

use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyKind {
    PerturbedCircle,
    Sphere,
    Ellipse,
    Ellipsoid,
    RandomTrig,
}

impl fmt::Display for BodyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BodyKind::PerturbedCircle => "perturbed-circle",
            BodyKind::Sphere => "sphere",
            BodyKind::Ellipse => "ellipse",
            BodyKind::Ellipsoid => "ellipsoid",
            BodyKind::RandomTrig => "random-trig",
        };
        f.write_str(s)
    }
}

/// Resolved settings for one run; defaults, then file, then flags.
#[derive(Debug, Clone)]
pub struct Settings {
    pub n: usize,
    pub alpha: f64,
    pub resolution: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub body: Option<BodyKind>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub amp: f64,
    pub c_cfl: f64,
    pub normalize: bool,
    pub stop_ratio: Option<f64>,
    pub max_steps: Option<u64>,
    pub min_volume: f64,
    pub record_every: u64,
    pub snapshot_every: u64,
    pub h0: f64,
    pub sweep: Option<(f64, f64, usize)>,
    pub n_max: usize,
    pub alpha_samples: usize,
    pub theta_samples: usize,
    pub theta_max: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            n: 1,
            alpha: 1.0,
            resolution: 256,
            seed: 0,
            out_dir: PathBuf::from("."),
            body: None,
            a: 1.3,
            b: 1.0,
            c: 0.8,
            amp: 0.05,
            c_cfl: 0.9,
            normalize: true,
            stop_ratio: None,
            max_steps: None,
            min_volume: 1e-6,
            record_every: 100,
            snapshot_every: 0,
            h0: 1.3,
            sweep: None,
            n_max: 10,
            alpha_samples: 1000,
            theta_samples: 1000,
            theta_max: 10.0,
        }
    }
}

fn parse_num<T: core::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse::<T>()
        .map_err(|_| anyhow::anyhow!("key '{key}': cannot parse '{raw}'"))
}

impl Settings {
    /// Apply one key=value pair; errors name the key and the constraint.
    fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "n" => {
                let v: usize = parse_num(key, raw)?;
                if v != 1 && v != 2 {
                    bail!("key 'n': must be 1 or 2, got {v}");
                }
                self.n = v;
            }
            "alpha" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v > 0.0) || !v.is_finite() {
                    bail!("key 'alpha': must be positive, got {raw}");
                }
                self.alpha = v;
            }
            "resolution" => {
                let v: usize = parse_num(key, raw)?;
                if v < gcf_core::grid::MIN_AXIS {
                    bail!("key 'resolution': must be >= {}, got {v}", gcf_core::grid::MIN_AXIS);
                }
                self.resolution = v;
            }
            "seed" => self.seed = parse_num(key, raw)?,
            "out_dir" => self.out_dir = PathBuf::from(raw),
            "body" => {
                self.body = Some(match raw {
                    "perturbed-circle" => BodyKind::PerturbedCircle,
                    "sphere" => BodyKind::Sphere,
                    "ellipse" => BodyKind::Ellipse,
                    "ellipsoid" => BodyKind::Ellipsoid,
                    "random-trig" => BodyKind::RandomTrig,
                    other => bail!(
                        "key 'body': unknown body '{other}' (perturbed-circle, sphere, \
                         ellipse, ellipsoid, random-trig)"
                    ),
                });
            }
            "a" | "b" | "c" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v > 0.0) || !v.is_finite() {
                    bail!("key '{key}': semi-axis must be positive, got {raw}");
                }
                match key {
                    "a" => self.a = v,
                    "b" => self.b = v,
                    _ => self.c = v,
                }
            }
            "amp" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v >= 0.0) || !v.is_finite() {
                    bail!("key 'amp': must be nonnegative, got {raw}");
                }
                self.amp = v;
            }
            "c_cfl" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v > 0.0 && v <= 1.0) {
                    bail!("key 'c_cfl': must lie in (0, 1], got {raw}");
                }
                self.c_cfl = v;
            }
            "normalize" => {
                self.normalize = match raw {
                    "true" => true,
                    "false" => false,
                    other => bail!("key 'normalize': expected true or false, got '{other}'"),
                };
            }
            "stop_ratio" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v >= 0.0) || !v.is_finite() {
                    bail!("key 'stop_ratio': must be nonnegative, got {raw}");
                }
                self.stop_ratio = Some(v);
            }
            "max_steps" => {
                let v: u64 = parse_num(key, raw)?;
                if v == 0 {
                    bail!("key 'max_steps': must be >= 1");
                }
                self.max_steps = Some(v);
            }
            "min_volume" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v > 0.0) {
                    bail!("key 'min_volume': must be positive, got {raw}");
                }
                self.min_volume = v;
            }
            "record_every" => {
                let v: u64 = parse_num(key, raw)?;
                if v == 0 {
                    bail!("key 'record_every': must be >= 1");
                }
                self.record_every = v;
            }
            "snapshot_every" => self.snapshot_every = parse_num(key, raw)?,
            "h0" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v > 0.0) || !v.is_finite() {
                    bail!("key 'h0': must be positive, got {raw}");
                }
                self.h0 = v;
            }
            "sweep_lo" | "sweep_hi" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v > 0.0) || !v.is_finite() {
                    bail!("key '{key}': must be positive, got {raw}");
                }
                let (lo, hi, count) = self.sweep.unwrap_or((1.01, 3.0, 24));
                self.sweep = Some(if key == "sweep_lo" { (v, hi, count) } else { (lo, v, count) });
            }
            "sweep_count" => {
                let v: usize = parse_num(key, raw)?;
                if v < 2 {
                    bail!("key 'sweep_count': must be >= 2, got {v}");
                }
                let (lo, hi, _) = self.sweep.unwrap_or((1.01, 3.0, 24));
                self.sweep = Some((lo, hi, v));
            }
            "n_max" => {
                let v: usize = parse_num(key, raw)?;
                if v == 0 {
                    bail!("key 'n_max': must be >= 1");
                }
                self.n_max = v;
            }
            "alpha_samples" | "theta_samples" => {
                let v: usize = parse_num(key, raw)?;
                if v == 0 {
                    bail!("key '{key}': must be >= 1");
                }
                if key == "alpha_samples" {
                    self.alpha_samples = v;
                } else {
                    self.theta_samples = v;
                }
            }
            "theta_max" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v > 0.0) || !v.is_finite() {
                    bail!("key 'theta_max': must be positive, got {raw}");
                }
                self.theta_max = v;
            }
            other => bail!("unknown key '{other}'"),
        }
        Ok(())
    }

    /// Parse a config file body, applying pairs in order.
    pub fn apply_file(&mut self, text: &str, path: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .with_context(|| format!("{path}:{}: malformed line '{line}'", idx + 1))?;
            self.set(key.trim(), raw.trim())
                .with_context(|| format!("{path}:{}", idx + 1))?;
        }
        Ok(())
    }

    /// Apply flag overrides (each flag reuses the keyed range checks).
    pub fn apply_flag(&mut self, key: &str, raw: &str) -> Result<()> {
        self.set(key, raw).with_context(|| format!("flag --{}", key.replace('_', "-")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_pairs_round_trip_with_comments() {
        let mut s = Settings::default();
        s.apply_file("# run setup\nalpha = 1.5\nn=2 # surface\n\nresolution = 48\n", "t.cfg")
            .unwrap();
        assert_eq!(s.alpha, 1.5);
        assert_eq!(s.n, 2);
        assert_eq!(s.resolution, 48);
    }

    #[test]
    fn unknown_key_is_rejected_with_line_context() {
        let mut s = Settings::default();
        let err = s.apply_file("alpha = 1.0\nalpah = 2.0\n", "t.cfg").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("t.cfg:2"), "{msg}");
        assert!(msg.contains("unknown key 'alpah'"), "{msg}");
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let mut s = Settings::default();
        assert!(s.apply_file("alpha = -1\n", "t.cfg").is_err());
        assert!(s.apply_file("n = 3\n", "t.cfg").is_err());
        assert!(s.apply_file("c_cfl = 1.5\n", "t.cfg").is_err());
        assert!(s.apply_file("normalize = yes\n", "t.cfg").is_err());
        assert!(s.apply_file("record_every = 0\n", "t.cfg").is_err());
        assert!(s.apply_file("resolution = 8\n", "t.cfg").is_err());
    }

    #[test]
    fn malformed_line_is_rejected() {
        let mut s = Settings::default();
        let err = s.apply_file("alpha 1.0\n", "t.cfg").unwrap_err();
        assert!(format!("{err:#}").contains("malformed line"), "{err:#}");
    }

    #[test]
    fn flags_override_file_values() {
        let mut s = Settings::default();
        s.apply_file("alpha = 1.0\n", "t.cfg").unwrap();
        s.apply_flag("alpha", "1.5").unwrap();
        assert_eq!(s.alpha, 1.5);
        let err = s.apply_flag("alpha", "0").unwrap_err();
        assert!(format!("{err:#}").contains("--alpha"), "{err:#}");
    }
}
