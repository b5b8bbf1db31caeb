//! Flat key-value run configuration.
//!
//! Values are resolved in the order flags > config file > preset > defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

/// Every key accepted in a `--config` TOML file. All keys are optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    // model
    pub omega_c: Option<f64>,
    pub omega_a: Option<f64>,
    pub kappa: Option<f64>,
    pub lambda: Option<f64>,
    pub n1: Option<f64>,
    pub n2_ratio: Option<f64>,
    pub n2: Option<f64>,
    // output
    pub out_dir: Option<String>,
    pub reproducible: Option<bool>,
    pub jobs: Option<usize>,
    // stability scan / thresholds
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub points: Option<usize>,
    // sweep
    pub ratio_points: Option<usize>,
    pub lambda_points: Option<usize>,
    // evolve
    pub t_final: Option<f64>,
    pub sample_dt: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub seed_magnitude: Option<f64>,
    pub seed_phase: Option<f64>,
    pub init_s1: Option<[f64; 3]>,
    pub init_s2: Option<[f64; 3]>,
    pub init_a: Option<[f64; 2]>,
    pub from: Option<String>,
    pub parity_flip: Option<bool>,
    // quantum
    pub n_max: Option<usize>,
    pub dt: Option<f64>,
    pub init: Option<String>,
    pub q_points: Option<usize>,
    pub lobe_threshold: Option<f64>,
    pub sample_interval: Option<f64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &Settings) -> Self {
        overlay!(self, top;
            omega_c, omega_a, kappa, lambda, n1, n2_ratio, n2, out_dir, reproducible, jobs,
            lambda_min, lambda_max, points, ratio_points, lambda_points,
            t_final, sample_dt, rtol, atol, seed_magnitude, seed_phase, init_s1, init_s2, init_a,
            from, parity_flip, n_max, dt, init, q_points, lobe_threshold, sample_interval,
        );
        // an explicit n2 on a higher layer beats a ratio from a lower one and
        // vice versa
        if top.n2.is_some() && top.n2_ratio.is_none() {
            self.n2_ratio = None;
        }
        if top.n2_ratio.is_some() && top.n2.is_none() {
            self.n2 = None;
        }
        // likewise for the two ways of giving an initial spin state
        if top.from.is_some() && top.init_s1.is_none() && top.init_s2.is_none() {
            self.init_s1 = None;
            self.init_s2 = None;
        }
        if (top.init_s1.is_some() || top.init_s2.is_some()) && top.from.is_none() {
            self.from = None;
        }
        self
    }

    /// Resolves the layers `defaults < preset < file < flags`.
    pub fn resolve(preset: Settings, file: Option<Settings>, flags: &Settings) -> Settings {
        let mut s = defaults().overlay(&preset);
        if let Some(f) = file {
            s = s.overlay(&f);
        }
        s.overlay(flags)
    }

    pub fn model_params(&self) -> nsdicke::Result<nsdicke::ModelParams> {
        let n1 = self.n1.unwrap_or(1.0);
        let n2 = match (self.n2, self.n2_ratio) {
            (Some(n2), _) => n2,
            (None, Some(r)) => r * n1,
            (None, None) => 0.3 * n1,
        };
        nsdicke::ModelParams::new(
            self.omega_c.unwrap_or(1.0),
            self.omega_a.unwrap_or(1.0),
            self.kappa.unwrap_or(1.0),
            self.lambda.unwrap_or(2.0),
            n1,
            n2,
        )
    }
}

pub fn defaults() -> Settings {
    Settings {
        omega_c: Some(1.0),
        omega_a: Some(1.0),
        kappa: Some(1.0),
        lambda: Some(2.0),
        n1: Some(1.0),
        n2_ratio: Some(0.3),
        out_dir: Some("out".into()),
        reproducible: Some(false),
        ..Settings::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let preset = Settings { lambda: Some(1.0), t_final: Some(10.0), ..Settings::default() };
        let file = Settings { lambda: Some(1.5), kappa: Some(0.5), ..Settings::default() };
        let flags = Settings { lambda: Some(3.0), ..Settings::default() };
        let s = Settings::resolve(preset, Some(file), &flags);
        assert_eq!(s.lambda, Some(3.0));
        assert_eq!(s.kappa, Some(0.5));
        assert_eq!(s.t_final, Some(10.0));
        assert_eq!(s.omega_c, Some(1.0));
    }

    #[test]
    fn n2_layers() {
        let file = Settings { n2: Some(0.1), ..Settings::default() };
        let s = Settings::resolve(Settings::default(), Some(file), &Settings::default());
        assert_eq!(s.model_params().unwrap().n2, 0.1);
        let flags = Settings { n2_ratio: Some(0.5), ..Settings::default() };
        let s = Settings::resolve(Settings::default(), Some(Settings { n2: Some(0.1), ..Settings::default() }), &flags);
        assert_eq!(s.model_params().unwrap().n2, 0.5);
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let s: Settings = toml::from_str("lambda = 1.2\nn2_ratio = 0.3\ninit_s1 = [1.0, 0.0, 0.0]\n").unwrap();
        assert_eq!(s.lambda, Some(1.2));
        assert_eq!(s.init_s1, Some([1.0, 0.0, 0.0]));
        assert!(toml::from_str::<Settings>("lamda = 1.2").is_err());
    }
}
