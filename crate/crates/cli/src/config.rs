//! Typed configuration files: TOML with fixed sections and no unknown keys.
//!
//! Unset keys take documented defaults; the fully resolved configuration is
//! serializable again, and feeding it back reproduces the run exactly.

use cumulus::model::{CloudParams, DiffusionParams};
use cumulus::sim::SimConfig;
use cumulus::spectral::{ClampPolicy, DealiasRule, GridSpec};
use cumulus::stability::DomainSpec;
use cumulus::Dims;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub diffusion: DiffusionSection,
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub c: f64,
    pub a1: f64,
    pub a2: f64,
    pub gamma: f64,
    pub beta_c: f64,
    pub beta_r: f64,
    pub zeta: f64,
    pub d: f64,
    /// Rain influx from the layer above.
    #[serde(default)]
    pub b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSection {
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// 1 or 2.
    pub dims: u8,
    /// Points per dimension (power of two); default 256 in 1D, 128 in 2D.
    pub n: Option<usize>,
    /// Domain edge length; default 50.
    pub length: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// Time step; default 0.02 in 1D, 0.025 in 2D.
    pub h: Option<f64>,
    /// Final time; default 2000 in 1D, 120 in 2D.
    pub t_end: Option<f64>,
    /// Snapshot times; default 20/200/2000 in 1D, 1/10/60/120 in 2D
    /// (clipped to t_end).
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Standard deviation of the initial perturbation; default 0.01.
    pub amplitude: Option<f64>,
    /// 64-bit RNG seed; default 42.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// "none" (default) or "two-thirds".
    pub dealias: Option<DealiasRule>,
    /// "clamp" (default) or "error".
    pub clamp: Option<ClampPolicy>,
    /// Summary cadence in time units; default t_end / 500 (at least h).
    pub summary_every: Option<f64>,
    /// "text" (default), "binary" or "both".
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Binary,
    Both,
}

/// A configuration with every default materialized.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub sim: SimConfig<f64>,
    pub domain: DomainSpec<f64>,
    pub format: OutputFormat,
}

impl Resolved {
    /// The fully resolved configuration as a config file again.
    pub fn to_file(&self) -> ConfigFile {
        let p = &self.sim.params;
        ConfigFile {
            model: ModelSection {
                c: p.c,
                a1: p.a1,
                a2: p.a2,
                gamma: p.gamma,
                beta_c: p.beta_c,
                beta_r: p.beta_r,
                zeta: p.zeta,
                d: p.d,
                b: p.b,
            },
            diffusion: DiffusionSection {
                d1: self.sim.diff.d1,
                d2: self.sim.diff.d2,
            },
            grid: GridSection {
                dims: self.sim.grid.dims.count() as u8,
                n: Some(self.sim.grid.n),
                length: Some(self.sim.grid.length),
            },
            time: TimeSection {
                h: Some(self.sim.h),
                t_end: Some(self.sim.t_end),
                snapshots: Some(self.sim.snapshot_times.clone()),
            },
            noise: NoiseSection {
                amplitude: Some(self.sim.noise_amplitude),
                seed: Some(self.sim.seed),
            },
            output: OutputSection {
                dealias: Some(self.sim.dealias),
                clamp: Some(self.sim.clamp),
                summary_every: Some(self.sim.summary_every),
                format: Some(self.format),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&self.to_file()).expect("resolved config serializes")
    }
}

/// Parses and resolves a configuration file.
pub fn resolve(
    text: &str,
    seed_override: Option<u64>,
    format_override: Option<OutputFormat>,
) -> Result<Resolved, String> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;

    let dims = Dims::try_from(file.grid.dims)?;
    let (n_default, h_default, t_end_default, snaps_default): (usize, f64, f64, &[f64]) = match dims
    {
        Dims::One => (256, 0.02, 2000.0, &[20.0, 200.0, 2000.0]),
        Dims::Two => (128, 0.025, 120.0, &[1.0, 10.0, 60.0, 120.0]),
    };

    let params = CloudParams::new(
        file.model.c,
        file.model.a1,
        file.model.a2,
        file.model.gamma,
        file.model.beta_c,
        file.model.beta_r,
        file.model.zeta,
        file.model.d,
        file.model.b,
    )
    .map_err(|e| e.to_string())?;
    let diff =
        DiffusionParams::new(file.diffusion.d1, file.diffusion.d2).map_err(|e| e.to_string())?;

    let n = file.grid.n.unwrap_or(n_default);
    let length = file.grid.length.unwrap_or(50.0);
    let grid = GridSpec::new(dims, n, length).map_err(|e| e.to_string())?;
    let domain = DomainSpec::new(length, dims).map_err(|e| e.to_string())?;

    let h = file.time.h.unwrap_or(h_default);
    let t_end = file.time.t_end.unwrap_or(t_end_default);
    let snapshot_times = file.time.snapshots.unwrap_or_else(|| {
        snaps_default
            .iter()
            .copied()
            .filter(|&t| t <= t_end)
            .collect()
    });

    let summary_every = file
        .output
        .summary_every
        .unwrap_or_else(|| (t_end / 500.0).max(h));

    let sim = SimConfig {
        params,
        diff,
        grid,
        h,
        t_end,
        snapshot_times,
        noise_amplitude: file.noise.amplitude.unwrap_or(0.01),
        seed: seed_override.or(file.noise.seed).unwrap_or(42),
        dealias: file.output.dealias.unwrap_or(DealiasRule::None),
        clamp: file.output.clamp.unwrap_or(ClampPolicy::Clamp),
        summary_every,
    };
    sim.validate().map_err(|e| e.to_string())?;

    Ok(Resolved {
        sim,
        domain,
        format: format_override
            .or(file.output.format)
            .unwrap_or(OutputFormat::Text),
    })
}
