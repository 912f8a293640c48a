//! Run configuration: a preset or a TOML file, with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use resopack::poles::PoleSearchConfig;
use resopack::potential::{Layer, PotentialProfile};
use resopack::presets::{Preset, MASS_RATIO, PACKET_CENTRE, PACKET_WIDTH};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<String>,
    name: Option<String>,
    mass_ratio: Option<f64>,
    layers: Option<Vec<LayerSpec>>,
    packet: Option<PacketSpec>,
    poles: Option<PoleSpec>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerSpec {
    width: f64,
    height: f64,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PacketSpec {
    x_c: Option<f64>,
    sigma: Option<f64>,
    energy: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoleSpec {
    n_seed: Option<usize>,
    newton_tol: Option<f64>,
    residual_tol: Option<f64>,
    max_newton_iters: Option<usize>,
    max_random_attempts: Option<usize>,
    regime2_subdivision: Option<usize>,
    dedup_tol: Option<f64>,
    extend_outward: Option<usize>,
}

/// Everything a command needs to know about the system and the packet.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    pub preset: Option<Preset>,
    pub profile: PotentialProfile,
    pub poles: PoleSearchConfig,
    pub x_c: f64,
    pub sigma: f64,
    /// Packet energy in eV; `None` picks the preset rule.
    pub energy: Option<f64>,
    pub out: PathBuf,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn parse_preset(name: &str) -> Result<Preset> {
    Preset::parse(name).ok_or_else(|| anyhow!("unknown preset {name:?} (expected sb, db or qb)"))
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let file = match &o.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let preset_name = o.preset.as_deref().or(file.preset.as_deref());
        let preset = preset_name.map(parse_preset).transpose()?;
        let (name, profile) = match (preset, &file.layers) {
            (Some(_), Some(_)) => bail!("give either a preset or a layer list, not both"),
            (None, None) => bail!("no system given: use --preset or a config file with layers"),
            (Some(p), None) => {
                if file.mass_ratio.is_some_and(|m| m != MASS_RATIO) {
                    bail!("presets fix the mass ratio at {MASS_RATIO}");
                }
                (p.name().to_string(), p.profile())
            }
            (None, Some(layers)) => {
                let layers = layers.iter().map(|l| Layer::new(l.width, l.height)).collect();
                let profile = PotentialProfile::new(layers, file.mass_ratio.unwrap_or(MASS_RATIO))?;
                (file.name.clone().unwrap_or_else(|| "custom".into()), profile)
            }
        };
        if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') || name.is_empty() {
            bail!("system name {name:?} must be alphanumeric");
        }

        let ps = file.poles.unwrap_or_default();
        let default_n = preset.map_or(1000, |p| p.default_pole_count());
        let base = PoleSearchConfig::with_n_seed(ps.n_seed.unwrap_or(default_n));
        let poles = PoleSearchConfig {
            newton_tol: ps.newton_tol.unwrap_or(base.newton_tol),
            residual_tol: ps.residual_tol.unwrap_or(base.residual_tol),
            max_newton_iters: ps.max_newton_iters.unwrap_or(base.max_newton_iters),
            max_random_attempts: ps.max_random_attempts.unwrap_or(base.max_random_attempts),
            regime2_subdivision: ps.regime2_subdivision.unwrap_or(base.regime2_subdivision),
            dedup_tol: ps.dedup_tol.unwrap_or(base.dedup_tol),
            extend_outward: ps.extend_outward.unwrap_or(base.extend_outward),
            rng_seed: o.seed.or(file.seed).unwrap_or(base.rng_seed),
            ..base
        };
        poles.validate()?;

        let packet = file.packet.unwrap_or_default();
        Ok(Self {
            name,
            preset,
            profile,
            poles,
            x_c: packet.x_c.unwrap_or(PACKET_CENTRE),
            sigma: packet.sigma.unwrap_or(PACKET_WIDTH),
            energy: packet.energy,
            out: o.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// Packet energy given the resonance energies `(E_n, Gamma_n)`.
    pub fn packet_energy(&self, energies: &[(f64, f64)]) -> Result<f64> {
        if let Some(e) = self.energy {
            return Ok(e);
        }
        match self.preset {
            Some(p) => Ok(p.packet_energy(energies)?),
            None => Ok(0.5 * self.profile.max_height()),
        }
    }

    /// `key = value` pairs echoed into every CSV header.
    pub fn echo(&self) -> Vec<(String, String)> {
        let layers: Vec<String> = self
            .profile
            .layers()
            .iter()
            .map(|l| format!("{}:{}", l.width, l.height))
            .collect();
        let p = &self.poles;
        vec![
            ("system".into(), self.name.clone()),
            ("layers_nm_ev".into(), layers.join(" ")),
            ("mass_ratio".into(), self.profile.mass_ratio().to_string()),
            ("packet_x_c_nm".into(), self.x_c.to_string()),
            ("packet_sigma_nm".into(), self.sigma.to_string()),
            (
                "pole_search".into(),
                format!(
                    "n_seed={} newton_tol={:e} residual_tol={:e} max_newton_iters={} max_random_attempts={} \
                     regime2_subdivision={} dedup_tol={:e} extend_outward={} rng_seed={}",
                    p.n_seed,
                    p.newton_tol,
                    p.residual_tol,
                    p.max_newton_iters,
                    p.max_random_attempts,
                    p.regime2_subdivision,
                    p.dedup_tol,
                    p.extend_outward,
                    p.rng_seed
                ),
            ),
        ]
    }
}

/// A length in nm, or a multiple of `L` written as `2L` or `2e5L`.
pub fn parse_distance(text: &str, length: f64) -> Result<f64> {
    let t = text.trim();
    let value = if let Some(m) = t.strip_suffix('L') {
        let factor: f64 = if m.is_empty() { 1.0 } else { m.parse().with_context(|| format!("bad distance {text:?}"))? };
        factor * length
    } else {
        t.trim_end_matches("nm").parse().with_context(|| format!("bad distance {text:?}"))?
    };
    if !(value.is_finite() && value > 0.0) {
        bail!("distance {text:?} must be positive");
    }
    Ok(value)
}
