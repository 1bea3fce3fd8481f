use crate::Failure;
use nonortho::potentials::PotentialSpec;
use nonortho::wavepacket::{PacketSpec, SWaveSpec};
use nonortho::QuadratureConfig;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Contents of a `--config` file. Flags win over these, these win over defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Option<PotentialSpec>,
    pub quadrature: Option<QuadratureConfig>,
    pub packet: Option<PacketSpec>,
    pub swave: Option<SWaveSpec>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    /// momentum range `start:end:n`
    pub k: Option<String>,
    /// time range `start:end:n`
    pub t: Option<String>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if let Some(p) = &self.potential {
            p.validate()?;
        }
        if let Some(q) = &self.quadrature {
            q.validate()?;
        }
        if let Some(p) = &self.packet {
            p.validate()?;
        }
        for r in [&self.k, &self.t].into_iter().flatten() {
            parse_range(r)?;
        }
        Ok(())
    }
}

/// Parses `start:end:n` into `n` evenly spaced values (a bare number is one point).
pub fn parse_range(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::config(format!("range '{text}' must look like start:end:n"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(vec![single.trim().parse().map_err(|_| bad())?]),
        [a, b, n] => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 || !a.is_finite() || !b.is_finite() {
                return Err(bad());
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            Ok((0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
        }
        _ => Err(bad()),
    }
}

/// Potential-related flags, applied on top of a base spec.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct PotentialArgs {
    /// free, delta, square_well, poschl_teller or linear
    #[arg(long)]
    pub potential: Option<String>,
    /// delta strength
    #[arg(long)]
    pub g: Option<f64>,
    /// well depth or barrier height
    #[arg(long = "V0")]
    pub v0: Option<f64>,
    /// square-well width
    #[arg(long)]
    pub a: Option<f64>,
    /// Pöschl–Teller inverse width
    #[arg(long)]
    pub mu: Option<f64>,
    /// Pöschl–Teller index, instead of --V0
    #[arg(long)]
    pub nu: Option<f64>,
    /// linear-potential acceleration
    #[arg(long)]
    pub g_accel: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
}

impl PotentialArgs {
    fn is_empty(&self) -> bool {
        self.potential.is_none()
            && self.g.is_none()
            && self.v0.is_none()
            && self.a.is_none()
            && self.mu.is_none()
            && self.nu.is_none()
            && self.g_accel.is_none()
            && self.m.is_none()
    }

    /// Resolves the potential: flags over `base` over `fallback`.
    pub fn resolve(&self, base: Option<PotentialSpec>, fallback: PotentialSpec) -> Result<PotentialSpec, Failure> {
        let start = match &self.potential {
            Some(kind) => blank(kind)?,
            None => base.unwrap_or(fallback),
        };
        if self.is_empty() {
            start.validate()?;
            return Ok(start);
        }
        let m = self.m.unwrap_or(start.mass());
        let spec = match start {
            PotentialSpec::Free { .. } => PotentialSpec::Free { m },
            PotentialSpec::Delta { g, .. } => PotentialSpec::Delta { g: self.g.unwrap_or(g), m },
            PotentialSpec::SquareWell { v0, a, .. } => {
                PotentialSpec::SquareWell { v0: self.v0.unwrap_or(v0), a: self.a.unwrap_or(a), m }
            }
            PotentialSpec::PoschlTeller { v0, mu, .. } => {
                let mu = self.mu.unwrap_or(mu);
                match self.nu {
                    Some(nu) => PotentialSpec::poschl_teller_nu(nu, mu, m),
                    None => PotentialSpec::PoschlTeller { v0: self.v0.unwrap_or(v0), mu, m },
                }
            }
            PotentialSpec::Linear { g_accel, .. } => PotentialSpec::Linear { g_accel: self.g_accel.unwrap_or(g_accel), m },
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn blank(kind: &str) -> Result<PotentialSpec, Failure> {
    Ok(match kind {
        "free" => PotentialSpec::free(),
        "delta" => PotentialSpec::delta(1.0),
        "square_well" => PotentialSpec::square_well(2.0, 10.0),
        "poschl_teller" => PotentialSpec::poschl_teller(-1.0, 1.0),
        "linear" => PotentialSpec::linear(1.0),
        other => return Err(Failure::config(format!("unknown potential '{other}'"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:3:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_range("2.5").unwrap(), vec![2.5]);
        assert_eq!(parse_range("0:1:1").unwrap(), vec![0.0]);
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("1:2:0").is_err());
        assert!(parse_range("a:2:3").is_err());
    }

    #[test]
    fn flags_override_config() {
        let args = PotentialArgs { g: Some(3.0), ..Default::default() };
        let spec = args.resolve(Some(PotentialSpec::delta(1.0)), PotentialSpec::free()).unwrap();
        assert_eq!(spec, PotentialSpec::delta(3.0));
        let args = PotentialArgs { potential: Some("square_well".into()), a: Some(4.0), ..Default::default() };
        assert_eq!(args.resolve(None, PotentialSpec::free()).unwrap(), PotentialSpec::square_well(2.0, 4.0));
        assert_eq!(PotentialArgs::default().resolve(None, PotentialSpec::free()).unwrap(), PotentialSpec::free());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"potential":{"kind":"free"},"bogus":1}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"potential":{"kind":"delta","g":2.0},"k":"1:2:3"}"#).unwrap();
        assert!(cfg.validate().is_ok());
    }
}
