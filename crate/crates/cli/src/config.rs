//! Experiment configuration: defaults, flat key = value config files, and
//! command-line overrides, resolved into one concrete [`Config`] that is
//! embedded verbatim in every output file.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Paper2d,
    Seqspace,
    Translation,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorKind::Paper2d => "paper2d",
            OperatorKind::Seqspace => "seqspace",
            OperatorKind::Translation => "translation",
        };
        f.write_str(s)
    }
}

impl OperatorKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "paper2d" => Ok(Self::Paper2d),
            "seqspace" => Ok(Self::Seqspace),
            "translation" => Ok(Self::Translation),
            other => {
                bail!("unknown operator '{other}' (expected paper2d | seqspace | translation)")
            }
        }
    }
}

/// Check tolerances, overridable via `tol.NAME = VAL` in config files or
/// repeated `--tol NAME=VAL` flags.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub prox: f64,
    pub nonexpansive: f64,
    pub firm: f64,
    pub hyperplane: f64,
    pub monotone: f64,
    pub pairwise: f64,
    pub cone: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            prox: 1e-12,
            nonexpansive: 1e-9,
            firm: 1e-9,
            hyperplane: 1e-8,
            monotone: 1e-8,
            pairwise: 1e-12,
            cone: 1e-9,
        }
    }
}

impl Tolerances {
    fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            bail!("tolerance '{name}' must be a finite non-negative number, got {value}");
        }
        match name {
            "prox" => self.prox = value,
            "nonexpansive" => self.nonexpansive = value,
            "firm" => self.firm = value,
            "hyperplane" => self.hyperplane = value,
            "monotone" => self.monotone = value,
            "pairwise" => self.pairwise = value,
            "cone" => self.cone = value,
            other => bail!(
                "unknown tolerance '{other}' (expected prox | nonexpansive | firm | hyperplane | monotone | pairwise | cone)"
            ),
        }
        Ok(())
    }
}

/// The fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub operator: OperatorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    pub n_coords: usize,
    pub k_max: u64,
    pub schedule: String,
    pub seed: u64,
    pub out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub v: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    pub min_norm: f64,
    pub eps_angle: f64,
    pub n_samples: u64,
    pub box_half_width: f64,
    pub firm_box_half_width: f64,
    pub tol: Tolerances,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            operator: OperatorKind::Paper2d,
            n_max: None,
            n_coords: 512,
            k_max: 100_000,
            schedule: String::new(),
            seed: 0,
            out: PathBuf::from("out"),
            x0: None,
            v: vec![0.6, -0.8],
            q: None,
            min_norm: 10.0,
            eps_angle: 0.1,
            n_samples: 10_000,
            box_half_width: 1e6,
            firm_box_half_width: 10.0,
            tol: Tolerances::default(),
        }
    }
}

/// Raw values collected from flags before merging; every field is optional
/// so that flags override config-file entries, which override defaults.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Operator: paper2d | seqspace | translation.
    #[arg(long)]
    pub operator: Option<String>,
    /// Truncation depth of the breakpoint construction (2..=100).
    #[arg(long, value_name = "N")]
    pub nmax: Option<u32>,
    /// Number of coordinates of the sequence-space operator.
    #[arg(long, value_name = "N")]
    pub ncoords: Option<usize>,
    /// Number of iterations.
    #[arg(long, value_name = "K")]
    pub kmax: Option<u64>,
    /// Snapshot schedule: geometric:RHO | levels | list:K1,K2,...
    #[arg(long, value_name = "SPEC")]
    pub schedule: Option<String>,
    /// Sampling seed for the verification checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Starting point, comma-separated.
    #[arg(long, value_name = "C1,C2,...")]
    pub x0: Option<String>,
    /// Translation displacement vector, comma-separated.
    #[arg(long, value_name = "C1,C2,...")]
    pub v: Option<String>,
    /// Direction to verify instead of the extracted cluster centers.
    #[arg(long, value_name = "C1,C2")]
    pub q: Option<String>,
    /// Norm threshold below which snapshots carry no direction.
    #[arg(long, value_name = "R")]
    pub min_norm: Option<f64>,
    /// Angular clustering tolerance in radians.
    #[arg(long, value_name = "RAD")]
    pub eps_angle: Option<f64>,
    /// Sample count for the verification checks.
    #[arg(long, value_name = "N")]
    pub n_samples: Option<u64>,
    /// Half-width of the sampling box.
    #[arg(long = "box", value_name = "W")]
    pub box_half_width: Option<f64>,
    /// Tolerance override, repeatable: NAME=VAL.
    #[arg(long = "tol", value_name = "NAME=VAL")]
    pub tol: Vec<String>,
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("invalid number '{}' in vector '{s}'", p.trim()))
        })
        .collect::<Result<_>>()?;
    if v.is_empty() || v.iter().any(|c| !c.is_finite()) {
        bail!("vector '{s}' must be non-empty and finite");
    }
    Ok(v)
}

fn apply_key(cfg: &mut Config, key: &str, value: &str) -> Result<()> {
    match key {
        "operator" => cfg.operator = OperatorKind::parse(value)?,
        "n_max" => cfg.n_max = Some(value.parse().context("n_max")?),
        "n_coords" => cfg.n_coords = value.parse().context("n_coords")?,
        "k_max" => cfg.k_max = value.parse().context("k_max")?,
        "schedule" => cfg.schedule = value.to_owned(),
        "seed" => cfg.seed = value.parse().context("seed")?,
        "out" => cfg.out = PathBuf::from(value),
        "x0" => cfg.x0 = Some(parse_vector(value)?),
        "v" => cfg.v = parse_vector(value)?,
        "q" => cfg.q = Some(parse_vector(value)?),
        "min_norm" => cfg.min_norm = value.parse().context("min_norm")?,
        "eps_angle" => cfg.eps_angle = value.parse().context("eps_angle")?,
        "n_samples" => cfg.n_samples = value.parse().context("n_samples")?,
        "box" => cfg.box_half_width = value.parse().context("box")?,
        "firm_box" => cfg.firm_box_half_width = value.parse().context("firm_box")?,
        _ => {
            if let Some(name) = key.strip_prefix("tol.") {
                let parsed: f64 = value.parse().with_context(|| format!("tol.{name}"))?;
                cfg.tol.set(name, parsed)?;
            } else {
                bail!("unknown config key '{key}'");
            }
        }
    }
    Ok(())
}

/// Parses the flat `key = value` grammar: one entry per line, `#` starts a
/// comment, blank lines ignored.
fn apply_file(cfg: &mut Config, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected 'key = value'", path.display(), lineno + 1))?;
        apply_key(cfg, key.trim(), value.trim())
            .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
    }
    Ok(())
}

/// Resolution order: defaults, then the config file, then flags.
pub fn resolve(over: &Overrides, forced_operator: Option<OperatorKind>) -> Result<Config> {
    let mut cfg = Config::default();
    if let Some(path) = &over.config {
        apply_file(&mut cfg, path)?;
    }
    if let Some(op) = &over.operator {
        cfg.operator = OperatorKind::parse(op)?;
    }
    if let Some(op) = forced_operator {
        cfg.operator = op;
    }
    if let Some(n) = over.nmax {
        cfg.n_max = Some(n);
    }
    if let Some(n) = over.ncoords {
        cfg.n_coords = n;
    }
    if let Some(k) = over.kmax {
        cfg.k_max = k;
    }
    if let Some(s) = &over.schedule {
        cfg.schedule = s.clone();
    }
    if let Some(s) = over.seed {
        cfg.seed = s;
    }
    if let Some(o) = &over.out {
        cfg.out = o.clone();
    }
    if let Some(x0) = &over.x0 {
        cfg.x0 = Some(parse_vector(x0)?);
    }
    if let Some(v) = &over.v {
        cfg.v = parse_vector(v)?;
    }
    if let Some(q) = &over.q {
        cfg.q = Some(parse_vector(q)?);
    }
    if let Some(m) = over.min_norm {
        cfg.min_norm = m;
    }
    if let Some(e) = over.eps_angle {
        cfg.eps_angle = e;
    }
    if let Some(n) = over.n_samples {
        cfg.n_samples = n;
    }
    if let Some(b) = over.box_half_width {
        cfg.box_half_width = b;
    }
    for item in &over.tol {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("--tol expects NAME=VAL, got '{item}'"))?;
        let parsed: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("--tol {item}"))?;
        cfg.tol.set(name.trim(), parsed)?;
    }

    if cfg.schedule.is_empty() {
        cfg.schedule = match cfg.operator {
            OperatorKind::Paper2d => "levels".to_owned(),
            _ => "geometric:2".to_owned(),
        };
    }
    if cfg.k_max == 0 {
        bail!("k_max must be at least 1");
    }
    Ok(cfg)
}

pub fn parse_schedule(spec: &str) -> Result<cosmiclab::Schedule> {
    if spec == "levels" {
        return Ok(cosmiclab::Schedule::LevelCrossing);
    }
    if let Some(rho) = spec.strip_prefix("geometric:") {
        let rho: f64 = rho.parse().context("geometric ratio")?;
        return Ok(cosmiclab::Schedule::Geometric { rho });
    }
    if let Some(list) = spec.strip_prefix("list:") {
        let indices: Vec<u64> = list
            .split(',')
            .map(|p| p.trim().parse::<u64>().context("schedule index"))
            .collect::<Result<_>>()?;
        return Ok(cosmiclab::Schedule::Explicit { indices });
    }
    bail!("unknown schedule '{spec}' (expected geometric:RHO | levels | list:K1,K2,...)");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_then_file_then_flags() {
        let dir = std::env::temp_dir().join("cosmiclab-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("exp.cfg");
        std::fs::write(
            &path,
            "# comment\nn_max = 4\nk_max = 123\ntol.prox = 1e-10\n",
        )
        .unwrap();
        let over = Overrides {
            config: Some(path),
            kmax: Some(456),
            ..Default::default()
        };
        let cfg = resolve(&over, Some(OperatorKind::Paper2d)).unwrap();
        assert_eq!(cfg.n_max, Some(4));
        assert_eq!(cfg.k_max, 456); // flag wins over file
        assert_eq!(cfg.tol.prox, 1e-10);
        assert_eq!(cfg.schedule, "levels");
    }

    #[test]
    fn unknown_keys_and_zero_kmax_are_errors() {
        let dir = std::env::temp_dir().join("cosmiclab-config-test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.cfg");
        std::fs::write(&path, "nmax = 4\n").unwrap();
        let over = Overrides {
            config: Some(path),
            ..Default::default()
        };
        assert!(resolve(&over, None).is_err());

        let over = Overrides {
            kmax: Some(0),
            ..Default::default()
        };
        assert!(resolve(&over, None).is_err());
    }

    #[test]
    fn schedule_specs_parse() {
        assert!(matches!(
            parse_schedule("levels").unwrap(),
            cosmiclab::Schedule::LevelCrossing
        ));
        assert!(matches!(
            parse_schedule("geometric:1.5").unwrap(),
            cosmiclab::Schedule::Geometric { .. }
        ));
        assert!(matches!(
            parse_schedule("list:1,5,10").unwrap(),
            cosmiclab::Schedule::Explicit { .. }
        ));
        assert!(parse_schedule("daily").is_err());
    }
}
