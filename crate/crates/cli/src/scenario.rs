//! Scenario files: flat `key = value` text in `[grid]`, `[boundary]`,
//! `[solver]`, `[diagnostics]` and `[output]` sections.

use crate::report::CliError;
use ini::Ini;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thinfb_core::cg::CgConfig;
use thinfb_core::io::read_field;
use thinfb_core::solver::{BoundaryData, SolveConfig};
use thinfb_core::{build_grid, Grid, GridSpec, ScalarField};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DataSource {
    TrivialTrace,
    Constant(f64),
    Random(u64),
    File(PathBuf),
}

impl DataSource {
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "trivial-trace" {
            return Ok(Self::TrivialTrace);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(|| format!("unknown boundary data '{s}'"))?;
        match kind {
            "constant" => arg.trim().parse().map(Self::Constant).map_err(|_| format!("bad constant '{arg}'")),
            "random" => arg.trim().parse().map(Self::Random).map_err(|_| format!("bad seed '{arg}'")),
            "file" if !arg.trim().is_empty() => Ok(Self::File(PathBuf::from(arg.trim()))),
            _ => Err(format!("unknown boundary data '{s}' (trivial-trace, constant:c, random:seed, file:path)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Toggles {
    pub free_boundary: bool,
    pub weiss: bool,
    pub holder: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub grid: GridSpec,
    pub boundary: DataSource,
    pub flip_tolerance: f64,
    pub max_outer_iters: usize,
    pub exhaustive_threshold: usize,
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
    pub diagnostics: Toggles,
    pub output: PathBuf,
}

const KEYS: &[(&str, &[&str])] = &[
    ("grid", &["n", "alpha", "half_extent", "spacing"]),
    ("boundary", &["data"]),
    ("solver", &["flip_tolerance", "max_outer_iters", "exhaustive_threshold", "cg_tolerance", "cg_max_iterations"]),
    ("diagnostics", &["free_boundary", "weiss", "holder"]),
    ("output", &["dir"]),
];

/// Line of `key` inside `[section]`, for diagnostics.
fn line_of(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if let Some(s) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = s.trim().to_string();
        } else if current == section && l.split('=').next().map(str::trim) == Some(key) {
            return Some(i + 1);
        }
    }
    None
}

struct Fields<'a> {
    ini: &'a Ini,
    text: &'a str,
    path: &'a Path,
}

impl Fields<'_> {
    fn err(&self, section: &str, key: &str, msg: String) -> CliError {
        let at = line_of(self.text, section, key).map(|l| format!(":{l}")).unwrap_or_default();
        CliError::Config(format!("{}{at}: [{section}] {key}: {msg}", self.path.display()))
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.section(Some(section)).and_then(|p| p.get(key))
    }

    fn get<T: std::str::FromStr>(&self, section: &str, key: &str, default: Option<T>) -> Result<T, CliError> {
        match self.raw(section, key) {
            Some(v) => v.trim().parse().map_err(|_| self.err(section, key, format!("cannot parse '{v}'"))),
            None => default.ok_or_else(|| self.err(section, key, "missing required field".into())),
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(format!("{}:{}: {}", path.display(), e.line, e.msg)))?;
        for section in ini.sections() {
            let props = ini.section(section).expect("listed");
            let name = section.unwrap_or("");
            let allowed = KEYS.iter().find(|(s, _)| *s == name).map(|(_, k)| *k);
            for (key, _) in props.iter() {
                match allowed {
                    None => {
                        let at = line_of(text, name, key).map(|l| format!(":{l}")).unwrap_or_default();
                        let what = if name.is_empty() { "key outside any section".to_string() } else { format!("unknown section [{name}]") };
                        return Err(CliError::Config(format!("{}{at}: {what}", path.display())));
                    }
                    Some(keys) if !keys.contains(&key) => {
                        let at = line_of(text, name, key).map(|l| format!(":{l}")).unwrap_or_default();
                        return Err(CliError::Config(format!("{}{at}: [{name}] unknown key '{key}'", path.display())));
                    }
                    _ => {}
                }
            }
        }
        let f = Fields { ini: &ini, text, path };
        let spec = GridSpec {
            n: f.get("grid", "n", None)?,
            alpha: f.get("grid", "alpha", None)?,
            half_extent: f.get("grid", "half_extent", None)?,
            spacing: f.get("grid", "spacing", None)?,
        };
        spec.validate().map_err(|e| f.err("grid", "spacing", e.to_string()))?;
        let data: String = f.get("boundary", "data", None)?;
        let mut boundary = DataSource::parse(&data).map_err(|m| f.err("boundary", "data", m))?;
        if let DataSource::File(p) = &boundary {
            // relative to the scenario file
            let full = path.parent().map(|d| d.join(p)).unwrap_or_else(|| p.clone());
            if !full.exists() {
                return Err(f.err("boundary", "data", format!("file {} does not exist", full.display())));
            }
            boundary = DataSource::File(full);
        }
        let d = SolveConfig::default();
        let scenario = Scenario {
            grid: spec,
            boundary,
            flip_tolerance: f.get("solver", "flip_tolerance", Some(d.flip_tolerance))?,
            max_outer_iters: f.get("solver", "max_outer_iters", Some(d.max_outer_iters))?,
            exhaustive_threshold: f.get("solver", "exhaustive_threshold", Some(d.exhaustive_threshold))?,
            cg_tolerance: f.get("solver", "cg_tolerance", Some(d.cg.rel_tol))?,
            cg_max_iterations: f.get("solver", "cg_max_iterations", Some(d.cg.max_iter))?,
            diagnostics: Toggles {
                free_boundary: f.get("diagnostics", "free_boundary", Some(true))?,
                weiss: f.get("diagnostics", "weiss", Some(true))?,
                holder: f.get("diagnostics", "holder", Some(true))?,
            },
            output: PathBuf::from(f.get::<String>("output", "dir", Some("out".into()))?),
        };
        scenario.solve_config().validate().map_err(|e| f.err("solver", "exhaustive_threshold", e.to_string()))?;
        Ok(scenario)
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            flip_tolerance: self.flip_tolerance,
            max_outer_iters: self.max_outer_iters,
            exhaustive_threshold: self.exhaustive_threshold,
            cg: CgConfig { rel_tol: self.cg_tolerance, max_iter: self.cg_max_iterations },
        }
    }

    /// Replaces the seed of `random:` data.
    pub fn override_seed(&mut self, seed: u64) {
        if let DataSource::Random(_) = self.boundary {
            self.boundary = DataSource::Random(seed);
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.boundary {
            DataSource::Random(s) => Some(s),
            _ => None,
        }
    }

    /// SHA-256 of the canonical JSON form of the scenario, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output = PathBuf::new();
        let json = serde_json::to_string(&canon).expect("serializable");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build(&self) -> Result<(Grid, ScalarField), CliError> {
        let grid = build_grid(self.grid)?;
        let data = match &self.boundary {
            DataSource::TrivialTrace => BoundaryData::TrivialTrace.build(&grid)?,
            DataSource::Constant(c) => BoundaryData::Constant(*c).build(&grid)?,
            DataSource::Random(s) => BoundaryData::Random(*s).build(&grid)?,
            DataSource::File(p) => {
                let (field, _) = read_field(p)?;
                if field.spec() != grid.spec() {
                    return Err(CliError::Config(format!("{}: grid differs from the scenario grid", p.display())));
                }
                field
            }
        };
        Ok((grid, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "[grid]\nn = 1\nalpha = 0.5\nhalf_extent = 1\nspacing = 0.25\n\n[boundary]\ndata = random:7\n";

    #[test]
    fn parses_defaults_and_hashes_stably() {
        let s = Scenario::parse(GOOD, Path::new("s.ini")).unwrap();
        assert_eq!(s.boundary, DataSource::Random(7));
        assert_eq!(s.exhaustive_threshold, 16);
        assert_eq!(s.hash(), Scenario::parse(GOOD, Path::new("t.ini")).unwrap().hash());
        let mut t = s.clone();
        t.override_seed(8);
        assert_ne!(t.hash(), s.hash());
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let bad = GOOD.replace("alpha = 0.5", "alpha = half");
        let e = Scenario::parse(&bad, Path::new("s.ini")).unwrap_err().to_string();
        assert!(e.contains("s.ini:3") && e.contains("alpha"), "{e}");
        let unknown = format!("{GOOD}[solver]\nspeed = 3\n");
        let e = Scenario::parse(&unknown, Path::new("s.ini")).unwrap_err().to_string();
        assert!(e.contains(":10") && e.contains("speed"), "{e}");
        let missing = GOOD.replace("spacing = 0.25\n", "");
        assert!(Scenario::parse(&missing, Path::new("s.ini")).unwrap_err().to_string().contains("spacing"));
        assert!(DataSource::parse("gaussian:3").is_err());
    }
}
