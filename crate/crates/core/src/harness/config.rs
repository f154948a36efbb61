//! Sectioned `key = value` experiment files.
//!
//! Lines are `[section]` headers, `key = value` pairs, blanks, or comments
//! starting with `#` or `;`. Every key lives in a section and may appear once.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::fit::FitModel;
use crate::lattice::{Grid, DEFAULT_NODE_CAP};
use crate::oddsector::GridPolicy;
use crate::potentials::{CouplingSchedule, PotentialSpec, DEFAULT_V_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Calibrate,
    NormSweep,
    RateFit,
    KkCheck,
    Verify,
    ThomasCheck,
    Report,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Calibrate,
        ExperimentKind::NormSweep,
        ExperimentKind::RateFit,
        ExperimentKind::KkCheck,
        ExperimentKind::Verify,
        ExperimentKind::ThomasCheck,
        ExperimentKind::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Calibrate => "calibrate",
            ExperimentKind::NormSweep => "norm-sweep",
            ExperimentKind::RateFit => "rate-fit",
            ExperimentKind::KkCheck => "kk-check",
            ExperimentKind::Verify => "verify",
            ExperimentKind::ThomasCheck => "thomas-check",
            ExperimentKind::Report => "report",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

/// Raw file contents: `(section, key) → (value, line)`.
#[derive(Clone, Debug, Default)]
pub struct IniDocument {
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl IniDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Self::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let err = |message: String| Error::Config { line: line_no, message };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err("unterminated section header".into()))?
                    .trim();
                if name.is_empty() {
                    return Err(err("empty section name".into()));
                }
                section = Some(name.to_ascii_lowercase());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(err("empty key".into()));
            }
            let sec = section
                .clone()
                .ok_or_else(|| err(format!("key `{key}` appears before any section")))?;
            // trailing comments after whitespace
            let value = value.split(" #").next().unwrap_or("").trim().to_string();
            if let Some((_, first)) = doc.entries.insert((sec.clone(), key.clone()), (value, line_no)) {
                return Err(err(format!("duplicate key `{sec}.{key}` (first at line {first})")));
            }
        }
        Ok(doc)
    }

    fn get(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn keys(&self) -> impl Iterator<Item = (&str, &str, usize)> {
        self.entries.iter().map(|((s, k), (_, l))| (s.as_str(), k.as_str(), *l))
    }
}

fn field_err(section: &str, key: &str, line: Option<usize>, message: impl Into<String>) -> Error {
    let at = line.map(|l| format!(" (line {l})")).unwrap_or_default();
    Error::ConfigField {
        field: format!("{section}.{key}{at}"),
        message: message.into(),
    }
}

/// Typed reader that records which keys were consumed.
struct Reader<'a> {
    doc: &'a IniDocument,
    used: std::cell::RefCell<Vec<(String, String)>>,
}

impl<'a> Reader<'a> {
    fn raw(&self, section: &str, key: &str) -> Option<&'a (String, usize)> {
        self.used.borrow_mut().push((section.into(), key.into()));
        self.doc.get(section, key)
    }

    fn parse<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| field_err(section, key, Some(*line), format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse(section, key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.parse(section, key)?
            .ok_or_else(|| field_err(section, key, None, "required key is missing"))
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| field_err(section, key, Some(*line), format!("cannot parse `{}`: {e}", s.trim())))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn line(&self, section: &str, key: &str) -> Option<usize> {
        self.doc.get(section, key).map(|(_, l)| *l)
    }

    fn check_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        for (s, k, l) in self.doc.keys() {
            if !used.iter().any(|(us, uk)| us == s && uk == k) {
                return Err(field_err(s, k, Some(l), "unknown key"));
            }
        }
        Ok(())
    }
}

/// Grid settings shared by sweeps (`fixed`, `scaled`) and single-grid checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSection {
    pub policy: String,
    pub half_length: f64,
    pub points: usize,
    pub nodes_per_width: f64,
    pub min_points: usize,
    pub node_cap: usize,
    pub unit_half_length: f64,
}

impl GridSection {
    pub fn sweep_policy(&self) -> GridPolicy {
        match self.policy.as_str() {
            "scaled" => GridPolicy::ScaledBox {
                unit_half_length: self.unit_half_length,
                points: self.points,
            },
            _ => GridPolicy::FixedBox {
                half_length: self.half_length,
                nodes_per_width: self.nodes_per_width,
                min_points: self.min_points,
                node_cap: self.node_cap,
            },
        }
    }

    /// The single grid `[−L, L)^{d·m}` with `points` nodes per axis.
    pub fn single(&self, d: usize, m: usize, offset: f64) -> Result<Grid> {
        let g = Grid::new(d, m, self.half_length, self.points, offset)?;
        g.check_cap(self.node_cap)?;
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub label: String,
    pub seed: u64,
    pub n_particles: usize,
    pub dim: usize,
    pub potential: PotentialSpec,
    pub schedule: CouplingSchedule,
    /// strictly decreasing
    pub epsilon: Vec<f64>,
    pub z: Vec<f64>,
    pub grid: GridSection,
    pub tol: f64,
    pub target_energy: f64,
    pub fit_model: Option<FitModel>,
    pub with_s_norm: bool,
    pub truncation_k: Option<f64>,
    pub refinement_check: bool,
    pub instances: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        Self::parse_for(&std::fs::read_to_string(path)?, kind)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_for(text, None)
    }

    /// Parses with the kind fixed by the caller; a conflicting `experiment.kind` is an error.
    pub fn parse_for(text: &str, forced: Option<ExperimentKind>) -> Result<Self> {
        let doc = IniDocument::parse(text)?;
        let r = Reader {
            doc: &doc,
            used: Default::default(),
        };

        let kind = match (r.parse::<ExperimentKind>("experiment", "kind")?, forced) {
            (Some(k), Some(f)) if k != f => {
                return Err(field_err(
                    "experiment",
                    "kind",
                    r.line("experiment", "kind"),
                    format!("file is for `{k}` but `{f}` was requested"),
                ))
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(field_err("experiment", "kind", None, "required key is missing")),
        };
        let label = r.or("experiment", "label", kind.as_str().to_string())?;
        let seed = r.or("experiment", "seed", 0u64)?;

        let n_particles = r.or("system", "particles", 2usize)?;
        let dim = r.or("system", "dim", 1usize)?;
        if !(1..=3).contains(&dim) {
            return Err(field_err("system", "dim", r.line("system", "dim"), "must be 1, 2 or 3"));
        }
        if n_particles < 2 {
            return Err(field_err(
                "system",
                "particles",
                r.line("system", "particles"),
                "need at least 2",
            ));
        }

        let potential = read_potential(&r)?;
        let schedule = read_schedule(&r)?;

        let epsilon = match r.list("epsilon", "values")? {
            Some(v) => v,
            None => {
                let start = r.or("epsilon", "start", 0.1f64)?;
                let factor = r.or("epsilon", "factor", std::f64::consts::FRAC_1_SQRT_2)?;
                let count = r.or("epsilon", "count", 10usize)?;
                if !(factor > 0.0 && factor < 1.0) {
                    return Err(field_err(
                        "epsilon",
                        "factor",
                        r.line("epsilon", "factor"),
                        "must lie in (0, 1)",
                    ));
                }
                (0..count).map(|k| start * factor.powi(k as i32)).collect()
            }
        };
        let eps_line = r.line("epsilon", "values").or(r.line("epsilon", "start"));
        if epsilon.is_empty() {
            return Err(field_err("epsilon", "values", eps_line, "range is empty"));
        }
        if epsilon.iter().any(|e| !(*e > 0.0)) {
            return Err(field_err("epsilon", "values", eps_line, "values must be positive"));
        }
        if epsilon.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(field_err("epsilon", "values", eps_line, "must be strictly decreasing"));
        }

        let z = r.list("z", "values")?.unwrap_or_else(|| vec![1.0]);
        if z.is_empty() || z.iter().any(|v| !(*v > 0.0)) {
            return Err(field_err("z", "values", r.line("z", "values"), "need positive shifts"));
        }

        let grid = GridSection {
            policy: r.or("grid", "policy", "fixed".to_string())?,
            half_length: r.or("grid", "half_length", 16.0)?,
            points: r.or("grid", "points", 64usize)?,
            nodes_per_width: r.or("grid", "nodes_per_width", 8.0)?,
            min_points: r.or("grid", "min_points", 64usize)?,
            node_cap: r.or("grid", "node_cap", DEFAULT_NODE_CAP)?,
            unit_half_length: r.or("grid", "unit_half_length", 4.0)?,
        };
        if !matches!(grid.policy.as_str(), "fixed" | "scaled") {
            return Err(field_err(
                "grid",
                "policy",
                r.line("grid", "policy"),
                "must be `fixed` or `scaled`",
            ));
        }
        for (key, v) in [
            ("half_length", grid.half_length),
            ("nodes_per_width", grid.nodes_per_width),
            ("unit_half_length", grid.unit_half_length),
        ] {
            if !(v > 0.0) {
                return Err(field_err("grid", key, r.line("grid", key), "must be positive"));
            }
        }
        if grid.points < 2 || grid.points % 2 == 1 {
            return Err(field_err(
                "grid",
                "points",
                r.line("grid", "points"),
                "must be even and ≥ 2",
            ));
        }

        let tol = r.or("tolerance", "norm", 1e-6)?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(field_err(
                "tolerance",
                "norm",
                r.line("tolerance", "norm"),
                "must lie in (0, 1)",
            ));
        }
        let target_energy = r.or("calibrate", "target_energy", -0.125)?;
        if !(target_energy < 0.0) {
            return Err(field_err(
                "calibrate",
                "target_energy",
                r.line("calibrate", "target_energy"),
                "must be negative",
            ));
        }
        let fit_model = r.parse::<FitModel>("fit", "model")?;
        let with_s_norm = r.or("rate", "s_norm", false)?;
        let truncation_k = r.parse::<f64>("sweep", "truncation_k")?;
        if truncation_k.is_some_and(|k| !(k > 0.0)) {
            return Err(field_err(
                "sweep",
                "truncation_k",
                r.line("sweep", "truncation_k"),
                "must be positive",
            ));
        }
        let refinement_check = r.or("sweep", "refinement_check", false)?;
        let instances = r.or("verify", "instances", 1000usize)?;
        let out = r.parse::<PathBuf>("output", "dir")?;
        r.check_unused()?;

        Ok(Self {
            kind,
            label,
            seed,
            n_particles,
            dim,
            potential,
            schedule,
            epsilon,
            z,
            grid,
            tol,
            target_energy,
            fit_model,
            with_s_norm,
            truncation_k,
            refinement_check,
            instances,
            out,
        })
    }

    /// Minimal configuration for `kind` with every default applied.
    pub fn defaults(kind: ExperimentKind) -> Self {
        Self::parse_for("", Some(kind)).expect("defaults are valid")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn read_potential(r: &Reader) -> Result<PotentialSpec> {
    let kind = r.or("potential", "kind", "gaussian".to_string())?;
    let line = r.line("potential", "kind");
    let amplitude = r.or("potential", "amplitude", 1.0)?;
    let v_cap = r.or("potential", "v_cap", DEFAULT_V_CAP)?;
    let wrap = |e: Error| field_err("potential", "kind", line, e.to_string());
    let spec = match kind.as_str() {
        "gaussian" => PotentialSpec::gaussian(amplitude, r.or("potential", "width", 1.0)?).map_err(wrap)?,
        "smooth_bump" => PotentialSpec::smooth_bump(amplitude, r.or("potential", "radius", 1.0)?).map_err(wrap)?,
        "square_well" => PotentialSpec::square_well(amplitude, r.or("potential", "radius", 1.0)?).map_err(wrap)?,
        "coulombic_cutoff" => PotentialSpec::coulombic_cutoff().scaled_by(amplitude),
        "zero" => PotentialSpec::zero(),
        "table" => {
            let path: PathBuf = r.require("potential", "path")?;
            PotentialSpec::load_table(&path, v_cap)
                .map_err(wrap)?
                .scaled_by(amplitude)
        }
        other => {
            return Err(field_err(
                "potential",
                "kind",
                line,
                format!("unknown potential `{other}`"),
            ))
        }
    };
    if !(v_cap > 0.0) {
        return Err(field_err(
            "potential",
            "v_cap",
            r.line("potential", "v_cap"),
            "must be positive",
        ));
    }
    Ok(spec.with_v_cap(v_cap))
}

fn read_schedule(r: &Reader) -> Result<CouplingSchedule> {
    let name = r.or("coupling", "schedule", "constant".to_string())?;
    let line = r.line("coupling", "schedule");
    Ok(match name.as_str() {
        "constant" => CouplingSchedule::Constant {
            c: r.or("coupling", "c", 1.0)?,
        },
        "linear" => CouplingSchedule::Linear {
            g: r.or("coupling", "g", 1.0)?,
        },
        "log_reciprocal" => CouplingSchedule::LogReciprocal {
            a: r.or("coupling", "a", 1.0)?,
        },
        "table" => {
            let eps = r.list("coupling", "eps")?.unwrap_or_default();
            let lambda = r.list("coupling", "lambda")?.unwrap_or_default();
            if eps.is_empty() || eps.len() != lambda.len() {
                return Err(field_err(
                    "coupling",
                    "lambda",
                    r.line("coupling", "lambda"),
                    "needs as many entries as `eps`",
                ));
            }
            CouplingSchedule::Table { eps, lambda }
        }
        other => {
            return Err(field_err(
                "coupling",
                "schedule",
                line,
                format!("unknown schedule `{other}`"),
            ))
        }
    })
}
