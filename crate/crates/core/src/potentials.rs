//! Radial pair potentials, their ε-rescaling, constants, moments and coupling schedules.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;

pub const DEFAULT_V_CAP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    Nonnegative,
    Nonpositive,
    Mixed,
}

impl SignClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SignClass::Nonnegative => "nonnegative",
            SignClass::Nonpositive => "nonpositive",
            SignClass::Mixed => "mixed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `amplitude · exp(−|r|²/width²)`
    Gaussian { amplitude: f64, width: f64 },
    /// `amplitude · exp(1 − 1/(1 − |r|²/radius²))` inside the ball, 0 outside
    SmoothBump { amplitude: f64, radius: f64 },
    /// `amplitude` for `|r| ≤ radius`, 0 outside
    SquareWell { amplitude: f64, radius: f64 },
    /// `2/|r| − 1` for `|r| ≤ 1`, 0 outside
    CoulombicCutoff,
    /// linear interpolation of `(radius, value)` pairs, 0 beyond the last radius
    Table { radii: Vec<f64>, values: Vec<f64> },
}

/// A real, even, radial pair potential `V`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    /// overall multiplier applied to the kind's profile
    pub scale: f64,
    /// magnitude substituted at singular points and clamp for table values
    pub v_cap: f64,
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        match &kind {
            PotentialKind::Gaussian { width, .. } if !(*width > 0.0) => {
                return Err(invalid("width", "must be positive"))
            }
            PotentialKind::SmoothBump { radius, .. } | PotentialKind::SquareWell { radius, .. } if !(*radius > 0.0) => {
                return Err(invalid("radius", "must be positive"))
            }
            PotentialKind::Table { radii, values } => validate_table(radii, values)?,
            _ => {}
        }
        Ok(Self {
            kind,
            scale: 1.0,
            v_cap: DEFAULT_V_CAP,
        })
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        Self::new(PotentialKind::Gaussian { amplitude, width })
    }

    pub fn smooth_bump(amplitude: f64, radius: f64) -> Result<Self> {
        Self::new(PotentialKind::SmoothBump { amplitude, radius })
    }

    pub fn square_well(amplitude: f64, radius: f64) -> Result<Self> {
        Self::new(PotentialKind::SquareWell { amplitude, radius })
    }

    pub fn coulombic_cutoff() -> Self {
        Self::new(PotentialKind::CoulombicCutoff).expect("parameter-free")
    }

    /// The zero potential.
    pub fn zero() -> Self {
        Self::gaussian(0.0, 1.0).expect("valid width")
    }

    /// Parses a two-column `(radius, value)` text table; `#` starts a comment.
    pub fn from_table_str(text: &str, v_cap: f64) -> Result<Self> {
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::TableParse {
                    line: i + 1,
                    message: format!("expected 2 columns, found {}", cols.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::TableParse {
                    line: i + 1,
                    message: format!("{s:?}: {e}"),
                })
            };
            let (r, v) = (parse(cols[0])?, parse(cols[1])?);
            if !r.is_finite() || !v.is_finite() {
                return Err(Error::TableParse {
                    line: i + 1,
                    message: "non-finite entry".into(),
                });
            }
            radii.push(r);
            values.push(v.clamp(-v_cap, v_cap));
        }
        let mut spec = Self::new(PotentialKind::Table { radii, values })?;
        spec.v_cap = v_cap;
        Ok(spec)
    }

    pub fn load_table(path: &Path, v_cap: f64) -> Result<Self> {
        Self::from_table_str(&fs::read_to_string(path)?, v_cap)
    }

    /// `c·V`.
    pub fn scaled_by(&self, c: f64) -> Self {
        Self {
            scale: self.scale * c,
            ..self.clone()
        }
    }

    pub fn with_v_cap(mut self, v_cap: f64) -> Self {
        self.v_cap = v_cap;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PotentialKind::Gaussian { .. } => "gaussian",
            PotentialKind::SmoothBump { .. } => "smooth_bump",
            PotentialKind::SquareWell { .. } => "square_well",
            PotentialKind::CoulombicCutoff => "coulombic_cutoff",
            PotentialKind::Table { .. } => "table",
        }
    }

    pub fn is_zero(&self) -> bool {
        if self.scale == 0.0 {
            return true;
        }
        match &self.kind {
            PotentialKind::Gaussian { amplitude, .. }
            | PotentialKind::SmoothBump { amplitude, .. }
            | PotentialKind::SquareWell { amplitude, .. } => *amplitude == 0.0,
            PotentialKind::CoulombicCutoff => false,
            PotentialKind::Table { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn sign_class(&self) -> SignClass {
        let amp_class = |a: f64| {
            if a * self.scale >= 0.0 {
                SignClass::Nonnegative
            } else {
                SignClass::Nonpositive
            }
        };
        match &self.kind {
            PotentialKind::Gaussian { amplitude, .. }
            | PotentialKind::SmoothBump { amplitude, .. }
            | PotentialKind::SquareWell { amplitude, .. } => amp_class(*amplitude),
            PotentialKind::CoulombicCutoff => amp_class(1.0),
            PotentialKind::Table { values, .. } => {
                let pos = values.iter().any(|v| v * self.scale > 0.0);
                let neg = values.iter().any(|v| v * self.scale < 0.0);
                match (pos, neg) {
                    (true, true) => SignClass::Mixed,
                    (false, true) => SignClass::Nonpositive,
                    _ => SignClass::Nonnegative,
                }
            }
        }
    }

    /// Radius beyond which `V` vanishes identically, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.kind {
            PotentialKind::Gaussian { .. } => None,
            PotentialKind::SmoothBump { radius, .. } | PotentialKind::SquareWell { radius, .. } => Some(*radius),
            PotentialKind::CoulombicCutoff => Some(1.0),
            PotentialKind::Table { radii, .. } => radii.last().copied(),
        }
    }

    /// Length scale the grid has to resolve.
    pub fn width(&self) -> f64 {
        match &self.kind {
            PotentialKind::Gaussian { width, .. } => *width,
            PotentialKind::Table { radii, .. } => {
                // finest table spacing bounded by the overall extent
                let extent = radii.last().copied().unwrap_or(1.0);
                radii
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(extent, f64::min)
                    .max(extent / 64.0)
            }
            _ => self.support_radius().unwrap(),
        }
    }

    /// Radius past which `|V|` is negligible (below 1e-300 relative) or zero.
    pub fn effective_radius(&self) -> f64 {
        match &self.kind {
            PotentialKind::Gaussian { width, .. } => 27.0 * width,
            _ => self.support_radius().unwrap(),
        }
    }

    /// Radius past which `|V| ≤ rel · sup|V|`.
    pub fn negligible_radius(&self, rel: f64) -> f64 {
        match &self.kind {
            PotentialKind::Gaussian { width, .. } => width * (-rel.ln()).max(0.0).sqrt(),
            _ => self.support_radius().unwrap(),
        }
    }

    /// `V` as a function of `t = |r|`.
    pub fn radial(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        let v = match &self.kind {
            PotentialKind::Gaussian { amplitude, width } => amplitude * (-(t / width).powi(2)).exp(),
            PotentialKind::SmoothBump { amplitude, radius } => {
                let u = (t / radius).powi(2);
                if u < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - u)).exp()
                } else {
                    0.0
                }
            }
            PotentialKind::SquareWell { amplitude, radius } => {
                if t <= *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            PotentialKind::CoulombicCutoff => {
                if t == 0.0 {
                    return Err(Error::SingularPoint);
                }
                if t <= 1.0 {
                    2.0 / t - 1.0
                } else {
                    0.0
                }
            }
            PotentialKind::Table { radii, values } => interpolate(radii, values, t),
        };
        Ok(self.scale * v)
    }

    /// `V(r)` for a point `r ∈ ℝ^d`.
    pub fn evaluate(&self, r: &[f64]) -> Result<f64> {
        self.radial(r.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// `V_ε(r) = ε^{-2} V(r/ε)`.
    pub fn evaluate_scaled(&self, eps: f64, r: &[f64]) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(invalid("eps", "must be positive"));
        }
        let t = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(self.radial(t / eps)? / (eps * eps))
    }

    /// Radial profile of `V_ε` with the singular point replaced by `±v_cap`.
    pub fn radial_scaled_capped(&self, eps: f64, t: f64) -> f64 {
        match self.radial(t / eps) {
            Ok(v) => (v / (eps * eps)).clamp(-self.v_cap, self.v_cap),
            Err(_) => self.v_cap * self.scale.signum(),
        }
    }

    fn radial_abs(&self, t: f64) -> f64 {
        self.radial(t).map(f64::abs).unwrap_or(f64::INFINITY)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Table { radii, .. } => radii.clone(),
            PotentialKind::Gaussian { .. } => vec![],
            _ => vec![self.support_radius().unwrap()],
        }
    }
}

fn validate_table(radii: &[f64], values: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.len() != values.len() {
        return Err(invalid("table", "needs at least one (radius, value) row"));
    }
    if radii[0] < 0.0 {
        return Err(invalid("table", "radii must be nonnegative"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("table", "radii must be strictly increasing"));
    }
    Ok(())
}

fn interpolate(radii: &[f64], values: &[f64], t: f64) -> f64 {
    let last = radii.len() - 1;
    if t > radii[last] {
        return 0.0;
    }
    if t <= radii[0] {
        return values[0];
    }
    let k = radii.partition_point(|&r| r < t);
    let (r0, r1) = (radii[k - 1], radii[k]);
    let w = (t - r0) / (r1 - r0);
    values[k - 1] * (1.0 - w) + values[k] * w
}

/// Area of the unit sphere `S^{d−1}` (2 points for `d = 1`).
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d),
    }
}

fn gamma_half(d: usize) -> f64 {
    // Γ(d/2) for integer d
    if d.is_multiple_of(2) {
        (1..d / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < d as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// `sup_r V(r)|r|²` over the positive part of `V`.
pub fn compute_cv(spec: &PotentialSpec) -> Result<f64> {
    sup_weighted(spec, |v| v.max(0.0))
}

/// `sup_r |V(r)||r|²`.
pub fn compute_cv_abs(spec: &PotentialSpec) -> Result<f64> {
    sup_weighted(spec, f64::abs)
}

fn sup_weighted(spec: &PotentialSpec, part: impl Fn(f64) -> f64) -> Result<f64> {
    let f = |t: f64| part(spec.radial(t).unwrap_or(f64::INFINITY)) * t * t;
    let (hi, compact) = match spec.support_radius() {
        Some(r) => (r, true),
        None => (1e3 * spec.width(), false),
    };
    scan_sup(&f, 1e-8 * hi, hi, compact)
}

/// Supremum of `f` on `(0, hi]` by a log-spaced scan plus golden-section refinement.
///
/// A maximum sitting at the inner scan boundary (or at the outer one when the
/// profile is not compactly supported) is reported as divergence.
fn scan_sup(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, compact: bool) -> Result<f64> {
    let samples = 4000;
    let ratio = (hi / lo).powf(1.0 / samples as f64);
    let ts: Vec<f64> = (0..=samples).map(|k| lo * ratio.powi(k as i32)).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let (mut best, mut best_val) = (0, vals[0]);
    for (k, &v) in vals.iter().enumerate() {
        if v > best_val {
            best = k;
            best_val = v;
        }
    }
    if !best_val.is_finite() {
        return Err(Error::DivergentConstant { radius: ts[best] });
    }
    if best_val <= 0.0 {
        return Ok(0.0);
    }
    if best == 0 && vals[1] < vals[0] * (1.0 - 1e-9) {
        return Err(Error::DivergentConstant { radius: lo });
    }
    if best == samples && !compact && vals[samples - 1] < vals[samples] {
        return Err(Error::DivergentConstant { radius: hi });
    }
    let a = ts[best.saturating_sub(1)];
    let b = ts[(best + 1).min(samples)];
    Ok(golden_max(f, a, b, 1e-12).max(best_val))
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = fc.max(fd);
    while (b - a) > tol * (a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
    }
    best
}

const MOMENT_TOL: f64 = 1e-10;

/// `∫_{ℝ^d} |V(r)| |r|^{2s} dr`, computed radially.
pub fn compute_moment(spec: &PotentialSpec, d: usize, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(invalid("s", "must be nonnegative"));
    }
    radial_integral(spec, d, |t| t.powf(2.0 * s))
}

/// `∫_{ℝ^d} |V(r)| |r|² |log |r|| dr`.
pub fn compute_log_moment(spec: &PotentialSpec, d: usize) -> Result<f64> {
    radial_integral(spec, d, |t| t * t * t.ln().abs())
}

/// `∫ V(r) dr` with sign.
pub fn compute_integral(spec: &PotentialSpec, d: usize) -> Result<f64> {
    let signed = |t: f64| spec.radial(t).unwrap_or(f64::INFINITY);
    radial_integral_with(spec, d, &signed, |_| 1.0)
}

fn radial_integral(spec: &PotentialSpec, d: usize, weight: impl Fn(f64) -> f64) -> Result<f64> {
    radial_integral_with(spec, d, &|t| spec.radial_abs(t), weight)
}

fn radial_integral_with(
    spec: &PotentialSpec,
    d: usize,
    profile: &dyn Fn(f64) -> f64,
    weight: impl Fn(f64) -> f64,
) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return Err(invalid("d", "must be 1, 2 or 3"));
    }
    if spec.is_zero() {
        return Ok(0.0);
    }
    let rmax = spec.effective_radius();
    let mut breaks: Vec<f64> = spec.breakpoints().iter().map(|b| b.sqrt()).collect();
    breaks.push(1.0); // |log r| kink
                      // t = u² tames integrable singularities at the origin
    let g = |u: f64| {
        let t = u * u;
        if t == 0.0 {
            return 0.0;
        }
        profile(t) * weight(t) * t.powi(d as i32 - 1) * 2.0 * u
    };
    let (v, ok) = integrate(&g, 0.0, rmax.sqrt(), &breaks, MOMENT_TOL);
    if !ok || !v.is_finite() {
        return Err(Error::Integrability { change: v });
    }
    Ok(sphere_area(d) * v)
}

/// Lower bound `d²/(C_V N)` on the critical coupling from the fermionic Hardy inequality.
pub fn lambda_max_lower_bound(c_v: f64, n: usize, d: usize) -> f64 {
    (d * d) as f64 / (c_v * n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingSchedule {
    /// `λ_ε = c`
    Constant { c: f64 },
    /// `λ_ε = g ε`
    Linear { g: f64 },
    /// `1/λ_ε = |log ε|/(4π) + a`
    LogReciprocal { a: f64 },
    /// piecewise-linear interpolation in ε
    Table { eps: Vec<f64>, lambda: Vec<f64> },
}

impl CouplingSchedule {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingSchedule::Constant { .. } => "constant",
            CouplingSchedule::Linear { .. } => "linear",
            CouplingSchedule::LogReciprocal { .. } => "log_reciprocal",
            CouplingSchedule::Table { .. } => "table",
        }
    }
}

/// `λ_ε` for the given schedule.
pub fn coupling_at(schedule: &CouplingSchedule, eps: f64) -> Result<f64> {
    let bad = |reason: &str| Error::InvalidSchedule {
        eps,
        reason: reason.to_string(),
    };
    if !(eps > 0.0) {
        return Err(bad("epsilon must be positive"));
    }
    let lambda = match schedule {
        CouplingSchedule::Constant { c } => *c,
        CouplingSchedule::Linear { g } => g * eps,
        CouplingSchedule::LogReciprocal { a } => {
            if eps >= 1.0 {
                return Err(bad("log_reciprocal needs epsilon < 1"));
            }
            1.0 / (eps.ln().abs() / (4.0 * PI) + a)
        }
        CouplingSchedule::Table { eps: xs, lambda: ys } => {
            if xs.len() != ys.len() || xs.is_empty() {
                return Err(bad("table needs matching nonempty columns"));
            }
            let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
            if eps < lo || eps > hi {
                return Err(bad("epsilon outside the table range"));
            }
            let k = pts.partition_point(|p| p.0 < eps);
            if k == 0 || pts[k].0 == eps {
                pts[k].1
            } else {
                let (a, b) = (pts[k - 1], pts[k]);
                a.1 + (b.1 - a.1) * (eps - a.0) / (b.0 - a.0)
            }
        }
    };
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(bad(&format!("coupling {lambda} is not positive")));
    }
    Ok(lambda)
}

/// Whether `sup_ε λ_ε` over the sweep stays below the Hardy lower bound on λ_max.
pub fn below_hardy_threshold(
    schedule: &CouplingSchedule,
    eps: &[f64],
    spec: &PotentialSpec,
    n: usize,
    d: usize,
) -> Result<bool> {
    let c_v = compute_cv(spec)?;
    if c_v == 0.0 {
        return Ok(true);
    }
    let mut sup: f64 = 0.0;
    for &e in eps {
        sup = sup.max(coupling_at(schedule, e)?);
    }
    Ok(sup < lambda_max_lower_bound(c_v, n, d))
}
