use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metaplectic::Profile;
use crate::models::{Dispersion, HamiltonianModel, Potential, QuadraticPhase, ScalarFunction};
use crate::phase_space::GridSpec;

/// Hamiltonian selection, keyed by `model = "..."`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Free,
    /// `h(p) = p^2/2 + eps p^4`.
    Integrable { eps: f64 },
    Barrier { v0: f64 },
    /// `V(q) = c q^2/2 + g q^4/4`.
    Potential {
        c: f64,
        #[serde(default)]
        g: f64,
    },
    Kho { k: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<HamiltonianModel> {
        match *self {
            Self::Free => Ok(HamiltonianModel::free()),
            Self::Integrable { eps } => {
                if !(eps >= 0.0) {
                    return Err(Error::InvalidParameter(format!("eps must be non-negative, got {eps}")));
                }
                Ok(HamiltonianModel::integrable(Dispersion::quartic(eps)))
            }
            Self::Barrier { v0 } => HamiltonianModel::barrier(v0),
            Self::Potential { c, g } if g == 0.0 => Ok(HamiltonianModel::potential(Potential::quadratic(c))),
            Self::Potential { c, g } => Ok(HamiltonianModel::potential(Potential::new(ScalarFunction::new(
                format!("{c} q^2/2 + {g} q^4/4"),
                move |q| 0.5 * c * q * q + 0.25 * g * q.powi(4),
                move |q| c * q + g * q.powi(3),
                move |q| c + 3.0 * g * q * q,
            )))),
            Self::Kho { k } => HamiltonianModel::kicked_harmonic(k),
        }
    }

    pub fn is_kicked(&self) -> bool {
        matches!(self, Self::Kho { .. })
    }
}

/// Initial Lagrangian line. `theta` is the slope angle in units of `pi/2`
/// and wins over `alpha` when both are given.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    #[serde(default)]
    pub p0: f64,
    #[serde(default)]
    pub q0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl PhaseSpec {
    pub fn theta(theta: f64) -> Self {
        Self {
            theta: Some(theta),
            ..Self::default()
        }
    }

    pub fn alpha(p0: f64, q0: f64, alpha: f64) -> Self {
        Self {
            p0,
            q0,
            alpha: Some(alpha),
            theta: None,
        }
    }

    pub fn build(&self) -> Result<QuadraticPhase> {
        match (self.theta, self.alpha) {
            (Some(th), _) => QuadraticPhase::from_theta(self.p0, self.q0, th * std::f64::consts::FRAC_PI_2),
            (None, a) => Ok(QuadraticPhase::new(self.p0, self.q0, a.unwrap_or(0.0))),
        }
    }

    pub fn label(&self) -> String {
        match (self.theta, self.alpha) {
            (Some(th), _) => format!("theta={th}"),
            (None, a) => format!("alpha={}", a.unwrap_or(0.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    /// Widen or refine until the reference states keep edge mass below 1e-12.
    #[serde(default = "yes")]
    pub resolve: bool,
}

fn yes() -> bool {
    true
}

impl GridConfig {
    pub fn symmetric(half_width: f64, n_points: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            n_points,
            resolve: true,
        }
    }

    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::new(self.x_min, self.x_max, self.n_points)
    }
}

/// Which side of a kick a sample sits on. Plain integer times of the kicked
/// model are taken just before the kick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KickSide {
    Plain,
    Before,
    After,
}

/// A sampling time such as `2.5`, `4-` or `4+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTime {
    pub t: f64,
    pub side: KickSide,
}

impl SampleTime {
    pub fn plain(t: f64) -> Self {
        Self { t, side: KickSide::Plain }
    }

    pub fn before(t: f64) -> Self {
        Self { t, side: KickSide::Before }
    }

    pub fn after(t: f64) -> Self {
        Self { t, side: KickSide::After }
    }

    fn order_key(&self) -> (f64, u8) {
        (self.t, u8::from(self.side == KickSide::After))
    }
}

impl fmt::Display for SampleTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            KickSide::Plain => write!(f, "{}", self.t),
            KickSide::Before => write!(f, "{}-", self.t),
            KickSide::After => write!(f, "{}+", self.t),
        }
    }
}

impl FromStr for SampleTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, side) = if let Some(b) = s.strip_suffix('-') {
            (b, KickSide::Before)
        } else if let Some(b) = s.strip_suffix('+') {
            (b, KickSide::After)
        } else {
            (s, KickSide::Plain)
        };
        let t: f64 = body
            .parse()
            .map_err(|e| Error::Parse(format!("time `{s}`: {e}")))?;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Parse(format!("time `{s}` must be finite and non-negative")));
        }
        if side != KickSide::Plain && t.fract() != 0.0 {
            return Err(Error::Parse(format!("time `{s}`: kick sides only exist at integers")));
        }
        Ok(Self { t, side })
    }
}

impl Serialize for SampleTime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SampleTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Label(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(t) => Ok(Self::plain(t)),
            Raw::Label(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Extwkb,
    Thawed,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Semiclassical states against the grid reference for every initial line.
    Propagation,
    /// Long-time fate of packets launched near the barrier top.
    BarrierSweep,
    /// Lyapunov exponent and Ehrenfest time of the fixed point at the origin.
    Lyapunov,
}

/// Pass/fail thresholds evaluated after a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_fidelity: Option<f64>,
    /// Extended WKB must be closer to the reference than the thawed Gaussian
    /// at the last sample time.
    #[serde(default)]
    pub beats_thawed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_backward_l2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_amplitude_deviation: Option<f64>,
    /// Largest fidelity loss at the last time relative to the first line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_slope_drop: Option<f64>,
    /// Final extended WKB states of all lines must agree to this fidelity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_pairwise_fidelity: Option<f64>,
    /// Entry of the baseline file whose frozen bounds also apply.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ehrenfest_time: Option<[f64; 2]>,
    /// Sign of the final mean position must follow the sign of the offset.
    #[serde(default)]
    pub trichotomy: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_band_mass: Option<f64>,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Extwkb, Method::Thawed, Method::Exact]
}

fn ground() -> Profile {
    Profile::ground()
}

fn is_ground(p: &Profile) -> bool {
    *p == Profile::ground()
}

/// One experiment, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub hbar: f64,
    pub model: ModelSpec,
    pub grid: GridConfig,
    #[serde(default)]
    pub times: Vec<SampleTime>,
    #[serde(default)]
    pub phases: Vec<PhaseSpec>,
    #[serde(default = "ground", skip_serializing_if = "is_ground")]
    pub profile: Profile,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Chirp each line's profile so that every line describes the initial
    /// state of the first one.
    #[serde(default)]
    pub shared_state: bool,
    /// Write amplitude and phase-derivative profiles of the backward test.
    #[serde(default)]
    pub profiles: bool,
    /// Offsets `p + lambda q` for barrier sweeps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub offsets: Vec<f64>,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {}", self.hbar)));
        }
        self.model.build()?;
        self.grid.build()?;
        for w in self.times.windows(2) {
            if w[1].order_key() <= w[0].order_key() {
                return Err(Error::InvalidParameter(format!(
                    "times must be strictly ascending: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if !self.model.is_kicked() && self.times.iter().any(|t| t.side != KickSide::Plain) {
            return Err(Error::InvalidParameter("kick sides need the kicked model".into()));
        }
        for ph in &self.phases {
            ph.build()?;
        }
        match self.kind {
            ExperimentKind::Propagation => {
                if self.times.is_empty() || self.phases.is_empty() {
                    return Err(Error::InvalidParameter("propagation needs times and phases".into()));
                }
            }
            ExperimentKind::BarrierSweep => {
                if !matches!(self.model, ModelSpec::Barrier { .. }) || self.offsets.is_empty() {
                    return Err(Error::InvalidParameter("barrier sweeps need the barrier model and offsets".into()));
                }
            }
            ExperimentKind::Lyapunov => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_labels_round_trip() {
        for s in ["4-", "4+", "2.5", "0"] {
            let t: SampleTime = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        assert!("2.5+".parse::<SampleTime>().is_err());
        assert!("-1".parse::<SampleTime>().is_err());
    }

    #[test]
    fn parses_minimal_toml() {
        let spec = ExperimentSpec::from_toml(
            r#"
            name = "demo"
            kind = "propagation"
            hbar = 0.01
            times = [1, "2"]
            model = { model = "barrier", v0 = 1.0 }
            grid = { x_min = -8, x_max = 8, n_points = 2048 }
            phases = [{ p0 = 0.5, alpha = 1.0 }, { theta = 0.35 }]
            "#,
        )
        .unwrap();
        assert_eq!(spec.methods, default_methods());
        assert_eq!(spec.times[1], SampleTime::plain(2.0));
        assert!((spec.phases[1].build().unwrap().alpha - (0.35 * std::f64::consts::FRAC_PI_2).tan()).abs() < 1e-15);
        assert_eq!(ExperimentSpec::from_toml(&spec.to_toml().unwrap()).unwrap(), spec);
    }

    #[test]
    fn rejects_bad_specs() {
        let base = r#"
            name = "x"
            kind = "propagation"
            hbar = 0.01
            model = { model = "free" }
            grid = { x_min = -8, x_max = 8, n_points = 2048 }
            phases = [{}]
        "#;
        assert!(ExperimentSpec::from_toml(&format!("{base}\ntimes = [2, 1]")).is_err());
        assert!(ExperimentSpec::from_toml(&format!("{base}\ntimes = [\"1+\"]")).is_err());
        assert!(ExperimentSpec::from_toml(&format!("{base}\ntimes = [1]\nmethods = [\"magic\"]")).is_err());
        assert!(ExperimentSpec::from_toml(&format!("{base}\ntimes = [1]\nbogus = 3")).is_err());
        assert!(ExperimentSpec::from_toml(&format!("{base}\ntimes = [1]")).is_ok());
    }
}
