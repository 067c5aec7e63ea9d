//! Scenario files: strict JSON parsing, initial data and the run driver.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coefficients::{check_gamma, DEFAULT_TOL_TRUNC};
use crate::diagnostics::{DiagnosticsRecord, DiagnosticsSpec};
use crate::error::{LandauError, Result};
use crate::grid::{DistributionField, VelocityGrid};
use crate::integrator::{Integrator, RunOptions, SchemeConfig, SimulationState, SnapshotPolicy};
use crate::operator::LandauOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "V")]
    pub half_width: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.n, self.half_width)
    }
}

fn unit_mass() -> f64 {
    1.0
}

fn unit_temperature() -> f64 {
    1.0
}

fn default_separation() -> f64 {
    2.0
}

fn equal_weights() -> [f64; 2] {
    [0.5, 0.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    Maxwellian {
        #[serde(default = "unit_mass")]
        mass: f64,
        #[serde(default)]
        velocity: [f64; 3],
        #[serde(default = "unit_temperature")]
        temperature: f64,
    },
    /// Two unit-temperature Maxwellians centred at ±separation/2 along v₁.
    BiMaxwellian {
        #[serde(default = "default_separation")]
        separation: f64,
        #[serde(default = "equal_weights")]
        weights: [f64; 2],
    },
    /// Unit mass, zero mean, covariance diag(T₁, T₂, T₃).
    AnisotropicGaussian { temperatures: [f64; 3] },
    /// Radial smoothstep from 1 at radius − w/2 to 0 at radius + w/2,
    /// scaled to unit discrete mass. w = 0 gives the sharp ball indicator.
    SmoothedIndicator { radius: f64, edge_width: f64 },
    /// A binary field dump; relative paths resolve against the config file.
    FromFile { path: PathBuf },
}

fn gaussian(v: [f64; 3], center: [f64; 3], temps: [f64; 3]) -> f64 {
    let mut e = 0.0;
    let mut norm = 1.0;
    for i in 0..3 {
        e += (v[i] - center[i]).powi(2) / (2.0 * temps[i]);
        norm *= 2.0 * PI * temps[i];
    }
    (-e).exp() / norm.sqrt()
}

/// 1 below 0, 0 above 1, cubic smoothstep in between.
pub fn smoothstep_down(x: f64) -> f64 {
    let t = (1.0 - x).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

impl InitialDatum {
    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(LandauError::InvalidParameter(m));
        match self {
            InitialDatum::Maxwellian { mass, temperature, .. } => {
                if !(*mass > 0.0 && *temperature > 0.0) {
                    return bad(format!("maxwellian needs positive mass and temperature, got {mass}, {temperature}"));
                }
            }
            InitialDatum::BiMaxwellian { separation, weights } => {
                if !(separation.is_finite() && weights.iter().all(|w| *w >= 0.0) && weights[0] + weights[1] > 0.0) {
                    return bad(format!("bi_maxwellian needs nonnegative weights with positive sum, got {weights:?}"));
                }
            }
            InitialDatum::AnisotropicGaussian { temperatures } => {
                if !temperatures.iter().all(|t| *t > 0.0 && t.is_finite()) {
                    return bad(format!("anisotropic_gaussian needs positive temperatures, got {temperatures:?}"));
                }
            }
            InitialDatum::SmoothedIndicator { radius, edge_width } => {
                if !(*radius > 0.0 && *edge_width >= 0.0 && *edge_width <= 2.0 * radius) {
                    return bad(format!(
                        "smoothed_indicator needs radius > 0 and 0 <= edge_width <= 2 radius, got {radius}, {edge_width}"
                    ));
                }
            }
            InitialDatum::FromFile { .. } => {}
        }
        Ok(())
    }

    /// Sample on `grid`; `base` resolves relative file paths.
    pub fn discretize(&self, grid: VelocityGrid, base: &Path) -> Result<DistributionField> {
        self.check()?;
        let f = match self {
            InitialDatum::Maxwellian {
                mass,
                velocity,
                temperature,
            } => DistributionField::from_fn(grid, |v| mass * gaussian(v, *velocity, [*temperature; 3])),
            InitialDatum::BiMaxwellian { separation, weights } => {
                let d = 0.5 * separation;
                let total = weights[0] + weights[1];
                DistributionField::from_fn(grid, |v| {
                    (weights[0] * gaussian(v, [d, 0.0, 0.0], [1.0; 3]) + weights[1] * gaussian(v, [-d, 0.0, 0.0], [1.0; 3])) / total
                })
            }
            InitialDatum::AnisotropicGaussian { temperatures } => {
                DistributionField::from_fn(grid, |v| gaussian(v, [0.0; 3], *temperatures))
            }
            InitialDatum::SmoothedIndicator { radius, edge_width } => {
                let (r0, w) = (*radius, *edge_width);
                let raw = DistributionField::from_fn(grid, |v| {
                    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    if w == 0.0 {
                        if r <= r0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        smoothstep_down((r - (r0 - 0.5 * w)) / w)
                    }
                });
                let m = raw.mass();
                if m <= 0.0 {
                    return Err(LandauError::InvalidParameter(format!(
                        "smoothed_indicator of radius {r0} has no grid nodes inside"
                    )));
                }
                raw.scaled(1.0 / m)
            }
            InitialDatum::FromFile { path } => {
                let p = if path.is_relative() { base.join(path) } else { path.clone() };
                let (_, f) = crate::io::read_dump_file(&p)?;
                grid.same_as(&f.grid)?;
                f
            }
        };
        Ok(f)
    }
}

fn default_diag_every() -> usize {
    10
}

fn default_c0_list() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn default_m_max() -> u32 {
    4
}

fn default_tol_trunc() -> f64 {
    DEFAULT_TOL_TRUNC
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub gamma: f64,
    pub grid: GridSpec,
    pub initial_datum: InitialDatum,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default = "default_diag_every")]
    pub diag_every: usize,
    #[serde(default = "default_c0_list")]
    pub c0_list: Vec<f64>,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    /// Sobolev weight exponent; defaults to γ.
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default = "default_tol_trunc")]
    pub tol_trunc: f64,
}

/// Parse and validate a scenario document. Unknown and duplicate keys are
/// rejected with the path of the offending field.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| LandauError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    de.end().map_err(|e| LandauError::Config {
        path: ".".into(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read a scenario file; relative datum paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<(ScenarioConfig, PathBuf)> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_config(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        self.grid.build()?;
        self.scheme.validate()?;
        self.initial_datum.check()?;
        let bad = |m: String| Err(LandauError::InvalidParameter(m));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and nonnegative, got {}", self.t_end));
        }
        if self.diag_every == 0 {
            return bad("diag_every must be at least 1".into());
        }
        if let Some(c) = self.c0_list.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
            return bad(format!("analytic-norm exponents must be finite and nonnegative, got {c}"));
        }
        if self.m_max > crate::grid::DEFAULT_ALPHA_MAX {
            return bad(format!("m_max = {} exceeds {}", self.m_max, crate::grid::DEFAULT_ALPHA_MAX));
        }
        if !(self.tol_trunc > 0.0 && self.tol_trunc <= 1.0) {
            return bad(format!("tol_trunc must lie in (0, 1], got {}", self.tol_trunc));
        }
        Ok(())
    }

    pub fn sobolev_weight(&self) -> f64 {
        self.s.unwrap_or(self.gamma)
    }

    pub fn diagnostics(&self) -> DiagnosticsSpec {
        DiagnosticsSpec {
            m_max: self.m_max,
            s: self.sobolev_weight(),
            c0_list: self.c0_list.clone(),
        }
    }

    pub fn run_options(&self, snapshots: SnapshotPolicy) -> RunOptions {
        RunOptions {
            t_end: self.t_end,
            diag_every: self.diag_every,
            diagnostics: self.diagnostics(),
            snapshots,
        }
    }

    pub fn integrator(&self) -> Result<Integrator> {
        let op = LandauOperator::new(self.grid.build()?, self.gamma)?.with_tol_trunc(self.tol_trunc);
        Integrator::new(op, self.scheme.clone())
    }

    /// f₀ on the grid, checked against the boundary-mass tolerance.
    pub fn initial_field(&self, base: &Path) -> Result<DistributionField> {
        let f = self.initial_datum.discretize(self.grid.build()?, base)?;
        f.check_boundary_mass(self.tol_trunc)?;
        Ok(f)
    }
}

/// Run a scenario, streaming records to `sink`.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    base: &Path,
    snapshots: SnapshotPolicy,
    sink: impl FnMut(&DiagnosticsRecord, Option<&DistributionField>) -> Result<()>,
) -> Result<SimulationState> {
    let f0 = cfg.initial_field(base)?;
    cfg.integrator()?.run_with(f0, &cfg.run_options(snapshots), sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::functionals;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"{"gamma":0,"grid":{"n":32,"V":8},"initial_datum":{"kind":"maxwellian"},"t_end":0.5}"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid, GridSpec { n: 32, half_width: 8.0 });
        assert_eq!(c.scheme, SchemeConfig::default());
        assert_eq!(c.diag_every, 10);
        assert_eq!(c.m_max, 4);
        assert_eq!(c.sobolev_weight(), 0.0);
        assert_eq!(c.tol_trunc, DEFAULT_TOL_TRUNC);
        assert_eq!(
            c.initial_datum,
            InitialDatum::Maxwellian {
                mass: 1.0,
                velocity: [0.0; 3],
                temperature: 1.0
            }
        );
    }

    #[test]
    fn gamma_outside_the_admissible_interval() {
        let e = parse_config(&MINIMAL.replace(r#""gamma":0"#, r#""gamma":1.5"#)).unwrap_err();
        assert!(matches!(e, LandauError::GammaOutOfRange(g) if g == 1.5));
        assert!(e.to_string().contains("[0, 1]"));
    }

    #[test]
    fn strict_mode_rejections() {
        let unknown = MINIMAL.replace(r#""t_end":0.5"#, r#""t_end":0.5,"tend":1"#);
        match parse_config(&unknown) {
            Err(LandauError::Config { message, .. }) => assert!(message.contains("tend")),
            other => panic!("{other:?}"),
        }
        let dup = MINIMAL.replace(r#""t_end":0.5"#, r#""t_end":0.5,"t_end":1"#);
        match parse_config(&dup) {
            Err(LandauError::Config { message, .. }) => assert!(message.contains("duplicate")),
            other => panic!("{other:?}"),
        }
        let nested = MINIMAL.replace(r#""V":8"#, r#""V":8,"h":0.5"#);
        match parse_config(&nested) {
            Err(LandauError::Config { path, .. }) => assert_eq!(path, "grid.h"),
            other => panic!("{other:?}"),
        }
        let datum = MINIMAL.replace(r#"{"kind":"maxwellian"}"#, r#"{"kind":"maxwellian","radius":1}"#);
        assert!(matches!(parse_config(&datum), Err(LandauError::Config { .. })));
        let scheme = MINIMAL.replace(r#""t_end":0.5"#, r#""t_end":0.5,"scheme":{"cfl":0.3,"order":4}"#);
        match parse_config(&scheme) {
            Err(LandauError::Config { path, .. }) => assert_eq!(path, "scheme.order"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config(&format!("{MINIMAL} {{}}")), Err(LandauError::Config { .. })));
        let kind = MINIMAL.replace("maxwellian", "lorentzian");
        assert!(matches!(parse_config(&kind), Err(LandauError::Config { .. })));
        let ty = MINIMAL.replace(r#""n":32"#, r#""n":"32""#);
        match parse_config(&ty) {
            Err(LandauError::Config { path, .. }) => assert_eq!(path, "grid.n"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn physical_ranges() {
        for (from, to) in [
            (r#""n":32"#, r#""n":30"#),
            (r#""t_end":0.5"#, r#""t_end":-1"#),
            (r#""t_end":0.5"#, r#""t_end":0.5,"diag_every":0"#),
            (r#""t_end":0.5"#, r#""t_end":0.5,"c0_list":[-1]"#),
            (r#""t_end":0.5"#, r#""t_end":0.5,"scheme":{"cfl":2}"#),
        ] {
            assert!(parse_config(&MINIMAL.replace(from, to)).is_err(), "{to}");
        }
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"{
            "gamma": 1, "grid": {"n": 32, "V": 8},
            "initial_datum": {"kind": "smoothed_indicator", "radius": 2, "edge_width": 1.5},
            "t_end": 1, "diag_every": 20, "c0_list": [0.5], "m_max": 3, "s": 2,
            "scheme": {"scheme": "rkc", "dt_max": 0.005, "refresh": "per_step",
                       "freeze": {"inner": 0.6, "outer": 0.9}}
        }"#;
        let c = parse_config(text).unwrap();
        let back = parse_config(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.sobolev_weight(), 2.0);
        let none = MINIMAL.replace(r#""t_end":0.5"#, r#""t_end":0.5,"scheme":{"freeze":null}"#);
        assert_eq!(parse_config(&none).unwrap().scheme.freeze, None);
    }

    #[test]
    fn data_have_the_requested_moments() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let base = Path::new(".");
        let aniso = InitialDatum::AnisotropicGaussian {
            temperatures: [2.0, 0.5, 0.5],
        }
        .discretize(g, base)
        .unwrap();
        let fun = functionals(&aniso);
        // V = 8 is 5.7 standard deviations along the hot axis
        assert!((fun.mass - 1.0).abs() < 3e-8);
        assert!((fun.energy - 1.5).abs() < 1e-6);
        let bi = InitialDatum::BiMaxwellian {
            separation: 2.0,
            weights: [0.5, 0.5],
        }
        .discretize(g, base)
        .unwrap();
        let fun = functionals(&bi);
        assert!((fun.mass - 1.0).abs() < 1e-9);
        // E = ½(3 + 1)
        assert!((fun.energy - 2.0).abs() < 1e-8);
        let ind = InitialDatum::SmoothedIndicator {
            radius: 2.0,
            edge_width: 1.5,
        }
        .discretize(g, base)
        .unwrap();
        assert!((ind.mass() - 1.0).abs() < 1e-12);
        assert!(ind.values.iter().all(|&x| x >= 0.0));
        assert!(ind.check_boundary_mass(DEFAULT_TOL_TRUNC).is_ok());
    }

    #[test]
    fn bad_datum_parameters() {
        let g = VelocityGrid::new(16, 8.0).unwrap();
        let base = Path::new(".");
        for d in [
            InitialDatum::AnisotropicGaussian {
                temperatures: [1.0, 0.0, 1.0],
            },
            InitialDatum::SmoothedIndicator {
                radius: 1.0,
                edge_width: 3.0,
            },
            InitialDatum::BiMaxwellian {
                separation: 1.0,
                weights: [0.0, 0.0],
            },
        ] {
            assert!(d.discretize(g, base).is_err(), "{d:?}");
        }
    }

    #[test]
    fn equilibrium_scenario_runs() {
        let text = r#"{"gamma":0,"grid":{"n":32,"V":8},"initial_datum":{"kind":"maxwellian"},"t_end":0.002,"diag_every":4}"#;
        let cfg = parse_config(text).unwrap();
        let mut recs = Vec::new();
        let end = run_scenario(&cfg, Path::new("."), SnapshotPolicy::None, |r, s| {
            assert!(s.is_none());
            recs.push(r.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(end.t, 0.002);
        assert!(recs.len() >= 2);
        for r in &recs {
            assert!((r.mass / recs[0].mass - 1.0).abs() <= 1e-6);
            assert!((r.energy / recs[0].energy - 1.0).abs() <= 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn smoothstep_is_monotone_and_bounded(a in -1.0..2.0f64, b in -1.0..2.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(smoothstep_down(lo) >= smoothstep_down(hi));
            prop_assert!((0.0..=1.0).contains(&smoothstep_down(a)));
        }

        #[test]
        fn any_admissible_gamma_parses(gamma in 0.0..=1.0f64) {
            let text = MINIMAL.replace(r#""gamma":0"#, &format!(r#""gamma":{gamma}"#));
            prop_assert_eq!(parse_config(&text).unwrap().gamma, gamma);
        }
    }
}
