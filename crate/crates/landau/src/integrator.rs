//! Explicit time stepping of ∂_t f = Q(f).
//!
//! RK4 and RK2 use dt = cfl·h²/(6Λ) from the current coefficient field.
//! RKC is a damped Runge–Kutta–Chebyshev method whose stage count grows
//! like the square root of the stiffness, which keeps long runs at n = 32
//! affordable.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientField;
use crate::diagnostics::{functionals, DiagnosticsRecord, DiagnosticsSpec};
use crate::error::{LandauError, Result};
use crate::grid::DistributionField;
use crate::operator::{FarFieldFreeze, LandauOperator};

pub const DEFAULT_RKC_DT: f64 = 5e-3;
const RKC_DAMPING: f64 = 2.0 / 13.0;
/// Required ratio of the RKC stability interval to dt·ρ.
const RKC_MARGIN: f64 = 1.2;
const RKC_MAX_STAGES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
    Rk2,
    Rkc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refresh {
    /// Reassemble ā and c̄ at every stage.
    EveryStage,
    /// Assemble once per step and hold the coefficients through its stages.
    PerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub cfl: f64,
    pub dt_max: Option<f64>,
    pub refresh: Refresh,
    pub tol_neg: f64,
    /// Clip negative values and rescale to the pre-clip mass after each step.
    pub clip: bool,
    pub freeze: Option<FarFieldFreeze>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            scheme: Scheme::Rk4,
            cfl: 0.25,
            dt_max: None,
            refresh: Refresh::EveryStage,
            tol_neg: 1e-6,
            clip: false,
            freeze: Some(FarFieldFreeze::default()),
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(LandauError::InvalidParameter(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if let Some(dt) = self.dt_max {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(LandauError::InvalidParameter(format!("dt_max must be positive, got {dt}")));
            }
        }
        if !(self.tol_neg >= 0.0) {
            return Err(LandauError::InvalidParameter(format!("tol_neg must be nonnegative, got {}", self.tol_neg)));
        }
        if let Some(fz) = &self.freeze {
            fz.validate()?;
        }
        Ok(())
    }
}

/// dt = cfl·h²/(2dΛ) with d = 3 and Λ = max_v λ_max(ā(v)).
pub fn stable_dt(coeffs: &CoefficientField, h: f64, cfl: f64) -> Result<f64> {
    dt_for_stiffness(coeffs.max_eigenvalue(), h, cfl)
}

fn dt_for_stiffness(lambda: f64, h: f64, cfl: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(LandauError::Degenerate(format!("largest diffusion eigenvalue is {lambda:e}")));
    }
    Ok(cfl * h * h / (6.0 * lambda))
}

/// Spectral radius bound of Σ ā_ij ∂_ij with spectral derivatives.
fn spectral_radius(lambda: f64, h: f64) -> f64 {
    3.0 * lambda * (PI / h).powi(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkcCoefficients {
    pub stages: usize,
    w0: f64,
    w1: f64,
    b: Vec<f64>,
    a: Vec<f64>,
    /// Length of the real stability interval [−β, 0].
    pub beta: f64,
}

impl RkcCoefficients {
    pub fn new(stages: usize) -> Self {
        let s = stages.max(2);
        let w0 = 1.0 + RKC_DAMPING / (s * s) as f64;
        let mut t = vec![1.0, w0];
        let mut tp = vec![0.0, 1.0];
        let mut tpp = vec![0.0, 0.0];
        for j in 2..=s {
            t.push(2.0 * w0 * t[j - 1] - t[j - 2]);
            tp.push(2.0 * t[j - 1] + 2.0 * w0 * tp[j - 1] - tp[j - 2]);
            tpp.push(4.0 * tp[j - 1] + 2.0 * w0 * tpp[j - 1] - tpp[j - 2]);
        }
        let w1 = tp[s] / tpp[s];
        let mut b = vec![0.0; s + 1];
        for j in 2..=s {
            b[j] = tpp[j] / (tp[j] * tp[j]);
        }
        b[0] = b[2];
        b[1] = b[2];
        let a = (0..=s).map(|j| 1.0 - b[j] * t[j]).collect();
        RkcCoefficients {
            stages: s,
            w0,
            w1,
            b,
            a,
            beta: (w0 + 1.0) * tpp[s] / tp[s],
        }
    }

    /// Fewest stages whose stability interval covers `margin`·dt·ρ.
    pub fn covering(dt_rho: f64) -> Result<Self> {
        let need = RKC_MARGIN * dt_rho;
        let guess = ((need / beta_estimate(1.0)).sqrt().floor() as usize).max(2);
        let mut s = guess.saturating_sub(2).max(2);
        loop {
            let c = RkcCoefficients::new(s);
            if c.beta >= need {
                return Ok(c);
            }
            s += 1;
            if s > RKC_MAX_STAGES {
                return Err(LandauError::InvalidParameter(format!(
                    "dt·ρ = {dt_rho:e} needs more than {RKC_MAX_STAGES} Chebyshev stages"
                )));
            }
        }
    }
}

/// β(s) ≈ (2/3)(1 − 2ε/15)s² for large s.
fn beta_estimate(s: f64) -> f64 {
    2.0 / 3.0 * (1.0 - 2.0 * RKC_DAMPING / 15.0) * s * s
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

fn rk4_step(y: &[f64], k1: Vec<f64>, dt: f64, mut rhs: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let k2 = rhs(&axpy(y, 0.5 * dt, &k1))?;
    let k3 = rhs(&axpy(y, 0.5 * dt, &k2))?;
    let k4 = rhs(&axpy(y, dt, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]))
        .collect())
}

fn rk2_step(y: &[f64], k1: Vec<f64>, dt: f64, mut rhs: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let k2 = rhs(&axpy(y, dt, &k1))?;
    Ok((0..y.len()).map(|i| y[i] + 0.5 * dt * (k1[i] + k2[i])).collect())
}

fn rkc_step(
    y: &[f64],
    f0: Vec<f64>,
    dt: f64,
    c: &RkcCoefficients,
    mut rhs: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let mut prev2 = y.to_vec();
    let mut prev1 = axpy(y, c.b[1] * c.w1 * dt, &f0);
    for j in 2..=c.stages {
        let mu = 2.0 * c.b[j] * c.w0 / c.b[j - 1];
        let nu = -c.b[j] / c.b[j - 2];
        let mut_ = 2.0 * c.b[j] * c.w1 / c.b[j - 1];
        let gt = -c.a[j - 1] * mut_;
        let fj = rhs(&prev1)?;
        let next: Vec<f64> = (0..y.len())
            .map(|i| (1.0 - mu - nu) * y[i] + mu * prev1[i] + nu * prev2[i] + mut_ * dt * fj[i] + gt * dt * f0[i])
            .collect();
        prev2 = std::mem::replace(&mut prev1, next);
    }
    Ok(prev1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub t: f64,
    pub f: DistributionField,
    pub last_dt: f64,
    pub step_count: usize,
    /// Steps after which negative values were clipped.
    pub clipped_steps: usize,
}

impl SimulationState {
    pub fn initial(f: DistributionField) -> Self {
        SimulationState {
            t: 0.0,
            f,
            last_dt: 0.0,
            step_count: 0,
            clipped_steps: 0,
        }
    }
}

/// What one step did besides producing the new state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    pub stages: usize,
    /// Λ used for the step size (χ-weighted when a freeze band is active)
    pub stiffness: f64,
}

pub struct Integrator {
    op: LandauOperator,
    config: SchemeConfig,
}

impl Integrator {
    pub fn new(op: LandauOperator, config: SchemeConfig) -> Result<Self> {
        config.validate()?;
        let op = op.with_freeze(config.freeze)?;
        Ok(Integrator { op, config })
    }

    pub fn operator(&self) -> &LandauOperator {
        &self.op
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    /// Λ for the step-size rule. Inside a freeze band the diffusion is χā,
    /// so frozen nodes do not constrain dt.
    pub fn stiffness(&self, coeffs: &CoefficientField) -> f64 {
        match self.op.freeze_weights() {
            Some(w) => coeffs.max_weighted_eigenvalue(w),
            None => coeffs.max_eigenvalue(),
        }
    }

    /// Largest dt the configured scheme accepts for these coefficients.
    pub fn dt_limit(&self, coeffs: &CoefficientField) -> Result<f64> {
        let limit = match self.config.scheme {
            Scheme::Rkc => self.config.dt_max.unwrap_or(DEFAULT_RKC_DT),
            _ => {
                let dt = dt_for_stiffness(self.stiffness(coeffs), self.op.grid().h(), self.config.cfl)?;
                self.config.dt_max.map_or(dt, |m| dt.min(m))
            }
        };
        Ok(limit)
    }

    /// One step of size exactly `dt`; rejects dt above [`dt_limit`](Self::dt_limit).
    pub fn step(&self, state: &SimulationState, dt: f64) -> Result<SimulationState> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(LandauError::InvalidParameter(format!("step size must be finite and nonnegative, got {dt}")));
        }
        let (k1, coeffs) = self.op.rhs(&state.f)?;
        let limit = self.dt_limit(&coeffs)?;
        if dt > limit * (1.0 + 1e-12) {
            return Err(LandauError::UnstableStep { dt, limit });
        }
        Ok(self.finish_step(state, k1, &coeffs, dt)?.0)
    }

    /// One step of the largest admissible size not exceeding `dt_cap`.
    pub fn advance(&self, state: &SimulationState, dt_cap: f64) -> Result<(SimulationState, StepInfo)> {
        let (k1, coeffs) = self.op.rhs(&state.f)?;
        let dt = self.dt_limit(&coeffs)?.min(dt_cap);
        self.finish_step(state, k1, &coeffs, dt)
    }

    fn finish_step(
        &self,
        state: &SimulationState,
        k1: Vec<f64>,
        coeffs: &CoefficientField,
        dt: f64,
    ) -> Result<(SimulationState, StepInfo)> {
        let grid = *self.op.grid();
        let stiffness = self.stiffness(coeffs);
        let y = &state.f.values;
        let rhs = |x: &[f64]| -> Result<Vec<f64>> {
            let field = DistributionField::new(grid, x.to_vec())?;
            match self.config.refresh {
                Refresh::EveryStage => Ok(self.op.rhs(&field)?.0),
                Refresh::PerStep => self.op.rhs_frozen(&field, coeffs),
            }
        };
        let (values, stages) = if dt == 0.0 {
            (y.clone(), 0)
        } else {
            match self.config.scheme {
                Scheme::Rk4 => (rk4_step(y, k1, dt, rhs)?, 4),
                Scheme::Rk2 => (rk2_step(y, k1, dt, rhs)?, 2),
                Scheme::Rkc => {
                    let c = RkcCoefficients::covering(dt * spectral_radius(stiffness, grid.h()))?;
                    let s = c.stages;
                    (rkc_step(y, k1, dt, &c, rhs)?, s)
                }
            }
        };
        let t = state.t + dt;
        if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
            return Err(LandauError::NonFinite(*bad));
        }
        let mut f = DistributionField::new(grid, values)?;
        let mut clipped_steps = state.clipped_steps;
        let (min, max) = f
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if min < -self.config.tol_neg * max {
            if !self.config.clip {
                return Err(LandauError::Undershoot {
                    t,
                    min,
                    max,
                    tol: self.config.tol_neg,
                });
            }
            let before = f.mass();
            f.values.iter_mut().for_each(|x| *x = x.max(0.0));
            let after = f.mass();
            if after > 0.0 {
                f.values.iter_mut().for_each(|x| *x *= before / after);
            }
            clipped_steps += 1;
        }
        Ok((
            SimulationState {
                t,
                f,
                last_dt: dt,
                step_count: state.step_count + 1,
                clipped_steps,
            },
            StepInfo { dt, stages, stiffness },
        ))
    }

    /// Integrate to `t_end`, handing each diagnostics record (and snapshot,
    /// when the policy asks for one) to `sink` as it is produced.
    pub fn run_with(
        &self,
        f0: DistributionField,
        options: &RunOptions,
        mut sink: impl FnMut(&DiagnosticsRecord, Option<&DistributionField>) -> Result<()>,
    ) -> Result<SimulationState> {
        if !(options.t_end >= 0.0 && options.t_end.is_finite()) {
            return Err(LandauError::InvalidParameter(format!("t_end must be finite and nonnegative, got {}", options.t_end)));
        }
        if options.diag_every == 0 {
            return Err(LandauError::InvalidParameter("diag_every must be at least 1".into()));
        }
        let mut state = SimulationState::initial(f0);
        let mut n_records = 0usize;
        let mut emit = |state: &SimulationState, n_records: &mut usize| -> Result<()> {
            let coeffs = self.op.coefficients(&state.f)?;
            let rec = DiagnosticsRecord::compute(state.t, &state.f, &coeffs, &options.diagnostics, self.op.engine())?;
            let snap = options.snapshots.wants(*n_records).then_some(&state.f);
            *n_records += 1;
            sink(&rec, snap)
        };
        let at = |t: f64| move |e: LandauError| LandauError::AtTime { t, source: Box::new(e) };
        emit(&state, &mut n_records).map_err(at(0.0))?;
        let mut since_record = 0usize;
        while state.t < options.t_end && options.t_end - state.t > 1e-12 * options.t_end {
            let t_now = state.t;
            let (mut next, _) = self.advance(&state, options.t_end - state.t).map_err(at(t_now))?;
            if options.t_end - next.t <= 1e-12 * options.t_end {
                next.t = options.t_end;
            }
            state = next;
            since_record += 1;
            let last = state.t >= options.t_end;
            if since_record == options.diag_every || last {
                emit(&state, &mut n_records).map_err(at(state.t))?;
                since_record = 0;
            }
        }
        Ok(state)
    }

    /// [`run_with`](Self::run_with) collecting everything in memory.
    pub fn run(&self, f0: DistributionField, options: &RunOptions) -> Result<Trajectory> {
        let mut records = Vec::new();
        let mut snapshots = Vec::new();
        let final_state = self.run_with(f0, options, |rec, snap| {
            if let Some(f) = snap {
                snapshots.push((rec.t, f.clone()));
            }
            records.push(rec.clone());
            Ok(())
        })?;
        Ok(Trajectory {
            records,
            snapshots,
            final_state,
        })
    }
}

/// One rung of a fixed-step refinement ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderLevel {
    pub steps: usize,
    pub dt: f64,
    pub field: DistributionField,
    /// |M(t_end) − M(0)| / M(0)
    pub mass_drift: f64,
    /// |E(t_end) − E(0)| / E(0)
    pub energy_drift: f64,
}

/// Integrates `f0` to `t_end` with `base_steps · 2^k` equal steps for
/// k = 0..levels. Every step must respect the stability limit.
pub fn time_ladder(
    it: &Integrator,
    f0: &DistributionField,
    t_end: f64,
    base_steps: usize,
    levels: usize,
) -> Result<Vec<LadderLevel>> {
    if base_steps == 0 || levels == 0 || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(LandauError::InvalidParameter(format!(
            "ladder needs t_end > 0 and at least one level and step, got t_end={t_end}, base_steps={base_steps}, levels={levels}"
        )));
    }
    let start = functionals(f0);
    (0..levels)
        .map(|k| {
            let steps = base_steps << k;
            let dt = t_end / steps as f64;
            let mut s = SimulationState::initial(f0.clone());
            for _ in 0..steps {
                s = it.step(&s, dt).map_err(|e| LandauError::AtTime { t: s.t, source: Box::new(e) })?;
            }
            let end = functionals(&s.f);
            Ok(LadderLevel {
                steps,
                dt,
                mass_drift: (end.mass - start.mass).abs() / start.mass.abs(),
                energy_drift: (end.energy - start.energy).abs() / start.energy.abs(),
                field: s.f,
            })
        })
        .collect()
}

/// Observed orders log₂(e_k / e_{k+1}) from successive differences
/// e_k = ‖f_k − f_{k+1}‖ / ‖f_{k+1}‖; needs at least three levels.
pub fn self_convergence_orders(levels: &[LadderLevel]) -> Vec<f64> {
    let diffs: Vec<f64> = levels
        .windows(2)
        .map(|w| {
            let num: f64 = w[0].field.values.iter().zip(&w[1].field.values).map(|(a, b)| (a - b).powi(2)).sum();
            let den: f64 = w[1].field.values.iter().map(|b| b * b).sum();
            (num / den).sqrt()
        })
        .collect();
    diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect()
}

/// Which diagnostics records also keep the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotPolicy {
    #[default]
    None,
    All,
    /// every k-th record, starting with the first
    Every(usize),
}

impl SnapshotPolicy {
    pub fn wants(&self, record_index: usize) -> bool {
        match *self {
            SnapshotPolicy::None => false,
            SnapshotPolicy::All => true,
            SnapshotPolicy::Every(k) => record_index % k == 0,
        }
    }
}

impl FromStr for SnapshotPolicy {
    type Err = LandauError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SnapshotPolicy::None),
            "all" => Ok(SnapshotPolicy::All),
            _ => s
                .strip_prefix("every:")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k > 0)
                .map(SnapshotPolicy::Every)
                .ok_or_else(|| {
                    LandauError::InvalidParameter(format!("snapshot policy must be none, all or every:k with k >= 1, got {s:?}"))
                }),
        }
    }
}

impl fmt::Display for SnapshotPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnapshotPolicy::None => write!(f, "none"),
            SnapshotPolicy::All => write!(f, "all"),
            SnapshotPolicy::Every(k) => write!(f, "every:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    /// steps between diagnostics records
    pub diag_every: usize,
    pub diagnostics: DiagnosticsSpec,
    pub snapshots: SnapshotPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, DistributionField)>,
    pub final_state: SimulationState,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::moment_oracle;
    use crate::grid::VelocityGrid;
    use proptest::prelude::*;

    fn maxwellian(grid: VelocityGrid) -> DistributionField {
        let c = (2.0 * PI).powf(-1.5);
        DistributionField::from_fn(grid, |v| c * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp())
    }

    fn bi_maxwellian(grid: VelocityGrid) -> DistributionField {
        let c = 0.5 * (2.0 * PI).powf(-1.5);
        DistributionField::from_fn(grid, |v| {
            let p = (v[0] - 1.0).powi(2) + v[1] * v[1] + v[2] * v[2];
            let m = (v[0] + 1.0).powi(2) + v[1] * v[1] + v[2] * v[2];
            c * ((-0.5 * p).exp() + (-0.5 * m).exp())
        })
    }

    fn rel_change(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    fn integrator(n: usize, gamma: f64, config: SchemeConfig) -> Integrator {
        let g = VelocityGrid::new(n, 8.0).unwrap();
        Integrator::new(LandauOperator::new(g, gamma).unwrap(), config).unwrap()
    }

    #[test]
    fn stable_dt_scales_and_matches_the_scan() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let c = moment_oracle(&maxwellian(g));
        let lambda = c.max_eigenvalue();
        // corner node (−V, −V, −V): λ_max = |v|² + 2 = 3V² + 2
        assert!((lambda - 194.0).abs() <= 1e-6 * 194.0, "{lambda}");
        let dt = stable_dt(&c, g.h(), 0.25).unwrap();
        assert!((dt - 0.25 * 0.25 / (6.0 * lambda)).abs() <= 1e-15);
        let mut c2 = c.clone();
        c2.abar.iter_mut().for_each(|a| a.iter_mut().for_each(|x| *x *= 2.0));
        assert!((stable_dt(&c2, g.h(), 0.25).unwrap() - 0.5 * dt).abs() <= 1e-15);
        assert!((stable_dt(&c, 0.5 * g.h(), 0.25).unwrap() - 0.25 * dt).abs() <= 1e-15);
        let zero = CoefficientField::zeros(g, 0.0);
        assert!(matches!(stable_dt(&zero, g.h(), 0.25), Err(LandauError::Degenerate(_))));
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::default().validate().is_ok());
        for cfl in [0.0, -0.1, 1.5, f64::NAN] {
            let c = SchemeConfig { cfl, ..Default::default() };
            assert!(c.validate().is_err());
        }
        let c = SchemeConfig {
            dt_max: Some(0.0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn rk_schemes_reach_their_order_on_a_scalar_problem() {
        let lam = -1.3;
        let solve = |scheme: Scheme, steps: usize| {
            let dt = 1.0 / steps as f64;
            let mut y = vec![1.0];
            for _ in 0..steps {
                let rhs = |x: &[f64]| Ok(vec![lam * x[0]]);
                let k1 = vec![lam * y[0]];
                y = match scheme {
                    Scheme::Rk4 => rk4_step(&y, k1, dt, rhs).unwrap(),
                    Scheme::Rk2 => rk2_step(&y, k1, dt, rhs).unwrap(),
                    Scheme::Rkc => rkc_step(&y, k1, dt, &RkcCoefficients::new(5), rhs).unwrap(),
                };
            }
            (y[0] - lam.exp()).abs()
        };
        for (scheme, order) in [(Scheme::Rk4, 4.0), (Scheme::Rk2, 2.0), (Scheme::Rkc, 2.0)] {
            let ratio = solve(scheme, 20) / solve(scheme, 40);
            let expect = 2f64.powf(order);
            assert!((ratio / expect - 1.0).abs() <= 0.1, "{scheme:?}: {ratio}");
        }
    }

    #[test]
    fn rkc_stage_count_covers_the_stiffness() {
        for dt_rho in [0.5, 10.0, 100.0, 5000.0] {
            let c = RkcCoefficients::covering(dt_rho).unwrap();
            assert!(c.beta >= RKC_MARGIN * dt_rho);
            if c.stages > 2 {
                assert!(RkcCoefficients::new(c.stages - 1).beta < RKC_MARGIN * dt_rho);
            }
        }
        let c = RkcCoefficients::new(10);
        let approx = beta_estimate(10.0);
        assert!((c.beta / approx - 1.0).abs() < 0.05, "{}", c.beta);
    }

    #[test]
    fn maxwellian_is_a_fixed_point() {
        for (gamma, scheme) in [(0.0, Scheme::Rk4), (1.0, Scheme::Rk4), (0.0, Scheme::Rkc)] {
            let it = integrator(32, gamma, SchemeConfig { scheme, ..Default::default() });
            let s0 = SimulationState::initial(maxwellian(*it.operator().grid()));
            let (s1, info) = it.advance(&s0, f64::INFINITY).unwrap();
            assert!(info.dt > 0.0);
            let d = rel_change(&s1.f.values, &s0.f.values);
            assert!(d <= 1e-8, "gamma {gamma} {scheme:?}: {d:e}");
        }
    }

    #[test]
    fn zero_step_is_the_identity() {
        let it = integrator(16, 0.0, SchemeConfig::default());
        let s0 = SimulationState::initial(bi_maxwellian(*it.operator().grid()));
        let s1 = it.step(&s0, 0.0).unwrap();
        assert_eq!(s1.f, s0.f);
        assert_eq!(s1.t, 0.0);
        assert_eq!(s1.step_count, 1);
    }

    #[test]
    fn oversized_steps_are_rejected() {
        let it = integrator(16, 0.0, SchemeConfig::default());
        let s0 = SimulationState::initial(bi_maxwellian(*it.operator().grid()));
        assert!(matches!(it.step(&s0, 1.0), Err(LandauError::UnstableStep { .. })));
    }

    #[test]
    fn rk4_self_convergence_is_fourth_order() {
        // a heavy, narrow pair keeps the temporal error well above roundoff
        // on a short horizon
        let it = integrator(32, 0.0, SchemeConfig { cfl: 0.5, ..Default::default() });
        let f0 = DistributionField::from_fn(*it.operator().grid(), |v| {
            let p = (v[0] - 0.75).powi(2) + v[1] * v[1] + v[2] * v[2];
            let m = (v[0] + 0.75).powi(2) + v[1] * v[1] + v[2] * v[2];
            (-p / 1.2).exp() + (-m / 1.2).exp()
        });
        let s0 = SimulationState::initial(f0.clone());
        let (_, info) = it.advance(&s0, f64::INFINITY).unwrap();
        let t_end = 0.001;
        let base = (t_end / info.dt).ceil() as usize;
        let solve = |steps: usize| {
            let dt = t_end / steps as f64;
            let mut s = s0.clone();
            for _ in 0..steps {
                s = it.step(&s, dt).unwrap();
            }
            s.f.values
        };
        let sols: Vec<Vec<f64>> = [1, 2, 4].iter().map(|&k| solve(base * k)).collect();
        let ratio = rel_change(&sols[0], &sols[1]) / rel_change(&sols[1], &sols[2]);
        assert!((ratio / 16.0 - 1.0).abs() <= 0.2, "{ratio}");
    }

    #[test]
    fn per_step_refresh_is_close_to_every_stage() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let f0 = bi_maxwellian(g);
        let full = integrator(32, 0.0, SchemeConfig::default());
        let semi = integrator(
            32,
            0.0,
            SchemeConfig {
                refresh: Refresh::PerStep,
                ..Default::default()
            },
        );
        let s0 = SimulationState::initial(f0);
        let dt = 1e-4;
        let a = full.step(&s0, dt).unwrap();
        let b = semi.step(&s0, dt).unwrap();
        let change = rel_change(&a.f.values, &s0.f.values);
        let gap = rel_change(&a.f.values, &b.f.values);
        assert!(gap > 0.0 && gap <= 1e-2 * change, "{gap:e} vs {change:e}");
    }

    #[test]
    fn undershoot_aborts_unless_clipping() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let mut f = bi_maxwellian(g);
        let peak = f.values[g.index(16, 16, 16)];
        f.values[g.index(16, 16, 6)] = -1e-3 * peak;
        let strict = integrator(32, 0.0, SchemeConfig::default());
        let s0 = SimulationState::initial(f.clone());
        assert!(matches!(strict.advance(&s0, 1e-5), Err(LandauError::Undershoot { .. })));
        let loose = integrator(32, 0.0, SchemeConfig { clip: true, ..Default::default() });
        let (s1, _) = loose.advance(&s0, 1e-5).unwrap();
        assert_eq!(s1.clipped_steps, 1);
        assert!(s1.f.values.iter().all(|&x| x >= 0.0));
        assert!((s1.f.mass() / s0.f.mass() - 1.0).abs() <= 1e-6);
    }

    fn options(t_end: f64) -> RunOptions {
        RunOptions {
            t_end,
            diag_every: 5,
            diagnostics: DiagnosticsSpec {
                m_max: 2,
                s: 0.0,
                c0_list: vec![0.5],
            },
            snapshots: SnapshotPolicy::All,
        }
    }

    #[test]
    fn run_records_and_determinism() {
        let it = integrator(32, 0.0, SchemeConfig::default());
        let f0 = bi_maxwellian(*it.operator().grid());
        let zero = it.run(f0.clone(), &options(0.0)).unwrap();
        assert_eq!(zero.records.len(), 1);
        assert_eq!(zero.snapshots.len(), 1);
        assert_eq!(zero.snapshots[0].1, f0);
        let a = it.run(f0.clone(), &options(0.002)).unwrap();
        let b = it.run(f0, &options(0.002)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.final_state.t, 0.002);
        let steps = a.final_state.step_count;
        assert_eq!(a.records.len(), 1 + steps.div_ceil(5));
        let m0 = a.records[0].mass;
        for w in a.records.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].entropy <= w[0].entropy + 1e-8);
            assert!((w[1].mass - m0).abs() <= 1e-10 * m0);
        }
    }

    #[test]
    fn run_errors_carry_the_time() {
        let g = VelocityGrid::new(16, 8.0).unwrap();
        let it = integrator(16, 0.0, SchemeConfig::default());
        let wide = DistributionField::from_fn(g, |v| (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / 40.0).exp());
        match it.run(wide, &options(0.1)) {
            Err(LandauError::AtTime { t, source }) => {
                assert_eq!(t, 0.0);
                assert!(matches!(*source, LandauError::Truncation { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn snapshot_policy_round_trips() {
        for s in ["none", "all", "every:3"] {
            assert_eq!(s.parse::<SnapshotPolicy>().unwrap().to_string(), s);
        }
        for bad in ["every:0", "every:", "some"] {
            assert!(bad.parse::<SnapshotPolicy>().is_err());
        }
        let p = SnapshotPolicy::Every(3);
        let kept: Vec<usize> = (0..7).filter(|&i| p.wants(i)).collect();
        assert_eq!(kept, [0, 3, 6]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn rkc_is_stable_on_its_interval(s in 2usize..40, x in 0.0..1.0f64) {
            let c = RkcCoefficients::new(s);
            let z = -x * c.beta;
            let y = rkc_step(&[1.0], vec![z], 1.0, &c, |v: &[f64]| Ok(vec![z * v[0]])).unwrap();
            prop_assert!(y[0].abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn time_is_nondecreasing(cap in 1e-6..1e-3f64) {
            let it = integrator(32, 0.0, SchemeConfig::default());
            let s0 = SimulationState::initial(maxwellian(*it.operator().grid()));
            let (s1, info) = it.advance(&s0, cap).unwrap();
            prop_assert!(s1.t >= s0.t && info.dt <= cap);
        }
    }
}
