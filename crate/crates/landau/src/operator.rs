//! The Landau right-hand side in nondivergence and divergence form.
//!
//! Production stepping goes through [`LandauOperator`], which evaluates the
//! nondivergence form with the transferred c̄ = Σ a_ij∗∂_ij f. For γ = 0 the
//! convolutions reduce to moment polynomials and no padded transform is
//! needed.

use num_traits::ToPrimitive;
use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use crate::coefficients::{sym_index, CoefficientField, Convolver, Moments, SYM};
use crate::combinatorics::{binomial, MultiIndex};
use crate::error::{LandauError, Result};
use crate::grid::{DistributionField, SpectralEngine, VelocityGrid};
use crate::linalg::solve_dense;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Divergence,
    Nondivergence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorOutput {
    pub field: DistributionField,
    pub form: Form,
}

impl OperatorOutput {
    pub fn values(&self) -> &[f64] {
        &self.field.values
    }
}

fn second_orders() -> [MultiIndex; 6] {
    SYM.map(|(i, j)| MultiIndex::unit(i).add(&MultiIndex::unit(j)))
}

fn sym_weight(s: usize) -> f64 {
    let (i, j) = SYM[s];
    if i == j {
        1.0
    } else {
        2.0
    }
}

fn contract(coeffs: &CoefficientField, d2: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    (0..f.len())
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for s in 0..6 {
                acc += sym_weight(s) * coeffs.abar[s][k] * d2[s][k];
            }
            acc - coeffs.cbar[k] * f[k]
        })
        .collect()
}

/// Σ ā_ij ∂_ij f − c̄ f with spectral second derivatives.
pub fn apply_nondivergence(
    f: &DistributionField,
    coeffs: &CoefficientField,
    engine: &SpectralEngine,
) -> Result<OperatorOutput> {
    engine.grid().same_as(&f.grid)?;
    engine.grid().same_as(&coeffs.grid)?;
    let d2 = engine.derivatives(&f.values, &second_orders())?;
    Ok(OperatorOutput {
        field: DistributionField::new(f.grid, contract(coeffs, &d2, &f.values))?,
        form: Form::Nondivergence,
    })
}

/// ∇·[(a∗f)∇f − (a∗∇f) f], convolutions on the padded grid and the outer
/// divergence spectral.
pub fn apply_divergence(
    f: &DistributionField,
    convolver: &Convolver,
    engine: &SpectralEngine,
) -> Result<OperatorOutput> {
    engine.grid().same_as(&f.grid)?;
    let (abar, drift) = convolver.abar_and_drift(f)?;
    let grad = engine.derivatives(&f.values, &[0, 1, 2].map(MultiIndex::unit))?;
    let flux: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            (0..f.values.len())
                .into_par_iter()
                .map(|k| {
                    let mut acc = -drift[i][k] * f.values[k];
                    for (j, g) in grad.iter().enumerate() {
                        acc += abar[sym_index(i, j)][k] * g[k];
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; f.values.len()];
    for (i, fl) in flux.iter().enumerate() {
        let d = engine.derivatives(fl, &[MultiIndex::unit(i)])?;
        for (o, x) in out.iter_mut().zip(&d[0]) {
            *o += x;
        }
    }
    Ok(OperatorOutput {
        field: DistributionField::new(f.grid, out)?,
        form: Form::Divergence,
    })
}

/// ‖Q(M)‖ / ‖c̄M‖ for the standard Maxwellian M, per operator form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumResidual {
    pub n: usize,
    pub gamma: f64,
    pub nondivergence: f64,
    pub divergence: f64,
}

pub fn equilibrium_residual(grid: VelocityGrid, gamma: f64) -> Result<EquilibriumResidual> {
    let c = (2.0 * std::f64::consts::PI).powf(-1.5);
    let m = DistributionField::from_fn(grid, |v| c * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp());
    let op = LandauOperator::new(grid, gamma)?;
    let (q, coeffs) = op.evaluate(&m)?;
    let l2 = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let cm: Vec<f64> = coeffs.cbar.iter().zip(&m.values).map(|(c, x)| c * x).collect();
    let scale = l2(&cm);
    let conv = op.convolver()?;
    let div = apply_divergence(&m, &conv, op.engine())?;
    Ok(EquilibriumResidual {
        n: grid.n(),
        gamma,
        nondivergence: l2(q.values()) / scale,
        divergence: l2(div.values()) / scale,
    })
}

/// ∂^μ of the nondivergence output.
pub fn derivative_of_solution(
    f: &DistributionField,
    coeffs: &CoefficientField,
    mu: &MultiIndex,
    engine: &SpectralEngine,
) -> Result<DistributionField> {
    if mu.order() > engine.alpha_max() {
        return Err(LandauError::DerivativeOrder {
            order: mu.order(),
            max: engine.alpha_max(),
        });
    }
    let q = apply_nondivergence(f, coeffs, engine)?;
    engine.derivative(&q.field, mu)
}

/// Σ_{β≤μ} C(μ,β) ∂^{μ−β}g · ∂^β f, with the derivatives of `g` supplied by
/// the caller (so they can come from exact convolution identities).
pub fn leibniz_product(
    f: &DistributionField,
    g_derivative: impl Fn(&MultiIndex) -> Result<Vec<f64>>,
    mu: &MultiIndex,
    engine: &SpectralEngine,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; f.values.len()];
    for beta in mu.lower_set() {
        let rest = mu.checked_sub(&beta).unwrap_or_default();
        let c = binomial(mu, &beta)?;
        let c = c.to_f64().unwrap_or(f64::INFINITY);
        let dg = g_derivative(&rest)?;
        let df = engine.derivative(f, &beta)?;
        for ((o, a), b) in out.iter_mut().zip(&dg).zip(&df.values) {
            *o += c * a * b;
        }
    }
    Ok(out)
}

/// Smooth cutoff that freezes the outer layer of the box during time
/// stepping, where the truncated coefficients stop being meaningful.
///
/// χ = 1 for |v|_∞ ≤ `inner`·V and χ = 0 for |v|_∞ ≥ `outer`·V, with a
/// cubic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldFreeze {
    pub inner: f64,
    pub outer: f64,
}

impl Default for FarFieldFreeze {
    fn default() -> Self {
        FarFieldFreeze {
            inner: 0.6875,
            outer: 0.875,
        }
    }
}

impl FarFieldFreeze {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.inner && self.inner < self.outer && self.outer <= 1.0) {
            return Err(LandauError::InvalidParameter(format!(
                "freeze band needs 0 < inner < outer <= 1, got inner = {}, outer = {}",
                self.inner, self.outer
            )));
        }
        Ok(())
    }

    pub fn weights(&self, grid: &VelocityGrid) -> Vec<f64> {
        let v = grid.half_width();
        let (a, b) = (self.inner * v, self.outer * v);
        (0..grid.len())
            .map(|k| {
                let x = grid.node(k);
                let r = x[0].abs().max(x[1].abs()).max(x[2].abs());
                let t = ((b - r) / (b - a)).clamp(0.0, 1.0);
                t * t * (3.0 - 2.0 * t)
            })
            .collect()
    }
}

const BASIS: usize = 5;

fn basis(v: [f64; 3]) -> [f64; BASIS] {
    [1.0, v[0], v[1], v[2], v[0] * v[0] + v[1] * v[1] + v[2] * v[2]]
}

/// Nonlinear Landau operator bound to one grid and one γ.
pub struct LandauOperator {
    grid: VelocityGrid,
    gamma: f64,
    engine: SpectralEngine,
    convolver: Option<Convolver>,
    tol_trunc: f64,
    freeze: Option<(FarFieldFreeze, Vec<f64>)>,
}

impl LandauOperator {
    pub fn new(grid: VelocityGrid, gamma: f64) -> Result<Self> {
        crate::coefficients::check_gamma(gamma)?;
        let convolver = if gamma == 0.0 {
            None
        } else {
            Some(Convolver::new(grid, gamma)?)
        };
        Ok(LandauOperator {
            grid,
            gamma,
            engine: SpectralEngine::new(grid),
            convolver,
            tol_trunc: crate::coefficients::DEFAULT_TOL_TRUNC,
            freeze: None,
        })
    }

    pub fn with_tol_trunc(mut self, tol: f64) -> Self {
        self.tol_trunc = tol;
        self.convolver = self.convolver.map(|c| c.with_tol_trunc(tol));
        self
    }

    pub fn with_freeze(mut self, freeze: Option<FarFieldFreeze>) -> Result<Self> {
        self.freeze = match freeze {
            Some(fz) => {
                fz.validate()?;
                Some((fz, fz.weights(&self.grid)))
            }
            None => None,
        };
        Ok(self)
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn engine(&self) -> &SpectralEngine {
        &self.engine
    }

    pub fn freeze(&self) -> Option<FarFieldFreeze> {
        self.freeze.as_ref().map(|(fz, _)| *fz)
    }

    /// χ on the grid, if a freeze band is configured.
    pub fn freeze_weights(&self) -> Option<&[f64]> {
        self.freeze.as_ref().map(|(_, w)| w.as_slice())
    }

    /// A convolver for this grid and γ (built on demand for γ = 0).
    pub fn convolver(&self) -> Result<std::borrow::Cow<'_, Convolver>> {
        match &self.convolver {
            Some(c) => Ok(std::borrow::Cow::Borrowed(c)),
            None => Ok(std::borrow::Cow::Owned(
                Convolver::new(self.grid, self.gamma)?.with_tol_trunc(self.tol_trunc),
            )),
        }
    }

    fn moment_coefficients(&self, f: &DistributionField, d2: &[Vec<f64>]) -> CoefficientField {
        let grid = self.grid;
        let n = grid.n();
        let mo = Moments::of(&grid, &f.values);
        // c̄ = Σ_ij a_ij ∗ ∂_ij f is the quadratic vᵀGv + g·v + g₀ built from
        // the moments of the six second derivatives
        let dm: Vec<Moments> = d2.iter().map(|d| Moments::of(&grid, d)).collect();
        let full = |i: usize, j: usize| &dm[sym_index(i, j)];
        let mut gm = [[0.0; 3]; 3];
        let mut g1 = [0.0; 3];
        let mut g0 = 0.0;
        let trm: f64 = (0..3).map(|i| full(i, i).m).sum();
        for i in 0..3 {
            gm[i][i] += trm;
            g0 += full(i, i).trace();
            for j in 0..3 {
                let m = full(i, j);
                gm[i][j] -= m.m;
                g1[j] -= 2.0 * full(i, i).p[j];
                g1[i] += 2.0 * m.p[j];
                g0 -= m.sigma[i][j];
            }
        }
        let x: Vec<f64> = (0..n).map(|i| grid.coord(i)).collect();
        let tr = mo.trace();
        let mut out = CoefficientField::zeros(grid, 0.0);
        for k in 0..grid.len() {
            let v = [x[k % n], x[(k / n) % n], x[k / (n * n)]];
            let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            let diag = mo.m * r2 - 2.0 * (v[0] * mo.p[0] + v[1] * mo.p[1] + v[2] * mo.p[2]) + tr;
            for (s, &(i, j)) in SYM.iter().enumerate() {
                let off = mo.m * v[i] * v[j] - v[i] * mo.p[j] - v[j] * mo.p[i] + mo.sigma[i][j];
                out.abar[s][k] = if i == j { diag - off } else { -off };
            }
            for j in 0..3 {
                out.bbar[j][k] = -2.0 * (mo.m * v[j] - mo.p[j]);
            }
            let mut c = g0;
            for i in 0..3 {
                c += g1[i] * v[i];
                for j in 0..3 {
                    c += gm[i][j] * v[i] * v[j];
                }
            }
            out.cbar[k] = c;
        }
        out
    }

    fn coefficients_with(&self, f: &DistributionField, d2: &[Vec<f64>]) -> Result<CoefficientField> {
        match &self.convolver {
            None => {
                f.check_boundary_mass(self.tol_trunc)?;
                Ok(self.moment_coefficients(f, d2))
            }
            Some(c) => c.assemble_operator(f),
        }
    }

    /// ā and the transferred c̄ for `f` (b̄ is filled only for γ = 0).
    pub fn coefficients(&self, f: &DistributionField) -> Result<CoefficientField> {
        self.grid.same_as(&f.grid)?;
        let d2 = self.engine.derivatives(&f.values, &second_orders())?;
        self.coefficients_with(f, &d2)
    }

    /// Unfrozen Q(f) together with the coefficients it used.
    pub fn evaluate(&self, f: &DistributionField) -> Result<(OperatorOutput, CoefficientField)> {
        self.grid.same_as(&f.grid)?;
        let d2 = self.engine.derivatives(&f.values, &second_orders())?;
        let coeffs = self.coefficients_with(f, &d2)?;
        let q = contract(&coeffs, &d2, &f.values);
        Ok((
            OperatorOutput {
                field: DistributionField::new(f.grid, q)?,
                form: Form::Nondivergence,
            },
            coeffs,
        ))
    }

    /// Right-hand side used for time stepping: Q(f), or with a freeze band
    /// χQ + f·(c₀ + c·v + c₄|v|²) where the correction restores the mass,
    /// momentum and energy moments of Q.
    pub fn rhs(&self, f: &DistributionField) -> Result<(Vec<f64>, CoefficientField)> {
        let (q, coeffs) = self.evaluate(f)?;
        let mut q = q.field.values;
        if let Some((_, chi)) = &self.freeze {
            self.apply_freeze(&f.values, &mut q, chi)?;
        }
        Ok((q, coeffs))
    }

    /// [`rhs`](Self::rhs) with ā and c̄ held fixed at `coeffs`.
    pub fn rhs_frozen(&self, f: &DistributionField, coeffs: &CoefficientField) -> Result<Vec<f64>> {
        self.grid.same_as(&f.grid)?;
        self.grid.same_as(&coeffs.grid)?;
        let d2 = self.engine.derivatives(&f.values, &second_orders())?;
        let mut q = contract(coeffs, &d2, &f.values);
        if let Some((_, chi)) = &self.freeze {
            self.apply_freeze(&f.values, &mut q, chi)?;
        }
        Ok(q)
    }

    fn apply_freeze(&self, f: &[f64], q: &mut [f64], chi: &[f64]) -> Result<()> {
        let mut gram = [[0.0; BASIS]; BASIS];
        let mut lost = [0.0; BASIS];
        for k in 0..f.len() {
            let phi = basis(self.grid.node(k));
            let cut = (1.0 - chi[k]) * q[k];
            for a in 0..BASIS {
                lost[a] += cut * phi[a];
                for b in a..BASIS {
                    gram[a][b] += f[k] * phi[a] * phi[b];
                }
            }
        }
        for a in 0..BASIS {
            for b in 0..a {
                gram[a][b] = gram[b][a];
            }
        }
        let coef = solve_dense(gram, lost)
            .ok_or_else(|| LandauError::Degenerate("singular moment matrix in the freeze correction".into()))?;
        for k in 0..f.len() {
            let phi = basis(self.grid.node(k));
            let psi: f64 = (0..BASIS).map(|a| coef[a] * phi[a]).sum();
            q[k] = chi[k] * q[k] + f[k] * psi;
        }
        Ok(())
    }
}
