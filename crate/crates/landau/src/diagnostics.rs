//! Conserved functionals, weighted norms, the analytic norm and the fits
//! used to read regularity off a discrete spectrum.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficients::{ellipticity_scan, CoefficientField};
use crate::combinatorics::{shifted_factorial_f64, MultiIndex};
use crate::error::{LandauError, Result};
use crate::grid::{DistributionField, SpectralEngine, SpectralField};
use crate::linalg::least_squares;

/// Nodes below this fraction of max f contribute nothing to H.
pub const ENTROPY_FLOOR: f64 = 1e-30;
pub const GEVREY_NOISE_FLOOR: f64 = 1e-12;
pub const GEVREY_MIN_SHELLS: usize = 8;
/// The analytic norm is declared divergent once the amplified noise floor
/// exceeds this multiple of ‖f‖.
pub const SENTINEL_AMPLIFICATION: f64 = 1e3;
/// ... or once the band beyond the last complete shell carries this
/// fraction of the weighted sum.
pub const SENTINEL_EDGE_FRACTION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
}

/// M = ∫f, E = ½∫f|v|², H = ∫f log f.
pub fn functionals(f: &DistributionField) -> Functionals {
    let grid = f.grid;
    let n = grid.n();
    let sq: Vec<f64> = (0..n).map(|i| grid.coord(i).powi(2)).collect();
    let fmax = f.values.iter().fold(0.0f64, |a, &x| a.max(x));
    let floor = ENTROPY_FLOOR * fmax;
    let (mut m, mut e, mut h) = (0.0, 0.0, 0.0);
    for (row, chunk) in f.values.chunks(n).enumerate() {
        let base = sq[row % n] + sq[row / n];
        for (&x, s) in chunk.iter().zip(&sq) {
            m += x;
            e += x * (base + s);
            if x > floor && x > 0.0 {
                h += x * x.ln();
            }
        }
    }
    let h3 = grid.cell_volume();
    Functionals {
        mass: m * h3,
        energy: 0.5 * e * h3,
        entropy: h * h3,
    }
}

fn weight(v: [f64; 3], s: f64) -> f64 {
    (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).powf(s)
}

/// ‖f‖_{L^p_s} = (∫|f|^p (1+|v|²)^{ps/2})^{1/p} for p ∈ {1, 2}.
pub fn weighted_norm(f: &DistributionField, p: u32, s: f64) -> Result<f64> {
    let grid = f.grid;
    let sum: f64 = match p {
        1 => (0..grid.len()).map(|k| f.values[k].abs() * weight(grid.node(k), 0.5 * s)).sum(),
        2 => (0..grid.len()).map(|k| f.values[k].powi(2) * weight(grid.node(k), s)).sum(),
        _ => {
            return Err(LandauError::InvalidParameter(format!(
                "weighted norm exponent must be 1 or 2, got {p}"
            )))
        }
    };
    Ok((sum * grid.cell_volume()).powf(1.0 / p as f64))
}

/// ‖∂^α f‖²_{L²_s} for every α, in the order given.
fn derivative_norms_sq(f: &DistributionField, alphas: &[MultiIndex], s: f64, engine: &SpectralEngine) -> Result<Vec<f64>> {
    let grid = f.grid;
    let w: Vec<f64> = (0..grid.len()).map(|k| weight(grid.node(k), s)).collect();
    let h3 = grid.cell_volume();
    let ders = engine.derivatives(&f.values, alphas)?;
    Ok(ders
        .iter()
        .map(|d| d.iter().zip(&w).map(|(x, w)| x * x * w).sum::<f64>() * h3)
        .collect())
}

/// ‖f‖_{H^m_s} = (Σ_{|α|≤m} ‖∂^α f‖²_{L²_s})^{1/2}.
pub fn sobolev_norm(f: &DistributionField, m: u32, s: f64, engine: &SpectralEngine) -> Result<f64> {
    Ok(*sobolev_norms(f, m, s, engine)?.last().unwrap_or(&0.0))
}

/// ‖f‖_{H^k_s} for k = 0..=m_max, sharing the derivative work.
pub fn sobolev_norms(f: &DistributionField, m_max: u32, s: f64, engine: &SpectralEngine) -> Result<Vec<f64>> {
    engine.grid().same_as(&f.grid)?;
    let alphas: Vec<MultiIndex> = MultiIndex::up_to_order(m_max).collect();
    let norms = derivative_norms_sq(f, &alphas, s, engine)?;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(m_max as usize + 1);
    let mut it = alphas.iter().zip(&norms).peekable();
    for m in 0..=m_max {
        while let Some((a, v)) = it.peek() {
            if a.order() != m {
                break;
            }
            acc += **v;
            it.next();
        }
        out.push(acc.sqrt());
    }
    Ok(out)
}

/// Edge of the last complete spectral shell: the Nyquist radius π/h.
fn complete_radius(fh: &SpectralField) -> f64 {
    fh.grid.nyquist()
}

/// ‖e^{c₀|ξ|} f̂‖ in the Plancherel normalization, summed in log space.
///
/// Returns `f64::INFINITY` for c₀ > 0 when the result cannot be resolved on
/// this grid: either the band outside the last complete shell carries more
/// than [`SENTINEL_EDGE_FRACTION`] of the weighted sum, or the noise floor
/// 1e−12·max|f̂| amplified by the weight exceeds [`SENTINEL_AMPLIFICATION`]·‖f‖.
pub fn analytic_norm(fh: &SpectralField, c0: f64) -> f64 {
    let grid = fh.grid;
    let log_w = 3.0 * (grid.dxi() / (2.0 * PI)).ln();
    let edge = complete_radius(fh);
    let mut terms = Vec::with_capacity(fh.coeffs.len());
    let mut weights = Vec::with_capacity(fh.coeffs.len());
    let mut is_edge = Vec::with_capacity(fh.coeffs.len());
    for (k, c) in fh.coeffs.iter().enumerate() {
        let r = grid.xi_norm(k);
        weights.push(2.0 * c0 * r);
        let a = c.norm();
        if a > 0.0 {
            terms.push(2.0 * c0 * r + 2.0 * a.ln());
            is_edge.push(r >= edge);
        }
    }
    if terms.is_empty() {
        return 0.0;
    }
    let lse = |xs: &[f64]| {
        let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
    };
    let log_sum = lse(&terms);
    let value = (0.5 * (log_sum + log_w)).exp();
    if c0 <= 0.0 {
        return value;
    }
    let edge_terms: Vec<f64> = terms.iter().zip(&is_edge).filter(|(_, &e)| e).map(|(t, _)| *t).collect();
    if !edge_terms.is_empty() && (lse(&edge_terms) - log_sum).exp() > SENTINEL_EDGE_FRACTION {
        return f64::INFINITY;
    }
    let plain: Vec<f64> = fh.coeffs.iter().filter(|c| c.norm() > 0.0).map(|c| 2.0 * c.norm().ln()).collect();
    let log_l2 = 0.5 * (lse(&plain) + log_w);
    let log_noise = (GEVREY_NOISE_FLOOR * fh.max_abs()).ln() + 0.5 * (lse(&weights) + log_w);
    if log_noise > SENTINEL_AMPLIFICATION.ln() + log_l2 {
        return f64::INFINITY;
    }
    value
}

/// Fit of shell maxima to log S(r) = b − ĉ r − p log r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevreyFit {
    pub c: f64,
    pub p: f64,
    pub b: f64,
    pub r2: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub shells: usize,
}

/// Shell maxima over complete shells [kΔr, (k+1)Δr), k = 1..n/2−1, with the
/// radius of the maximizing node. Stops at the first shell under the noise
/// floor.
pub fn shell_maxima(fh: &SpectralField) -> Vec<(f64, f64)> {
    let grid = fh.grid;
    let dr = grid.dxi();
    let kmax = grid.n() / 2;
    let mut best = vec![(0.0f64, 0.0f64); kmax];
    for (idx, c) in fh.coeffs.iter().enumerate() {
        let r = grid.xi_norm(idx);
        let k = (r / dr + 1e-9).floor() as usize;
        if k >= 1 && k < kmax && c.norm() > best[k].1 {
            best[k] = (r, c.norm());
        }
    }
    let floor = GEVREY_NOISE_FLOOR * fh.max_abs();
    best.into_iter()
        .skip(1)
        .take_while(|&(_, s)| s > floor && s > 0.0)
        .collect()
}

/// Exponential decay rate ĉ of the spectrum. The algebraic term absorbs
/// power-law prefactors, so a purely algebraic tail gives ĉ ≈ 0.
pub fn gevrey_radius(fh: &SpectralField) -> Result<GevreyFit> {
    let shells = shell_maxima(fh);
    if shells.len() < GEVREY_MIN_SHELLS {
        return Err(LandauError::TooFewShells {
            found: shells.len(),
            needed: GEVREY_MIN_SHELLS,
        });
    }
    let rows: Vec<[f64; 3]> = shells.iter().map(|&(r, _)| [1.0, -r, -r.ln()]).collect();
    let y: Vec<f64> = shells.iter().map(|&(_, s)| s.ln()).collect();
    let (c, r2) = least_squares(&rows, &y)
        .ok_or_else(|| LandauError::Degenerate("singular Gevrey fit".into()))?;
    Ok(GevreyFit {
        c: c[1],
        p: c[2],
        b: c[0],
        r2,
        r_min: shells[0].0,
        r_max: shells[shells.len() - 1].0,
        shells: shells.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub m_max: u32,
    pub rho: f64,
    /// D_m = max_{|α|=m} ‖∂^α f‖_{L²}
    pub d: Vec<f64>,
    pub a_hat: f64,
    /// Â computed from orders 0..=k, for each k
    pub a_hat_by_order: Vec<f64>,
    /// max_m log(Â^{m+1} / r_m) / (m+1), the slack of the tightest order
    pub residual: f64,
    /// Â over the upper half of the orders stays within 10% of Â over the
    /// lower half
    pub geometric: bool,
}

/// D_m ≤ Â^{m+1} ρ^{−m} (m−2)! with the least such Â.
pub fn factorial_growth_fit(f: &DistributionField, m_max: u32, rho: f64, engine: &SpectralEngine) -> Result<GrowthFit> {
    if m_max > engine.alpha_max() {
        return Err(LandauError::DerivativeOrder {
            order: m_max,
            max: engine.alpha_max(),
        });
    }
    if !(rho > 0.0) {
        return Err(LandauError::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let alphas: Vec<MultiIndex> = MultiIndex::up_to_order(m_max).collect();
    let norms = derivative_norms_sq(f, &alphas, 0.0, engine)?;
    let mut d = vec![0.0f64; m_max as usize + 1];
    for (a, v) in alphas.iter().zip(&norms) {
        let m = a.order() as usize;
        d[m] = d[m].max(v.sqrt());
    }
    let ratio = |m: usize| d[m] * rho.powi(m as i32) / shifted_factorial_f64(m as i64, 2);
    let mut a_hat_by_order = Vec::with_capacity(d.len());
    let mut a_hat = 0.0f64;
    for m in 0..d.len() {
        a_hat = a_hat.max(ratio(m).powf(1.0 / (m as f64 + 1.0)));
        a_hat_by_order.push(a_hat);
    }
    let residual = (0..d.len())
        .map(|m| (a_hat.ln() * (m as f64 + 1.0) - ratio(m).ln()) / (m as f64 + 1.0))
        .fold(f64::INFINITY, f64::min);
    let half = a_hat_by_order[d.len() / 2];
    Ok(GrowthFit {
        m_max,
        rho,
        d,
        a_hat,
        a_hat_by_order,
        residual,
        geometric: a_hat <= 1.1 * half,
    })
}

/// What to measure at each record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    pub m_max: u32,
    pub s: f64,
    pub c0_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
    pub k_hat: f64,
    /// min f
    pub undershoot: f64,
    pub s: f64,
    /// ‖f‖_{H^m_s} for m = 0..=m_max
    pub sobolev: Vec<f64>,
    pub c0_list: Vec<f64>,
    pub analytic: Vec<f64>,
    pub gevrey: Option<GevreyFit>,
}

impl DiagnosticsRecord {
    pub fn compute(
        t: f64,
        f: &DistributionField,
        coeffs: &CoefficientField,
        spec: &DiagnosticsSpec,
        engine: &SpectralEngine,
    ) -> Result<Self> {
        let fun = functionals(f);
        let fh = engine.forward(f)?;
        Ok(DiagnosticsRecord {
            t,
            mass: fun.mass,
            energy: fun.energy,
            entropy: fun.entropy,
            k_hat: ellipticity_scan(coeffs, coeffs.gamma).0,
            undershoot: f.values.iter().cloned().fold(f64::INFINITY, f64::min),
            s: spec.s,
            sobolev: sobolev_norms(f, spec.m_max, spec.s, engine)?,
            c0_list: spec.c0_list.clone(),
            analytic: spec.c0_list.iter().map(|&c| analytic_norm(&fh, c)).collect(),
            gevrey: gevrey_radius(&fh).ok(),
        })
    }

    /// CSV header matching [`csv_row`](Self::csv_row).
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "M", "E", "H", "K_hat", "undershoot"].iter().map(|s| s.to_string()).collect();
        for m in 0..self.sobolev.len() {
            h.push(format!("H{m}_s{}", self.s));
        }
        for c in &self.c0_list {
            h.push(format!("analytic_c0_{c}"));
        }
        h.push("gevrey_c".into());
        h.push("gevrey_r2".into());
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r: Vec<String> = [self.t, self.mass, self.energy, self.entropy, self.k_hat, self.undershoot]
            .iter()
            .map(|x| format!("{x:e}"))
            .collect();
        r.extend(self.sobolev.iter().map(|x| format!("{x:e}")));
        r.extend(self.analytic.iter().map(|x| format!("{x:e}")));
        match &self.gevrey {
            Some(g) => {
                r.push(format!("{:e}", g.c));
                r.push(format!("{:e}", g.r2));
            }
            None => {
                r.push(String::new());
                r.push(String::new());
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn maxwellian(grid: VelocityGrid) -> DistributionField {
        let c = (2.0 * PI).powf(-1.5);
        DistributionField::from_fn(grid, |v| c * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp())
    }

    /// Γ(k + ½) = (2k)! √π / (4^k k!)
    fn gamma_half(k: u32) -> f64 {
        let mut g = PI.sqrt();
        for j in 0..k {
            g *= j as f64 + 0.5;
        }
        g
    }

    fn radial(f: impl Fn(f64) -> f64, r_max: f64) -> f64 {
        // composite Simpson, 4π r² weight
        let n = 200_000;
        let h = r_max / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let r = i as f64 * h;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * 4.0 * PI * r * r * f(r);
        }
        s * h / 3.0
    }

    #[test]
    fn maxwellian_functionals() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let fun = functionals(&maxwellian(g));
        assert!((fun.mass - 1.0).abs() < 1e-10);
        assert!((fun.energy - 1.5).abs() < 1e-9);
        let h = -1.5 * ((2.0 * PI).ln() + 1.0);
        assert!((fun.entropy - h).abs() < 1e-9, "{}", fun.entropy);
        assert!((h + 4.256815599).abs() < 1e-9);
        let z = functionals(&DistributionField::zeros(g));
        assert_eq!((z.mass, z.energy, z.entropy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn dilation_scales_energy() {
        let g = VelocityGrid::new(32, 10.0).unwrap();
        for lam in [0.8, 1.25] {
            let c = (2.0 * PI).powf(-1.5) / (lam * lam * lam);
            let f = DistributionField::from_fn(g, |v| c * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / (lam * lam)).exp());
            let fun = functionals(&f);
            assert!((fun.mass - 1.0).abs() < 1e-9);
            assert!((fun.energy - 1.5 * lam * lam).abs() < 1e-8);
        }
    }

    #[test]
    fn weighted_norms_of_maxwellian() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let e = SpectralEngine::new(g);
        let m = maxwellian(g);
        assert!((weighted_norm(&m, 1, 2.0).unwrap() - 4.0).abs() <= 1e-10);
        assert!((weighted_norm(&m, 2, 0.0).unwrap() - m.l2_norm()).abs() <= 1e-14);
        assert!((sobolev_norm(&m, 0, 0.0, &e).unwrap() - m.l2_norm()).abs() <= 1e-12 * m.l2_norm());
        assert!(weighted_norm(&m, 3, 0.0).is_err());
        // ‖∂^α M‖² = (2π)⁻³ Π Γ(α_i + ½)
        let h2 = sobolev_norm(&m, 2, 0.0, &e).unwrap().powi(2);
        let exact: f64 = MultiIndex::up_to_order(2)
            .map(|a| a.0.iter().map(|&k| gamma_half(k)).product::<f64>() / (2.0 * PI).powi(3))
            .sum();
        assert!((h2 - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn analytic_norm_examples() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let e = SpectralEngine::new(g);
        let m = maxwellian(g);
        let fh = e.forward(&m).unwrap();
        assert!((analytic_norm(&fh, 0.0) - m.l2_norm()).abs() <= 1e-12 * m.l2_norm());
        let alg = SpectralField::from_fn(g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::new(1.0 / (1.0 + r2), 0.0)
        });
        assert_eq!(analytic_norm(&alg, 1.0), f64::INFINITY);
        assert!(analytic_norm(&alg, 0.0).is_finite());
    }

    #[test]
    fn analytic_norm_of_maxwellian_matches_radial_quadrature() {
        // Riemann-sum bias of the |ξ| cusp scales like Δξ⁴, so the continuum
        // comparison needs Δξ = π/32
        let g = VelocityGrid::new(128, 32.0).unwrap();
        let e = SpectralEngine::new(g);
        let fh = e.forward(&maxwellian(g)).unwrap();
        let exact = (radial(|r| (2.0 * r - r * r).exp(), 20.0) / (2.0 * PI).powi(3)).sqrt();
        let got = analytic_norm(&fh, 1.0);
        assert!((got / exact - 1.0).abs() <= 1e-6, "{got} vs {exact}");
    }

    #[test]
    fn analytic_norm_on_coarse_grid_is_the_lattice_sum() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let e = SpectralEngine::new(g);
        let fh = e.forward(&maxwellian(g)).unwrap();
        let w = (g.dxi() / (2.0 * PI)).powi(3);
        let lattice: f64 = (0..g.len())
            .map(|k| {
                let r = g.xi_norm(k);
                (2.0 * r - r * r).exp()
            })
            .sum::<f64>()
            * w;
        assert!((analytic_norm(&fh, 1.0) / lattice.sqrt() - 1.0).abs() <= 1e-9);
    }

    fn exp_field(g: VelocityGrid, c: f64) -> SpectralField {
        SpectralField::from_fn(g, |x| Complex64::new((-c * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()).exp(), 0.0))
    }

    #[test]
    fn gevrey_fits() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let e = SpectralEngine::new(g);
        let m = gevrey_radius(&e.forward(&maxwellian(g)).unwrap()).unwrap();
        assert!(m.c > 2.0 && m.r2 >= 0.95, "{m:?}");
        let x = gevrey_radius(&exp_field(g, 1.0)).unwrap();
        assert!((x.c - 1.0).abs() <= 0.05 && x.r2 >= 0.999, "{x:?}");
        let alg = SpectralField::from_fn(g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::new(if r2 > 0.0 { 1.0 / r2 } else { 1.0 }, 0.0)
        });
        let a = gevrey_radius(&alg).unwrap();
        assert!(a.c.abs() <= 0.01, "{a:?}");
        let flat = SpectralField::from_fn(g, |x| Complex64::new(if x == [0.0; 3] { 1.0 } else { 0.0 }, 0.0));
        assert!(matches!(gevrey_radius(&flat), Err(LandauError::TooFewShells { .. })));
    }

    fn gaussian_derivative_norm(alpha: &MultiIndex) -> f64 {
        (alpha.0.iter().map(|&k| gamma_half(k)).product::<f64>() / (2.0 * PI).powi(3)).sqrt()
    }

    #[test]
    fn growth_fit_on_maxwellian() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let e = SpectralEngine::new(g);
        let m = maxwellian(g);
        let fit0 = factorial_growth_fit(&m, 0, 1.0, &e).unwrap();
        assert!((fit0.a_hat - fit0.d[0]).abs() <= 1e-15);
        let fit = factorial_growth_fit(&m, 8, 1.0, &e).unwrap();
        for (k, dk) in fit.d.iter().enumerate() {
            let exact = MultiIndex::of_order(k as u32)
                .map(|a| gaussian_derivative_norm(&a))
                .fold(0.0, f64::max);
            assert!((dk - exact).abs() <= 1e-6 * exact, "m={k}: {dk} vs {exact}");
        }
        assert!(fit.a_hat.is_finite());
        assert!(fit.residual.abs() <= 1e-12);
        assert!(factorial_growth_fit(&m, 13, 1.0, &e).is_err());
    }

    #[test]
    fn growth_fit_flags_and_radius_dependence() {
        let g = VelocityGrid::new(64, 16.0).unwrap();
        let e = SpectralEngine::new(g);
        let m = maxwellian(g);
        assert!(factorial_growth_fit(&m, 8, 1.0, &e).unwrap().geometric);
        let f = e.inverse(&exp_field(g, 2.0)).unwrap();
        let a1 = factorial_growth_fit(&f, 8, 1.0, &e).unwrap();
        let a2 = factorial_growth_fit(&f, 8, 2.0, &e).unwrap();
        assert!(a2.a_hat > a1.a_hat);
        assert!(a1.a_hat_by_order.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn record_row_matches_header() {
        let g = VelocityGrid::new(16, 8.0).unwrap();
        let e = SpectralEngine::new(g);
        let m = maxwellian(g);
        let coeffs = crate::coefficients::moment_oracle(&m);
        let spec = DiagnosticsSpec {
            m_max: 2,
            s: 0.0,
            c0_list: vec![0.5, 1.0],
        };
        let r = DiagnosticsRecord::compute(0.0, &m, &coeffs, &spec, &e).unwrap();
        assert_eq!(r.csv_header().len(), r.csv_row().len());
        assert_eq!(r.csv_header()[..6], ["t", "M", "E", "H", "K_hat", "undershoot"]);
        assert!((r.k_hat - 2.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn analytic_norm_is_monotone_and_bounded_below(c in 0.2..2.0f64, a in 0.0..3.0f64, b in 0.0..3.0f64) {
            let g = VelocityGrid::new(16, 8.0).unwrap();
            let fh = exp_field(g, c);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let nlo = analytic_norm(&fh, lo);
            let nhi = analytic_norm(&fh, hi);
            prop_assert!(nhi >= nlo * (1.0 - 1e-12));
            prop_assert!(nlo >= analytic_norm(&fh, 0.0) * (1.0 - 1e-12));
        }

        #[test]
        fn gevrey_recovers_exponential_rate(c in 0.2..2.0f64) {
            let g = VelocityGrid::new(32, 8.0).unwrap();
            let fit = gevrey_radius(&exp_field(g, c)).unwrap();
            prop_assert!((fit.c - c).abs() <= 0.05 * c, "{:?}", fit);
        }

        #[test]
        fn sobolev_norms_are_monotone(s1 in 0.0..2.0f64, ds in 0.0..2.0f64, w in 0.5..2.0f64) {
            let g = VelocityGrid::new(16, 8.0).unwrap();
            let e = SpectralEngine::new(g);
            let f = DistributionField::from_fn(g, |v| (-(v[0] * v[0] + 2.0 * v[1] * v[1] + v[2] * v[2]) / (2.0 * w)).exp());
            let a = sobolev_norms(&f, 3, s1, &e).unwrap();
            let b = sobolev_norms(&f, 3, s1 + ds, &e).unwrap();
            for m in 0..4 {
                prop_assert!(b[m] >= a[m] * (1.0 - 1e-12));
                if m > 0 {
                    prop_assert!(a[m] >= a[m - 1]);
                }
            }
        }

        #[test]
        fn growth_fit_is_homogeneous_at_order_zero(lam in 0.01..100.0f64) {
            let g = VelocityGrid::new(16, 8.0).unwrap();
            let e = SpectralEngine::new(g);
            let m = maxwellian(g);
            let a = factorial_growth_fit(&m, 0, 1.0, &e).unwrap().a_hat;
            let b = factorial_growth_fit(&m.scaled(lam), 0, 1.0, &e).unwrap().a_hat;
            prop_assert!((b - lam * a).abs() <= 1e-12 * lam * a);
            let again = factorial_growth_fit(&m, 0, 1.0, &e).unwrap().a_hat;
            prop_assert_eq!(a, again);
        }
    }
}
