//! Direct numerical checks of the standalone estimates: the dyadic shell
//! sums, the iterated-convolution mollifier and the growth of derivatives of
//! the convolved coefficients.

use std::f64::consts::PI;
use std::io::Write;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::coefficients::{Convolver, SYM};
use crate::combinatorics::{box_counts, shell_count, shifted_factorial_f64, term_parts, MultiIndex, SumVariant};
use crate::error::{LandauError, Result};
use crate::fft::Fft3;
use crate::grid::{DistributionField, SpectralEngine};

pub const SHELL_SUM_BOUND: u32 = 24;
pub const FD_ALLOWANCE: f64 = 0.05;
pub const INVARIANT_TOL: f64 = 1e-10;

impl SumVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SumVariant::Sum1 => "sum1",
            SumVariant::Sum2 => "sum2",
        }
    }
}

const VARIANTS: [SumVariant; 2] = [SumVariant::Sum1, SumVariant::Sum2];

#[derive(Debug, Clone, PartialEq)]
pub struct ShellSumRow {
    pub order: u32,
    pub variant: SumVariant,
    /// "restricted" (max over |μ| = order), "shell", or "shell_bound"
    /// (rounding-error upper bound for orders beyond the exhaustive range)
    pub mode: &'static str,
    pub value: f64,
    /// Reduced fraction for exactly evaluated rows.
    pub exact: Option<String>,
    pub argmax: Option<MultiIndex>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellSumReport {
    pub max_exhaustive: u32,
    pub max_shell: u32,
    pub multi_indices_checked: usize,
    pub rows: Vec<ShellSumRow>,
    /// Largest value seen per variant, over all rows.
    pub max_value: [f64; 2],
    pub exceeded: bool,
    /// Some μ had a restricted sum above its shell sum.
    pub shell_below_restricted: bool,
}

impl ShellSumReport {
    pub fn passed(&self) -> bool {
        !self.exceeded && !self.shell_below_restricted
    }

    pub fn row(&self, order: u32, variant: SumVariant, mode: &str) -> Option<&ShellSumRow> {
        self.rows
            .iter()
            .find(|r| r.order == order && r.variant == variant && r.mode == mode)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["order", "variant", "mode", "value", "exact", "argmax", "bound", "pass"])?;
        for r in &self.rows {
            out.write_record([
                r.order.to_string(),
                r.variant.name().into(),
                r.mode.into(),
                format!("{:.17e}", r.value),
                r.exact.clone().unwrap_or_default(),
                r.argmax.map(|a| format!("{}:{}:{}", a.0[0], a.0[1], a.0[2])).unwrap_or_default(),
                SHELL_SUM_BOUND.to_string(),
                r.pass.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Per-shell numerators over the common denominator D = lcm of the term
/// denominators, so every sum for this order is an integer over D.
fn common_denominator_weights(order: u64, variant: SumVariant) -> (Vec<BigUint>, BigUint) {
    let parts: Vec<(u128, u128)> = (1..order).map(|l| term_parts(variant, order, l)).collect();
    let d = parts
        .iter()
        .fold(BigUint::from(1u32), |acc, &(_, den)| acc.lcm(&BigUint::from(den)));
    let mut w = vec![BigUint::zero()];
    w.extend(parts.iter().map(|&(num, den)| BigUint::from(num) * (&d / BigUint::from(den))));
    (w, d)
}

fn dot(counts: &[u64], w: &[BigUint], order: u64) -> BigUint {
    (1..order as usize)
        .filter(|&l| counts[l] > 0)
        .fold(BigUint::zero(), |acc, l| acc + &w[l] * counts[l])
}

fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    BigRational::new(num.clone().into(), den.clone().into())
        .to_f64()
        .unwrap_or(f64::NAN)
}

/// Floating-point shell sum with rigorous lower and upper bounds.
///
/// Every term c·m/den is positive and carries at most six roundings (the
/// denominator product, the numerator and the quotient), and summing k
/// positive terms adds k − 1 more, so the computed value is within a factor
/// 1 ± γ_{k+6} of the exact one, γ_j = j·u/(1 − j·u).
pub fn shell_sum_bounds(order: u64, variant: SumVariant) -> (f64, f64, bool) {
    let m = order as f64;
    let mut sum = 0.0f64;
    for l in 1..order {
        let lf = l as f64;
        let c = shell_count(l) as f64;
        let den = match variant {
            SumVariant::Sum1 => lf * lf * lf * lf * (m - lf),
            SumVariant::Sum2 => lf * lf * lf * (m - lf) * (m - lf),
        };
        sum += c * m / den;
    }
    let ju = (order + 6) as f64 * f64::EPSILON * 0.5;
    let gamma = ju / (1.0 - ju);
    let lo = sum / (1.0 + gamma);
    let hi = sum / (1.0 - gamma);
    (lo, hi, hi <= SHELL_SUM_BOUND as f64)
}

/// Both sums for every μ with 2 ≤ |μ| ≤ `max_exhaustive` in exact rational
/// arithmetic, then the shell sums up to `max_shell` through rigorous
/// floating-point upper bounds.
pub fn verify_lemma21(max_exhaustive: u32, max_shell: u32) -> Result<ShellSumReport> {
    if max_exhaustive < 2 {
        return Err(LandauError::OrderTooLow(max_exhaustive));
    }
    let mut rows = Vec::new();
    let mut checked = 0usize;
    let mut below = false;
    for m in 2..=max_exhaustive {
        let m64 = m as u64;
        let shell_counts: Vec<u64> = (0..=m64).map(shell_count).collect();
        let weights: Vec<(Vec<BigUint>, BigUint)> = VARIANTS.iter().map(|&v| common_denominator_weights(m64, v)).collect();
        let shell: Vec<BigUint> = weights.iter().map(|(w, _)| dot(&shell_counts, w, m64)).collect();
        let mut best: Vec<(BigUint, MultiIndex)> = vec![(BigUint::zero(), MultiIndex::ZERO); 2];
        for mu in MultiIndex::of_order(m) {
            checked += 1;
            let counts = box_counts(&mu);
            for (vi, (w, _)) in weights.iter().enumerate() {
                let s = dot(&counts, w, m64);
                if s > shell[vi] {
                    below = true;
                }
                if s > best[vi].0 {
                    best[vi] = (s, mu);
                }
            }
        }
        for (vi, &variant) in VARIANTS.iter().enumerate() {
            let d = &weights[vi].1;
            let limit = d * SHELL_SUM_BOUND;
            let (s, mu) = &best[vi];
            rows.push(ShellSumRow {
                order: m,
                variant,
                mode: "restricted",
                value: ratio_f64(s, d),
                exact: Some(BigRational::new(s.clone().into(), d.clone().into()).to_string()),
                argmax: Some(*mu),
                pass: *s <= limit,
            });
            rows.push(ShellSumRow {
                order: m,
                variant,
                mode: "shell",
                value: ratio_f64(&shell[vi], d),
                exact: Some(BigRational::new(shell[vi].clone().into(), d.clone().into()).to_string()),
                argmax: None,
                pass: shell[vi] <= limit,
            });
        }
    }
    for m in (max_exhaustive + 1)..=max_shell {
        for variant in VARIANTS {
            let (_, hi, pass) = shell_sum_bounds(m as u64, variant);
            rows.push(ShellSumRow {
                order: m,
                variant,
                mode: "shell_bound",
                value: hi,
                exact: None,
                argmax: None,
                pass,
            });
        }
    }
    let mut max_value = [0.0f64; 2];
    for r in &rows {
        let i = if r.variant == SumVariant::Sum1 { 0 } else { 1 };
        max_value[i] = max_value[i].max(r.value);
    }
    Ok(ShellSumReport {
        max_exhaustive,
        max_shell: max_shell.max(max_exhaustive),
        multi_indices_checked: checked,
        exceeded: rows.iter().any(|r| !r.pass),
        rows,
        max_value,
        shell_below_restricted: below,
    })
}

/// Seed bump ρ(v) ∝ exp(−1/(1 − 4|v|²)) on |v| < 1/2, unnormalized.
fn seed_profile(r: f64) -> f64 {
    let x = 1.0 - 4.0 * r * r;
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// L = max(∫ρ, ∫|∂ᵢρ|) for the normalized seed, by radial Simpson
/// quadrature. For a radial decreasing ρ, ∫|∂ᵢρ| = 2π∫|ρ'|r²dr = 4π∫ρ r dr.
pub fn seed_constant() -> f64 {
    let n = 20_000;
    let h = 0.5 / n as f64;
    let (mut m0, mut m1) = (0.0, 0.0);
    for i in 0..=n {
        let r = i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let p = seed_profile(r);
        m0 += w * p * r * r;
        m1 += w * p * r;
    }
    // ∫ρ = 1 after normalization by 4π∫ρ̃ r² dr
    (m1 / m0).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mollifier {
    /// number of convolution factors N
    pub order: usize,
    pub h: f64,
    /// nodes per axis; node j sits at j·h − half_width
    pub n: usize,
    pub half_width: f64,
    pub values: Vec<f64>,
    pub seed_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierInvariants {
    pub min: f64,
    pub max: f64,
    pub center: f64,
    /// max |ψ − 1| on |v| ≤ 1
    pub plateau_error: f64,
    /// max |ψ| on |v| ≥ 2
    pub outside_max: f64,
    pub integral: f64,
}

impl MollifierInvariants {
    /// 0 ≤ ψ ≤ 1, ψ = 1 on |v| ≤ 1 and ψ = 0 on |v| ≥ 2 up to `INVARIANT_TOL`,
    /// ψ(0) = 1 ± 1e-6, and ∫ψ between the volumes of the unit ball and the
    /// ball of radius 2.
    pub fn hold(&self) -> bool {
        self.min >= -INVARIANT_TOL
            && self.max <= 1.0 + INVARIANT_TOL
            && (self.center - 1.0).abs() <= 1e-6
            && self.plateau_error <= INVARIANT_TOL
            && self.outside_max <= INVARIANT_TOL
            && self.integral > 4.0 * PI / 3.0
            && self.integral < 32.0 * PI / 3.0
    }
}

impl Mollifier {
    fn coord(&self, i: usize) -> f64 {
        i as f64 * self.h - self.half_width
    }

    fn radius(&self, idx: usize) -> f64 {
        let n = self.n;
        let (a, b, c) = (self.coord(idx % n), self.coord((idx / n) % n), self.coord(idx / (n * n)));
        (a * a + b * b + c * c).sqrt()
    }

    pub fn invariants(&self) -> MollifierInvariants {
        let mut inv = MollifierInvariants {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            center: 0.0,
            plateau_error: 0.0,
            outside_max: 0.0,
            integral: 0.0,
        };
        let c = self.n / 2;
        let mid = c + c * self.n + c * self.n * self.n;
        for (idx, &x) in self.values.iter().enumerate() {
            inv.min = inv.min.min(x);
            inv.max = inv.max.max(x);
            inv.integral += x;
            let r = self.radius(idx);
            if r <= 1.0 {
                inv.plateau_error = inv.plateau_error.max((x - 1.0).abs());
            }
            if r >= 2.0 {
                inv.outside_max = inv.outside_max.max(x.abs());
            }
        }
        inv.center = self.values[mid];
        inv.integral *= self.h.powi(3);
        inv
    }
}

/// ψ_N = χ ∗ ρ_{1/N} ∗ ⋯ ∗ ρ_{1/N} (N factors) with χ the indicator of
/// |v| ≤ 3/2 and ρ_r(v) = r⁻³ρ(v/r), as a discrete convolution at spacing
/// `h`. The sampled ρ_{1/N} is normalized to unit discrete mass, so the
/// plateau and support statements hold exactly on the grid.
pub fn build_mollifier(order: usize, h: f64) -> Result<Mollifier> {
    if order < 2 {
        return Err(LandauError::InvalidParameter(format!("mollifier order must be at least 2, got {order}")));
    }
    let limit = 1.0 / (8.0 * order as f64);
    if !(h > 0.0 && h <= limit * (1.0 + 1e-12)) {
        return Err(LandauError::CoarseResolution { h, limit });
    }
    // support of ψ_N is |v| ≤ 2; a quarter unit of zeros keeps the circular
    // convolution from wrapping
    let cells = (2.25 / h).ceil() as usize;
    let half_width = cells as f64 * h;
    let n = 2 * cells;
    let coord = |i: usize| i as f64 * h - half_width;
    let fft = Fft3::new(n);
    let r_scale = order as f64;
    let mut chi = vec![Complex64::new(0.0, 0.0); n * n * n];
    let mut rho = vec![Complex64::new(0.0, 0.0); n * n * n];
    // ρ is centred at the origin node index `cells`; shift it to index 0
    let mut rho_mass = 0.0;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let v = [coord(i), coord(j), coord(k)];
                let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                let idx = i + n * (j + n * k);
                if r <= 1.5 {
                    chi[idx].re = 1.0;
                }
                let p = seed_profile(r * r_scale);
                if p > 0.0 {
                    let s = |a: usize| (a + n - cells) % n;
                    rho[s(i) + n * (s(j) + n * s(k))].re = p;
                    rho_mass += p;
                }
            }
        }
    }
    rho.iter_mut().for_each(|x| x.re /= rho_mass);
    fft.forward(&mut chi);
    fft.forward(&mut rho);
    let norm = 1.0 / (n * n * n) as f64;
    for (c, r) in chi.iter_mut().zip(&rho) {
        *c *= r.powu(order as u32) * norm;
    }
    drop(rho);
    fft.inverse(&mut chi);
    Ok(Mollifier {
        order,
        h,
        n,
        half_width,
        values: chi.into_iter().map(|c| c.re).collect(),
        seed_l: seed_constant(),
    })
}

/// Central difference of order k ∈ {0, 1, 2, 3} along `axis`, periodic.
fn difference(values: &[f64], n: usize, h: f64, axis: usize, k: u32) -> Vec<f64> {
    let stencil: &[(isize, f64)] = match k {
        0 => return values.to_vec(),
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        _ => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    };
    let stride = n.pow(axis as u32);
    let scale = h.powi(k as i32).recip();
    let ni = n as isize;
    (0..values.len())
        .map(|idx| {
            let pos = ((idx / stride) % n) as isize;
            let base = idx - pos as usize * stride;
            stencil
                .iter()
                .map(|&(o, w)| w * values[base + ((pos + o).rem_euclid(ni) as usize) * stride])
                .sum::<f64>()
                * scale
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifierOrderRow {
    pub mollifier_order: usize,
    pub derivative_order: u32,
    pub worst: MultiIndex,
    pub sup: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifierReport {
    pub seed_l: f64,
    pub rows: Vec<MollifierOrderRow>,
}

impl MollifierReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["N", "order", "worst_lambda", "sup", "bound", "ratio", "pass"])?;
        for r in &self.rows {
            out.write_record([
                r.mollifier_order.to_string(),
                r.derivative_order.to_string(),
                format!("{}:{}:{}", r.worst.0[0], r.worst.0[1], r.worst.0[2]),
                format!("{:e}", r.sup),
                format!("{:e}", r.bound),
                format!("{:e}", r.ratio),
                r.pass.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// sup|∂^λψ_N| against (LN)^{|λ|}(1 + ε_fd) for |λ| ≤ min(λ_max, N, 3),
/// with finite differences.
pub fn verify_mollifier_bounds(psi: &Mollifier, lambda_max: u32) -> MollifierReport {
    let top = lambda_max.min(psi.order as u32).min(3);
    let mut sups: Vec<(MultiIndex, f64)> = Vec::new();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for a in 0..=top {
        let da = difference(&psi.values, psi.n, psi.h, 0, a);
        for b in 0..=(top - a) {
            let db = difference(&da, psi.n, psi.h, 1, b);
            for c in 0..=(top - a - b) {
                let dc = difference(&db, psi.n, psi.h, 2, c);
                sups.push((MultiIndex::new(a, b, c), sup(&dc)));
            }
        }
    }
    let ln = psi.seed_l * psi.order as f64;
    let rows = (0..=top)
        .map(|k| {
            let (worst, s) = sups
                .iter()
                .filter(|(l, _)| l.order() == k)
                .fold((MultiIndex::ZERO, f64::NEG_INFINITY), |best, &(l, s)| if s > best.1 { (l, s) } else { best });
            let bound = ln.powi(k as i32);
            MollifierOrderRow {
                mollifier_order: psi.order,
                derivative_order: k,
                worst,
                sup: s,
                bound,
                ratio: s / bound,
                pass: s <= bound * (1.0 + FD_ALLOWANCE),
            }
        })
        .collect();
    MollifierReport { seed_l: psi.seed_l, rows }
}

/// [G(f)]_ω = ‖∂^ω f‖_{L²} + B^{|ω|}(|ω|−3)!.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GBracket {
    pub omega: MultiIndex,
    pub norm: f64,
    pub b: f64,
    pub value: f64,
}

impl GBracket {
    pub fn from_norm(omega: MultiIndex, norm: f64, b: f64) -> Self {
        let k = omega.order();
        GBracket {
            omega,
            norm,
            b,
            value: norm + b.powi(k as i32) * shifted_factorial_f64(k as i64, 3),
        }
    }

    pub fn factorial_term(&self) -> f64 {
        self.value - self.norm
    }
}

pub fn g_bracket(f: &DistributionField, omega: &MultiIndex, b: f64, engine: &SpectralEngine) -> Result<GBracket> {
    let d = engine.derivative(f, omega)?;
    Ok(GBracket::from_norm(*omega, d.l2_norm(), b))
}

/// max over ω ≤ β with |ω| = |β| − drop of [G(f)]_ω.
fn bracket_below(f: &DistributionField, beta: &MultiIndex, drop: u32, b: f64, engine: &SpectralEngine) -> Result<GBracket> {
    let target = beta.order().saturating_sub(drop);
    let mut best: Option<GBracket> = None;
    for omega in beta.lower_set().filter(|w| w.order() == target) {
        let g = g_bracket(f, &omega, b, engine)?;
        if best.is_none_or(|x| g.value > x.value) {
            best = Some(g);
        }
    }
    best.ok_or_else(|| LandauError::InvalidParameter(format!("no sub-index of order {target} below {beta:?}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub beta: MultiIndex,
    /// sup_v max_ij |∂^β ā_ij(v)| / (1+|v|²)^{γ/2}
    pub r_abar: f64,
    pub g_abar: GBracket,
    pub c_abar: f64,
    /// sup_v |∂^β c̄(v)| / (1+|v|²)^{γ/2}
    pub r_cbar: f64,
    pub g_cbar: GBracket,
    pub c_cbar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub gamma: f64,
    pub b: f64,
    pub rows: Vec<ProbeRow>,
}

impl ProbeReport {
    /// Fitted constant per derivative order: max over |β| = k of Ĉ for ā.
    pub fn abar_order_constants(&self) -> Vec<(u32, f64)> {
        let mut out: Vec<(u32, f64)> = Vec::new();
        for r in &self.rows {
            let k = r.beta.order();
            match out.iter_mut().find(|(o, _)| *o == k) {
                Some(entry) => entry.1 = entry.1.max(r.c_abar),
                None => out.push((k, r.c_abar)),
            }
        }
        out
    }

    /// Ratio of the largest to the smallest per-order constant over
    /// `lo ≤ k ≤ hi`.
    pub fn abar_spread(&self, lo: u32, hi: u32) -> f64 {
        let cs: Vec<f64> = self
            .abar_order_constants()
            .into_iter()
            .filter(|(k, _)| (lo..=hi).contains(k))
            .map(|(_, c)| c)
            .collect();
        let max = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = cs.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Largest R for ā among rows of order `k`.
    pub fn max_r_abar(&self, k: u32) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.beta.order() == k)
            .map(|r| r.r_abar)
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["beta", "gamma", "B", "R_abar", "G_abar", "C_abar", "R_cbar", "G_cbar", "C_cbar"])?;
        for r in &self.rows {
            out.write_record([
                format!("{}:{}:{}", r.beta.0[0], r.beta.0[1], r.beta.0[2]),
                self.gamma.to_string(),
                self.b.to_string(),
                format!("{:e}", r.r_abar),
                format!("{:e}", r.g_abar.value),
                format!("{:e}", r.c_abar),
                format!("{:e}", r.r_cbar),
                format!("{:e}", r.g_cbar.value),
                format!("{:e}", r.c_cbar),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Ĉ(β) = R(β)/[G(f)]_{β−2} for ā and R(β)/[G(f)]_β for c̄, for every β with
/// 2 ≤ |β| ≤ `beta_max`.
pub fn coefficient_derivative_probe(f: &DistributionField, gamma: f64, beta_max: u32, b: f64) -> Result<ProbeReport> {
    if !(2..=6).contains(&beta_max) {
        return Err(LandauError::InvalidParameter(format!("beta_max must lie in 2..=6, got {beta_max}")));
    }
    let grid = f.grid;
    let conv = Convolver::new(grid, gamma)?;
    let engine = SpectralEngine::new(grid);
    let weight: Vec<f64> = (0..grid.len())
        .map(|k| {
            let v = grid.node(k);
            (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).powf(0.5 * gamma).recip()
        })
        .collect();
    let weighted_sup = |x: &[f64]| x.iter().zip(&weight).fold(0.0f64, |m, (x, w)| m.max((x * w).abs()));
    let mut rows = Vec::new();
    for k in 2..=beta_max {
        for beta in MultiIndex::of_order(k) {
            let da = conv.abar_derivative(f, &beta)?;
            let r_abar = (0..SYM.len()).map(|s| weighted_sup(&da[s])).fold(0.0, f64::max);
            let r_cbar = weighted_sup(&conv.cbar_derivative(f, &beta)?);
            let g_abar = bracket_below(f, &beta, 2, b, &engine)?;
            let g_cbar = g_bracket(f, &beta, b, &engine)?;
            rows.push(ProbeRow {
                beta,
                r_abar,
                c_abar: r_abar / g_abar.value,
                g_abar,
                r_cbar,
                c_cbar: r_cbar / g_cbar.value,
                g_cbar,
            });
        }
    }
    Ok(ProbeReport { gamma, b, rows })
}
