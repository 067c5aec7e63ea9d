//! Uniform velocity grid, continuous-normalized Fourier transforms and
//! spectral differentiation.
//!
//! Nodes are `v_j = j·h − V` for `j = 0..n`, so `v = 0` is a node and the
//! box is `[−V, V)³`. Frequencies follow the usual DFT ordering with spacing
//! `π/V`. The forward transform approximates `f̂(ξ) = ∫ f(v) e^{−iξ·v} dv`,
//! which makes Plancherel read `‖f‖² = (2π)⁻³ ‖f̂‖²`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::combinatorics::MultiIndex;
use crate::error::{LandauError, Result};
use crate::fft::Fft3;

pub const DEFAULT_ALPHA_MAX: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    n: usize,
    half_width: f64,
}

impl VelocityGrid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(LandauError::BadGridSize(n));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(LandauError::BadHalfWidth(half_width));
        }
        Ok(VelocityGrid { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Quadrature weight h³.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    /// Frequency spacing π/V.
    pub fn dxi(&self) -> f64 {
        PI / self.half_width
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.h() - self.half_width
    }

    pub fn index(&self, i0: usize, i1: usize, i2: usize) -> usize {
        i0 + self.n * (i1 + self.n * i2)
    }

    pub fn split(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    pub fn node(&self, idx: usize) -> [f64; 3] {
        let [i0, i1, i2] = self.split(idx);
        [self.coord(i0), self.coord(i1), self.coord(i2)]
    }

    /// Signed frequency index of DFT slot `k`.
    pub fn freq_index(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        self.dxi() * self.freq_index(k) as f64
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.n / 2
    }

    pub fn xi(&self, idx: usize) -> [f64; 3] {
        let [k0, k1, k2] = self.split(idx);
        [self.wavenumber(k0), self.wavenumber(k1), self.wavenumber(k2)]
    }

    pub fn xi_norm(&self, idx: usize) -> f64 {
        let x = self.xi(idx);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Nyquist frequency π/h.
    pub fn nyquist(&self) -> f64 {
        PI / self.h()
    }

    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.node(i))).collect()
    }

    /// Nodes with |v| ≤ V/2, where truncation effects are negligible.
    pub fn inner_mask(&self) -> Vec<bool> {
        let r2 = (0.5 * self.half_width).powi(2);
        (0..self.len())
            .map(|i| {
                let v = self.node(i);
                v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= r2
            })
            .collect()
    }

    pub fn same_as(&self, other: &VelocityGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LandauError::GridMismatch {
                field_n: other.n,
                field_v: other.half_width,
                n: self.n,
                v: self.half_width,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    pub grid: VelocityGrid,
    pub values: Vec<f64>,
}

impl DistributionField {
    pub fn new(grid: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LandauError::FieldLength {
                len: values.len(),
                expected: grid.len(),
            });
        }
        Ok(DistributionField { grid, values })
    }

    pub fn zeros(grid: VelocityGrid) -> Self {
        DistributionField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: VelocityGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        DistributionField {
            grid,
            values: grid.sample(f),
        }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|x| x * x).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Fraction of the mass carried by nodes with |v| > V/2.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let n = self.grid.n;
        let sq: Vec<f64> = (0..n).map(|i| self.grid.coord(i).powi(2)).collect();
        let r2 = (0.5 * self.grid.half_width).powi(2);
        let mut outer = 0.0;
        let mut total = 0.0;
        for (row, chunk) in self.values.chunks(n).enumerate() {
            let base = sq[row % n] + sq[row / n];
            for (x, s) in chunk.iter().zip(&sq) {
                let a = x.abs();
                total += a;
                if base + s > r2 {
                    outer += a;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn check_boundary_mass(&self, tol: f64) -> Result<()> {
        let fraction = self.boundary_mass_fraction();
        if fraction > tol {
            Err(LandauError::Truncation { fraction, tol })
        } else {
            Ok(())
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        DistributionField {
            grid: self.grid,
            values: self.values.iter().map(|x| a * x).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: VelocityGrid,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_fn(grid: VelocityGrid, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        SpectralField {
            grid,
            coeffs: (0..grid.len()).map(|i| f(grid.xi(i))).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// (2π)⁻³ Σ |f̂|² Δξ³, the squared L² norm via Plancherel.
    pub fn l2_norm_sq(&self) -> f64 {
        let w = (self.grid.dxi() / (2.0 * PI)).powi(3);
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * w
    }
}

/// One axis of the multiplier (iξ)^a, with the Nyquist mode removed for odd a.
pub fn axis_multiplier(grid: &VelocityGrid, k: usize, a: u32) -> Complex64 {
    if a == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if a % 2 == 1 && grid.is_nyquist(k) {
        return Complex64::default();
    }
    Complex64::new(0.0, grid.wavenumber(k)).powu(a)
}

/// Transform and differentiation engine bound to one grid.
///
/// Plans are shared; every call allocates its own workspace, so one engine
/// can serve concurrent callers.
pub struct SpectralEngine {
    grid: VelocityGrid,
    fft: Fft3,
    alpha_max: u32,
}

impl SpectralEngine {
    pub fn new(grid: VelocityGrid) -> Self {
        Self::with_alpha_max(grid, DEFAULT_ALPHA_MAX)
    }

    pub fn with_alpha_max(grid: VelocityGrid, alpha_max: u32) -> Self {
        SpectralEngine {
            grid,
            fft: Fft3::new(grid.n()),
            alpha_max,
        }
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn alpha_max(&self) -> u32 {
        self.alpha_max
    }

    fn parity(&self, idx: usize) -> f64 {
        let [a, b, c] = self.grid.split(idx);
        if (a + b + c) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Raw unnormalized DFT of a real array.
    pub fn dft(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.forward(&mut data);
        data
    }

    /// Normalized inverse DFT.
    pub fn idft(&self, mut data: Vec<Complex64>) -> Vec<Complex64> {
        self.fft.inverse(&mut data);
        let s = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|x| *x *= s);
        data
    }

    pub fn forward(&self, f: &DistributionField) -> Result<SpectralField> {
        self.grid.same_as(&f.grid)?;
        let mut data = self.dft(&f.values);
        let h3 = self.grid.cell_volume();
        for (i, x) in data.iter_mut().enumerate() {
            *x *= h3 * self.parity(i);
        }
        Ok(SpectralField {
            grid: self.grid,
            coeffs: data,
        })
    }

    /// Complex inverse of [`forward`](Self::forward).
    pub fn inverse_complex(&self, fh: &SpectralField) -> Result<Vec<Complex64>> {
        self.grid.same_as(&fh.grid)?;
        let h3 = self.grid.cell_volume();
        let data: Vec<Complex64> = fh
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &x)| x * (self.parity(i) / h3))
            .collect();
        Ok(self.idft(data))
    }

    /// Real part of the inverse transform.
    pub fn inverse(&self, fh: &SpectralField) -> Result<DistributionField> {
        let data = self.inverse_complex(fh)?;
        DistributionField::new(self.grid, data.iter().map(|c| c.re).collect())
    }

    pub fn multiplier(&self, alpha: &MultiIndex) -> Vec<Complex64> {
        let n = self.grid.n();
        let axes: Vec<Vec<Complex64>> = (0..3)
            .map(|d| (0..n).map(|k| axis_multiplier(&self.grid, k, alpha.0[d])).collect())
            .collect();
        (0..self.grid.len())
            .map(|i| {
                let [a, b, c] = self.grid.split(i);
                axes[0][a] * axes[1][b] * axes[2][c]
            })
            .collect()
    }

    fn check_order(&self, alpha: &MultiIndex) -> Result<()> {
        if alpha.order() > self.alpha_max {
            return Err(LandauError::DerivativeOrder {
                order: alpha.order(),
                max: self.alpha_max,
            });
        }
        Ok(())
    }

    /// Complex-valued ∂^α f, exposing the imaginary residue for checks.
    pub fn derivative_complex(&self, f: &DistributionField, alpha: &MultiIndex) -> Result<Vec<Complex64>> {
        self.grid.same_as(&f.grid)?;
        self.check_order(alpha)?;
        let mut data = self.dft(&f.values);
        for (x, m) in data.iter_mut().zip(self.multiplier(alpha)) {
            *x *= m;
        }
        Ok(self.idft(data))
    }

    pub fn derivative(&self, f: &DistributionField, alpha: &MultiIndex) -> Result<DistributionField> {
        if *alpha == MultiIndex::ZERO {
            self.grid.same_as(&f.grid)?;
            return Ok(f.clone());
        }
        let mut out = self.derivatives(&f.values, &[*alpha])?;
        DistributionField::new(self.grid, out.pop().unwrap_or_default())
    }

    /// Several real derivatives of one field, two per inverse transform.
    pub fn derivatives(&self, values: &[f64], alphas: &[MultiIndex]) -> Result<Vec<Vec<f64>>> {
        for a in alphas {
            self.check_order(a)?;
        }
        let fh = self.dft(values);
        Ok(self.apply_derivatives(&fh, alphas))
    }

    fn axis_tables(&self, alpha: &MultiIndex) -> [Vec<Complex64>; 3] {
        let n = self.grid.n();
        std::array::from_fn(|d| (0..n).map(|k| axis_multiplier(&self.grid, k, alpha.0[d])).collect())
    }

    /// Real inverse transforms of `fh · (iξ)^α` for each α, packed pairwise.
    pub fn apply_derivatives(&self, fh: &[Complex64], alphas: &[MultiIndex]) -> Vec<Vec<f64>> {
        let n = self.grid.n();
        let i = Complex64::new(0.0, 1.0);
        let zero = MultiIndex::ZERO;
        let norm = 1.0 / self.grid.len() as f64;
        let mut out = Vec::with_capacity(alphas.len());
        for pair in alphas.chunks(2) {
            let ta = self.axis_tables(&pair[0]);
            let tb = self.axis_tables(pair.get(1).unwrap_or(&zero));
            let two = pair.len() == 2;
            let mut data = vec![Complex64::default(); fh.len()];
            for (row, (dst, src)) in data.chunks_mut(n).zip(fh.chunks(n)).enumerate() {
                let (b, c) = (row % n, row / n);
                let wa = ta[1][b] * ta[2][c] * norm;
                if two {
                    let wb = i * tb[1][b] * tb[2][c] * norm;
                    for a in 0..n {
                        dst[a] = src[a] * (ta[0][a] * wa + tb[0][a] * wb);
                    }
                } else {
                    for a in 0..n {
                        dst[a] = src[a] * (ta[0][a] * wa);
                    }
                }
            }
            self.fft.inverse(&mut data);
            out.push(data.iter().map(|c| c.re).collect());
            if two {
                out.push(data.iter().map(|c| c.im).collect());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn maxwellian(grid: VelocityGrid) -> DistributionField {
        let c = (2.0 * PI).powf(-1.5);
        DistributionField::from_fn(grid, |v| c * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp())
    }

    #[test]
    fn grid_geometry() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.coord(16), 0.0);
        assert_eq!(g.coord(0), -8.0);
        assert_eq!(g.wavenumber(16), -PI / 0.5);
        assert_eq!(g.freq_index(31), -1);
        assert!(VelocityGrid::new(24, 8.0).is_err());
        assert!(VelocityGrid::new(32, -1.0).is_err());
    }

    #[test]
    fn zero_transforms_to_zero() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let e = SpectralEngine::new(g);
        let fh = e.forward(&DistributionField::zeros(g)).unwrap();
        assert!(fh.coeffs.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn maxwellian_transform_is_gaussian() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let e = SpectralEngine::new(g);
        let fh = e.forward(&maxwellian(g)).unwrap();
        let mut worst: f64 = 0.0;
        for (i, c) in fh.coeffs.iter().enumerate() {
            let k = g.xi_norm(i);
            if k <= 8.0 {
                let exact = (-0.5 * k * k).exp();
                worst = worst.max((c - Complex64::new(exact, 0.0)).norm());
            }
        }
        // relative to max |f̂| = 1
        assert!(worst <= 1e-8, "worst = {worst:e}");
    }

    #[test]
    fn maxwellian_first_derivative() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let e = SpectralEngine::new(g);
        let f = maxwellian(g);
        let d = e.derivative(&f, &MultiIndex::unit(0)).unwrap();
        let exact: Vec<f64> = (0..g.len()).map(|i| -g.node(i)[0] * f.values[i]).collect();
        let err: f64 = d.values.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nrm: f64 = exact.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err / nrm <= 1e-8, "rel = {:e}", err / nrm);
    }

    #[test]
    fn windowed_sine_second_derivative() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let e = SpectralEngine::new(g);
        let k = 1.0;
        let w = |v: [f64; 3]| (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / 3.0).exp();
        let f = DistributionField::from_fn(g, |v| (k * v[0]).sin() * w(v));
        let d = e.derivative(&f, &MultiIndex::new(2, 0, 0)).unwrap();
        // exact second derivative of sin(kx)·exp(−|v|²/3) along v₁
        let exact = g.sample(|v| {
            let x = v[0];
            let s = (k * x).sin();
            let c = (k * x).cos();
            let a = -2.0 * x / 3.0;
            let b = -2.0 / 3.0;
            (-k * k * s + 2.0 * k * c * a + s * (a * a + b)) * w(v)
        });
        let inner = g.inner_mask();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..g.len() {
            if inner[i] {
                num += (d.values[i] - exact[i]).powi(2);
                den += exact[i].powi(2);
            }
        }
        assert!((num / den).sqrt() <= 1e-6, "rel = {:e}", (num / den).sqrt());
    }

    #[test]
    fn identity_derivative_and_order_limit() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let e = SpectralEngine::new(g);
        let f = maxwellian(g);
        assert_eq!(e.derivative(&f, &MultiIndex::ZERO).unwrap(), f);
        assert!(e.derivative(&f, &MultiIndex::new(13, 0, 0)).is_err());
    }

    fn smooth_random(g: VelocityGrid, seed: [f64; 6]) -> DistributionField {
        DistributionField::from_fn(g, |v| {
            let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            let phase = seed[0] * v[0] + seed[1] * v[1] + seed[2] * v[2];
            (seed[3] + seed[4] * phase.cos() + seed[5] * v[1]) * (-0.4 * r2).exp()
        })
    }

    // trigonometric polynomial below the Nyquist mode
    fn band_limited(g: VelocityGrid, seed: [f64; 6]) -> DistributionField {
        let dk = g.dxi();
        let modes = [[1.0, 0.0, 2.0], [3.0, -2.0, 1.0], [0.0, 5.0, -4.0]];
        DistributionField::from_fn(g, |v| {
            modes
                .iter()
                .enumerate()
                .map(|(m, k)| {
                    let ph = dk * (k[0] * v[0] + k[1] * v[1] + k[2] * v[2]);
                    seed[2 * m] * ph.cos() + seed[2 * m + 1] * ph.sin()
                })
                .sum()
        })
    }

    fn seed() -> impl Strategy<Value = [f64; 6]> {
        prop::array::uniform6(-1.0..1.0f64)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip_and_plancherel(s in seed()) {
            let g = VelocityGrid::new(16, 6.0).unwrap();
            let e = SpectralEngine::new(g);
            let f = smooth_random(g, s);
            let fh = e.forward(&f).unwrap();
            let back = e.inverse(&fh).unwrap();
            let nrm = f.l2_norm().max(1e-300);
            let diff = DistributionField::new(g, back.values.iter().zip(&f.values).map(|(a, b)| a - b).collect()).unwrap();
            prop_assert!(diff.l2_norm() / nrm <= 1e-12);
            let l2 = f.l2_norm().powi(2);
            prop_assert!((fh.l2_norm_sq() - l2).abs() <= 1e-12 * l2.max(1e-300));
        }

        #[test]
        fn derivatives_commute(s in seed(), a in (0u32..3, 0u32..2, 0u32..2), b in (0u32..2, 0u32..2, 0u32..2)) {
            let g = VelocityGrid::new(16, 6.0).unwrap();
            let e = SpectralEngine::new(g);
            let a = MultiIndex::new(a.0, a.1, a.2);
            let b = MultiIndex::new(b.0, b.1, b.2);
            prop_assume!(a.order() + b.order() <= 4);
            let f = band_limited(g, s);
            let ab = e.derivative(&e.derivative(&f, &a).unwrap(), &b).unwrap();
            let direct = e.derivative(&f, &a.add(&b)).unwrap();
            let scale = direct.l2_norm().max(f.l2_norm());
            let err = ab.values.iter().zip(&direct.values).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() * g.cell_volume().sqrt();
            prop_assert!(err <= 1e-10 * scale);
        }

        #[test]
        fn real_fields_stay_real(s in seed(), a in (0u32..4, 0u32..4, 0u32..4)) {
            let g = VelocityGrid::new(16, 6.0).unwrap();
            let e = SpectralEngine::new(g);
            let f = smooth_random(g, s);
            let d = e.derivative_complex(&f, &MultiIndex::new(a.0, a.1, a.2)).unwrap();
            let im = d.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
            let nrm = f.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(im <= 1e-12 * nrm);
        }

        #[test]
        fn packed_matches_single(s in seed()) {
            let g = VelocityGrid::new(8, 4.0).unwrap();
            let e = SpectralEngine::new(g);
            let f = smooth_random(g, s);
            let alphas = [MultiIndex::new(1, 0, 0), MultiIndex::new(0, 2, 0), MultiIndex::new(1, 1, 1)];
            let packed = e.derivatives(&f.values, &alphas).unwrap();
            for (a, p) in alphas.iter().zip(&packed) {
                let d = e.derivative_complex(&f, a).unwrap();
                for (x, y) in p.iter().zip(&d) {
                    prop_assert!((x - y.re).abs() <= 1e-13);
                }
            }
        }
    }
}
