//! Collision kernels and the nonlocal coefficients ā = a∗f, b̄ = b∗f, c̄ = c∗f.
//!
//! Convolutions are linear (not circular): kernels are sampled on the
//! doubled difference grid, `f` is zero-padded to `(2n)³`, and the product is
//! taken in frequency space before the `n³` block is read back.

use num_complex::Complex64;

use crate::combinatorics::MultiIndex;
use crate::error::{LandauError, Result};
use crate::fft::Fft3;
use crate::grid::{DistributionField, VelocityGrid};

/// Storage order of the six independent entries of a symmetric 3×3 matrix.
pub const SYM: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

pub const DEFAULT_TOL_TRUNC: f64 = 2e-2;

pub fn sym_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// a_ij(v) = (δ_ij − v_i v_j/|v|²)|v|^{γ+2}, with a(0) = 0.
pub fn kernel_a(v: [f64; 3], gamma: f64) -> [[f64; 3]; 3] {
    let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let mut a = [[0.0; 3]; 3];
    if r2 == 0.0 {
        return a;
    }
    let s = r2.powf(0.5 * gamma);
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { r2 } else { 0.0 };
            a[i][j] = (delta - v[i] * v[j]) * s;
        }
    }
    a
}

/// b_j(v) = −2|v|^γ v_j.
pub fn kernel_b(v: [f64; 3], gamma: f64) -> [f64; 3] {
    let r = norm(v);
    let s = if r == 0.0 { 0.0 } else { -2.0 * r.powf(gamma) };
    [s * v[0], s * v[1], s * v[2]]
}

/// c(v) = −2(γ+3)|v|^γ.
pub fn kernel_c(v: [f64; 3], gamma: f64) -> f64 {
    if gamma == 0.0 {
        return -6.0;
    }
    -2.0 * (gamma + 3.0) * norm(v).powf(gamma)
}

pub fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(LandauError::GammaOutOfRange(gamma))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub grid: VelocityGrid,
    pub gamma: f64,
    pub abar: [Vec<f64>; 6],
    pub bbar: [Vec<f64>; 3],
    pub cbar: Vec<f64>,
}

impl CoefficientField {
    pub fn zeros(grid: VelocityGrid, gamma: f64) -> Self {
        let z = || vec![0.0; grid.len()];
        CoefficientField {
            grid,
            gamma,
            abar: [z(), z(), z(), z(), z(), z()],
            bbar: [z(), z(), z()],
            cbar: z(),
        }
    }

    pub fn abar_entry(&self, idx: usize, i: usize, j: usize) -> f64 {
        self.abar[sym_index(i, j)][idx]
    }

    pub fn abar_packed(&self, idx: usize) -> [f64; 6] {
        std::array::from_fn(|s| self.abar[s][idx])
    }

    /// λ_max(ā) over all nodes.
    pub fn max_eigenvalue(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| sym3_max_eigenvalue(self.abar_packed(i)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max_v w(v)·λ_max(ā(v)), skipping nodes with zero weight.
    pub fn max_weighted_eigenvalue(&self, w: &[f64]) -> f64 {
        (0..self.grid.len())
            .filter(|&i| w[i] > 0.0)
            .map(|i| w[i] * sym3_max_eigenvalue(self.abar_packed(i)))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Largest eigenvalue by the trigonometric closed form. Loses about half
/// the digits at a repeated top eigenvalue, which is harmless for step-size
/// bounds; use [`sym3_eigenvalues`] where accuracy matters.
pub fn sym3_max_eigenvalue(a: [f64; 6]) -> f64 {
    let off = a[1] * a[1] + a[2] * a[2] + a[4] * a[4];
    let q = (a[0] + a[3] + a[5]) / 3.0;
    let (d0, d1, d2) = (a[0] - q, a[3] - q, a[5] - q);
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * off;
    if p2 <= 1e-300 {
        return q;
    }
    let p = (p2 / 6.0).sqrt();
    let det = d0 * (d1 * d2 - a[4] * a[4]) - a[1] * (a[1] * d2 - a[4] * a[2]) + a[2] * (a[1] * a[4] - d1 * a[2]);
    let r = (det / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    q + 2.0 * p * (r.acos() / 3.0).cos()
}

/// Ascending eigenvalues of the symmetric matrix stored in [`SYM`] order,
/// by cyclic Jacobi rotations (accurate also for repeated eigenvalues).
pub fn sym3_eigenvalues(a: [f64; 6]) -> [f64; 3] {
    let mut m = [[a[0], a[1], a[2]], [a[1], a[3], a[4]], [a[2], a[4], a[5]]];
    for _ in 0..32 {
        let off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
        let diag = m[0][0] * m[0][0] + m[1][1] * m[1][1] + m[2][2] * m[2][2];
        if off <= 1e-34 * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
        }
    }
    let mut e = [m[0][0], m[1][1], m[2][2]];
    e.sort_by(|x, y| x.total_cmp(y));
    e
}

/// Zeroth, first and second quadrature moments of a field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub m: f64,
    pub p: [f64; 3],
    pub sigma: [[f64; 3]; 3],
}

impl Moments {
    pub fn of(grid: &VelocityGrid, values: &[f64]) -> Self {
        let n = grid.n();
        let x: Vec<f64> = (0..n).map(|i| grid.coord(i)).collect();
        // per-row sums of f, x₀f, x₀²f, then weighted by x₁ and x₂
        let mut out = Moments::default();
        let mut s = [[0.0; 3]; 3];
        let mut sxx = [[0.0; 3]; 3];
        for (row, chunk) in values.chunks(n).enumerate() {
            let (x1, x2) = (x[row % n], x[row / n]);
            let (mut r0, mut r1, mut r2) = (0.0, 0.0, 0.0);
            for (w, xi) in chunk.iter().zip(&x) {
                let t = w * xi;
                r0 += w;
                r1 += t;
                r2 += t * xi;
            }
            out.m += r0;
            out.p[0] += r1;
            out.p[1] += x1 * r0;
            out.p[2] += x2 * r0;
            s[0][0] += r2;
            s[0][1] += x1 * r1;
            s[0][2] += x2 * r1;
            sxx[1][1] += x1 * x1 * r0;
            sxx[1][2] += x1 * x2 * r0;
            sxx[2][2] += x2 * x2 * r0;
        }
        out.sigma[0][0] = s[0][0];
        out.sigma[0][1] = s[0][1];
        out.sigma[0][2] = s[0][2];
        out.sigma[1][1] = sxx[1][1];
        out.sigma[1][2] = sxx[1][2];
        out.sigma[2][2] = sxx[2][2];
        let h3 = grid.cell_volume();
        out.m *= h3;
        for a in 0..3 {
            out.p[a] *= h3;
            for b in a..3 {
                out.sigma[a][b] *= h3;
                out.sigma[b][a] = out.sigma[a][b];
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        self.sigma[0][0] + self.sigma[1][1] + self.sigma[2][2]
    }

    /// (a_ij ∗ w)(v) for γ = 0, exact because a(v−v∗) is quadratic in v∗.
    pub fn a_conv(&self, v: [f64; 3], i: usize, j: usize) -> f64 {
        let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let vp = v[0] * self.p[0] + v[1] * self.p[1] + v[2] * self.p[2];
        let diag = if i == j { self.m * r2 - 2.0 * vp + self.trace() } else { 0.0 };
        diag - (self.m * v[i] * v[j] - v[i] * self.p[j] - v[j] * self.p[i] + self.sigma[i][j])
    }
}

/// Coefficients for γ = 0 from moments only.
pub fn moment_oracle(f: &DistributionField) -> CoefficientField {
    let grid = f.grid;
    let mo = Moments::of(&grid, &f.values);
    let mut out = CoefficientField::zeros(grid, 0.0);
    for idx in 0..grid.len() {
        let v = grid.node(idx);
        for (s, &(i, j)) in SYM.iter().enumerate() {
            out.abar[s][idx] = mo.a_conv(v, i, j);
        }
        for j in 0..3 {
            out.bbar[j][idx] = -2.0 * (mo.m * v[j] - mo.p[j]);
        }
        out.cbar[idx] = -6.0 * mo.m;
    }
    out
}

/// Checked wrapper matching the convolution route's signature.
pub fn moment_oracle_checked(f: &DistributionField, gamma: f64) -> Result<CoefficientField> {
    if gamma != 0.0 {
        return Err(LandauError::OracleGamma(gamma));
    }
    Ok(moment_oracle(f))
}

/// K̂ = min_v λ_min(ā(v)) / (1+|v|²)^{γ/2} and the node where it is attained,
/// failing when K̂ ≤ 0.
pub fn ellipticity_constant(coeffs: &CoefficientField, gamma: f64) -> Result<(f64, usize)> {
    let best = ellipticity_scan(coeffs, gamma);
    let grid = coeffs.grid;
    if !(best.0 > 0.0) {
        return Err(LandauError::Degenerate(format!(
            "minimum scaled eigenvalue {:e} at node {:?}",
            best.0,
            grid.node(best.1)
        )));
    }
    Ok(best)
}

/// The same scan without the positivity check.
pub fn ellipticity_scan(coeffs: &CoefficientField, gamma: f64) -> (f64, usize) {
    let grid = coeffs.grid;
    let mut best = (f64::INFINITY, 0);
    for idx in 0..grid.len() {
        let v = grid.node(idx);
        let w = (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).powf(0.5 * gamma);
        let k = sym3_eigenvalues(coeffs.abar_packed(idx))[0] / w;
        if k < best.0 {
            best = (k, idx);
        }
    }
    best
}

/// Where the derivatives of b̄ and c̄ are placed during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyRoute {
    /// b̄ = b∗f and c̄ = c∗f with the pointwise kernels.
    Direct,
    /// b̄_j = Σ_i a_ij∗∂_i f and c̄ = Σ_ij a_ij∗∂_ij f, derivatives taken on
    /// the padded grid. Same continuum value, and the discrete operator then
    /// annihilates Maxwellians to spectral accuracy for every γ.
    Transferred,
}

#[derive(Debug, Clone, Copy)]
enum Mult {
    A(usize),
    B(usize),
    C,
    /// Σ_i iκ_i â_ij
    BT(usize),
    /// −Σ_ij κ_iκ_j â_ij
    CT,
    DerivA(usize, MultiIndex),
    DerivC(MultiIndex),
}

/// Linear-convolution engine for one grid and one γ.
#[derive(Clone)]
pub struct Convolver {
    grid: VelocityGrid,
    gamma: f64,
    fft: Fft3,
    a_hat: Vec<Vec<Complex64>>,
    b_hat: Vec<Vec<Complex64>>,
    c_hat: Vec<Complex64>,
    bt_hat: Vec<Vec<Complex64>>,
    ct_hat: Vec<Complex64>,
    kappa: Vec<f64>,
    tol_trunc: f64,
}

impl Convolver {
    pub fn new(grid: VelocityGrid, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let n = grid.n();
        let np = 2 * n;
        let h = grid.h();
        let fft = Fft3::new(np);
        let z = |p: usize| if p < n { p as f64 * h } else { (p as f64 - np as f64) * h };
        let len = np * np * np;
        let mut a: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); len]; 6];
        let mut b: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); len]; 3];
        let mut c = vec![Complex64::default(); len];
        for p2 in 0..np {
            for p1 in 0..np {
                for p0 in 0..np {
                    let k = p0 + np * (p1 + np * p2);
                    let v = [z(p0), z(p1), z(p2)];
                    let ka = kernel_a(v, gamma);
                    for (s, &(i, j)) in SYM.iter().enumerate() {
                        a[s][k].re = ka[i][j];
                    }
                    let kb = kernel_b(v, gamma);
                    for j in 0..3 {
                        b[j][k].re = kb[j];
                    }
                    c[k].re = kernel_c(v, gamma);
                }
            }
        }
        for arr in a.iter_mut().chain(b.iter_mut()) {
            fft.forward(arr);
        }
        fft.forward(&mut c);
        let dk = std::f64::consts::PI / (n as f64 * h);
        let kappa = (0..np)
            .map(|p| if p < n { p as f64 * dk } else { (p as f64 - np as f64) * dk })
            .collect();
        let mut out = Convolver {
            grid,
            gamma,
            fft,
            a_hat: a,
            b_hat: b,
            c_hat: c,
            bt_hat: Vec::new(),
            ct_hat: Vec::new(),
            kappa,
            tol_trunc: DEFAULT_TOL_TRUNC,
        };
        out.bt_hat = (0..3).map(|j| out.tabulate(&Mult::BT(j))).collect();
        out.ct_hat = out.tabulate(&Mult::CT);
        Ok(out)
    }

    fn tabulate(&self, m: &Mult) -> Vec<Complex64> {
        let np = 2 * self.grid.n();
        (0..np * np * np)
            .map(|k| self.mult_value(m, k, [k % np, (k / np) % np, k / (np * np)]))
            .collect()
    }

    fn kernel(&self, m: &Mult) -> std::borrow::Cow<'_, [Complex64]> {
        use std::borrow::Cow;
        match *m {
            Mult::A(s) => Cow::Borrowed(&self.a_hat[s]),
            Mult::B(j) => Cow::Borrowed(&self.b_hat[j]),
            Mult::C => Cow::Borrowed(&self.c_hat),
            Mult::BT(j) if !self.bt_hat.is_empty() => Cow::Borrowed(&self.bt_hat[j]),
            Mult::CT if !self.ct_hat.is_empty() => Cow::Borrowed(&self.ct_hat),
            _ => Cow::Owned(self.tabulate(m)),
        }
    }

    pub fn with_tol_trunc(mut self, tol: f64) -> Self {
        self.tol_trunc = tol;
        self
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tol_trunc(&self) -> f64 {
        self.tol_trunc
    }

    fn padded_transform(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.grid.n();
        let np = 2 * n;
        let mut data = vec![Complex64::default(); np * np * np];
        for i2 in 0..n {
            for i1 in 0..n {
                let src = n * (i1 + n * i2);
                let dst = np * (i1 + np * i2);
                for i0 in 0..n {
                    data[dst + i0].re = values[src + i0];
                }
            }
        }
        self.fft.forward_pruned(&mut data, n);
        data
    }

    // (iκ)^a along one padded axis, Nyquist removed for odd a
    fn axis_factor(&self, p: usize, a: u32) -> Complex64 {
        if a == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if a % 2 == 1 && p == self.grid.n() {
            return Complex64::default();
        }
        Complex64::new(0.0, self.kappa[p]).powu(a)
    }

    fn mult_value(&self, m: &Mult, k: usize, p: [usize; 3]) -> Complex64 {
        match *m {
            Mult::A(s) => self.a_hat[s][k],
            Mult::B(j) => self.b_hat[j][k],
            Mult::C => self.c_hat[k],
            Mult::BT(j) => (0..3)
                .map(|i| self.axis_factor(p[i], 1) * self.a_hat[sym_index(i, j)][k])
                .sum(),
            Mult::CT => {
                let mut acc = Complex64::default();
                for (s, &(i, j)) in SYM.iter().enumerate() {
                    let w = if i == j { 1.0 } else { 2.0 };
                    let kk = if i == j {
                        self.axis_factor(p[i], 2)
                    } else {
                        self.axis_factor(p[i], 1) * self.axis_factor(p[j], 1)
                    };
                    acc += kk * self.a_hat[s][k] * w;
                }
                acc
            }
            Mult::DerivA(s, beta) => self.deriv_factor(&beta, p) * self.a_hat[s][k],
            Mult::DerivC(beta) => self.deriv_factor(&beta, p) * self.c_hat[k],
        }
    }

    fn deriv_factor(&self, beta: &MultiIndex, p: [usize; 3]) -> Complex64 {
        self.axis_factor(p[0], beta.0[0]) * self.axis_factor(p[1], beta.0[1]) * self.axis_factor(p[2], beta.0[2])
    }

    /// Real outputs `h³ · IDFT(m · F)` on the n³ block, two per inverse transform.
    fn convolve(&self, fhat: &[Complex64], mults: &[Mult]) -> Vec<Vec<f64>> {
        let n = self.grid.n();
        let np = 2 * n;
        let scale = self.grid.cell_volume() / (np * np * np) as f64;
        let iu = Complex64::new(0.0, 1.0);
        let mut out = Vec::with_capacity(mults.len());
        let mut data = vec![Complex64::default(); fhat.len()];
        for pair in mults.chunks(2) {
            let ka = self.kernel(&pair[0]);
            match pair.get(1) {
                Some(second) => {
                    let kb = self.kernel(second);
                    for (d, (&x, (&a, &b))) in data.iter_mut().zip(fhat.iter().zip(ka.iter().zip(kb.iter()))) {
                        *d = x * (a + iu * b);
                    }
                }
                None => {
                    for (d, (&x, &a)) in data.iter_mut().zip(fhat.iter().zip(ka.iter())) {
                        *d = x * a;
                    }
                }
            }
            self.fft.inverse_pruned(&mut data, n);
            let mut re = vec![0.0; n * n * n];
            let mut im = vec![0.0; n * n * n];
            for i2 in 0..n {
                for i1 in 0..n {
                    let src = np * (i1 + np * i2);
                    let dst = n * (i1 + n * i2);
                    for i0 in 0..n {
                        let x = data[src + i0] * scale;
                        re[dst + i0] = x.re;
                        im[dst + i0] = x.im;
                    }
                }
            }
            out.push(re);
            if pair.len() == 2 {
                out.push(im);
            }
        }
        out
    }

    fn prepare(&self, f: &DistributionField) -> Result<Vec<Complex64>> {
        self.grid.same_as(&f.grid)?;
        f.check_boundary_mass(self.tol_trunc)?;
        Ok(self.padded_transform(&f.values))
    }

    /// ā = a∗f, b̄ = b∗f, c̄ = c∗f.
    pub fn assemble(&self, f: &DistributionField) -> Result<CoefficientField> {
        self.assemble_route(f, AssemblyRoute::Direct)
    }

    pub fn assemble_route(&self, f: &DistributionField, route: AssemblyRoute) -> Result<CoefficientField> {
        let fhat = self.prepare(f)?;
        let mults: Vec<Mult> = match route {
            AssemblyRoute::Direct => (0..6)
                .map(Mult::A)
                .chain((0..3).map(Mult::B))
                .chain(std::iter::once(Mult::C))
                .collect(),
            AssemblyRoute::Transferred => (0..6)
                .map(Mult::A)
                .chain((0..3).map(Mult::BT))
                .chain(std::iter::once(Mult::CT))
                .collect(),
        };
        let mut outs = self.convolve(&fhat, &mults).into_iter();
        let mut next = || outs.next().unwrap_or_default();
        Ok(CoefficientField {
            grid: self.grid,
            gamma: self.gamma,
            abar: std::array::from_fn(|_| next()),
            bbar: std::array::from_fn(|_| next()),
            cbar: next(),
        })
    }

    /// ā together with the transferred c̄, skipping b̄ (what the
    /// nondivergence operator needs).
    pub fn assemble_operator(&self, f: &DistributionField) -> Result<CoefficientField> {
        let fhat = self.prepare(f)?;
        let mults: Vec<Mult> = (0..6).map(Mult::A).chain(std::iter::once(Mult::CT)).collect();
        let mut outs = self.convolve(&fhat, &mults).into_iter();
        let mut next = || outs.next().unwrap_or_default();
        let abar = std::array::from_fn(|_| next());
        let cbar = next();
        let z = || vec![0.0; self.grid.len()];
        Ok(CoefficientField {
            grid: self.grid,
            gamma: self.gamma,
            abar,
            bbar: [z(), z(), z()],
            cbar,
        })
    }

    /// ā alone plus the transferred drift Σ_i a_ij∗∂_i f.
    pub fn abar_and_drift(&self, f: &DistributionField) -> Result<([Vec<f64>; 6], [Vec<f64>; 3])> {
        let fhat = self.prepare(f)?;
        let mults: Vec<Mult> = (0..6).map(Mult::A).chain((0..3).map(Mult::BT)).collect();
        let mut outs = self.convolve(&fhat, &mults).into_iter();
        let mut next = || outs.next().unwrap_or_default();
        let abar = std::array::from_fn(|_| next());
        let drift = std::array::from_fn(|_| next());
        Ok((abar, drift))
    }

    /// ∂^β ā_ij = a_ij ∗ ∂^β f for all six entries.
    pub fn abar_derivative(&self, f: &DistributionField, beta: &MultiIndex) -> Result<[Vec<f64>; 6]> {
        let fhat = self.prepare(f)?;
        let mults: Vec<Mult> = (0..6).map(|s| Mult::DerivA(s, *beta)).collect();
        let mut outs = self.convolve(&fhat, &mults).into_iter();
        Ok(std::array::from_fn(|_| outs.next().unwrap_or_default()))
    }

    /// ∂^β c̄ = c ∗ ∂^β f.
    pub fn cbar_derivative(&self, f: &DistributionField, beta: &MultiIndex) -> Result<Vec<f64>> {
        let fhat = self.prepare(f)?;
        Ok(self.convolve(&fhat, &[Mult::DerivC(*beta)]).pop().unwrap_or_default())
    }
}
