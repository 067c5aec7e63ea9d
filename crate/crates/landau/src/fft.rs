//! Cubic 3D FFTs on row-major data (first axis fastest), with pruned
//! variants for zero-padded inputs and block-restricted outputs.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft3 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

#[derive(Clone, Copy)]
enum Dir {
    Forward,
    Inverse,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn plan(&self, dir: Dir) -> &Arc<dyn Fft<f64>> {
        match dir {
            Dir::Forward => &self.fwd,
            Dir::Inverse => &self.inv,
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward_pruned(data, self.n);
    }

    /// Unnormalized inverse transform in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse_pruned(data, self.n);
    }

    /// Forward transform of data that vanishes outside the block `[0, m)³`.
    pub fn forward_pruned(&self, data: &mut [Complex64], m: usize) {
        let n = self.n;
        assert_eq!(data.len(), self.len());
        self.axis0(data, m, m, Dir::Forward);
        self.axis1(data, n, m, Dir::Forward);
        self.axis2(data, n, n, Dir::Forward);
    }

    /// Inverse transform that is only guaranteed correct on the block `[0, m)³`.
    pub fn inverse_pruned(&self, data: &mut [Complex64], m: usize) {
        let n = self.n;
        assert_eq!(data.len(), self.len());
        self.axis2(data, n, n, Dir::Inverse);
        self.axis1(data, n, m, Dir::Inverse);
        self.axis0(data, m, m, Dir::Inverse);
    }

    // lines along axis 0 for i1 < lim1, i2 < lim2
    fn axis0(&self, data: &mut [Complex64], lim1: usize, lim2: usize, dir: Dir) {
        let n = self.n;
        let fft = self.plan(dir);
        data.par_chunks_mut(n * n).take(lim2).for_each_init(
            || vec![Complex64::default(); fft.get_inplace_scratch_len()],
            |scratch, plane| fft.process_with_scratch(&mut plane[..n * lim1], scratch),
        );
    }

    // lines along axis 1 for i0 < lim0, i2 < lim2
    fn axis1(&self, data: &mut [Complex64], lim0: usize, lim2: usize, dir: Dir) {
        let n = self.n;
        let fft = self.plan(dir);
        data.par_chunks_mut(n * n).take(lim2).for_each_init(
            || {
                (
                    vec![Complex64::default(); fft.get_inplace_scratch_len()],
                    vec![Complex64::default(); n * n],
                )
            },
            |(scratch, buf), plane| {
                let buf = &mut buf[..lim0 * n];
                for i1 in 0..n {
                    let row = &plane[i1 * n..i1 * n + lim0];
                    for (i0, &x) in row.iter().enumerate() {
                        buf[i0 * n + i1] = x;
                    }
                }
                fft.process_with_scratch(buf, scratch);
                for i1 in 0..n {
                    let row = &mut plane[i1 * n..i1 * n + lim0];
                    for (i0, x) in row.iter_mut().enumerate() {
                        *x = buf[i0 * n + i1];
                    }
                }
            },
        );
    }

    // exchange axes 1 and 2 by row copies
    fn swap12(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let n = self.n;
        dst.par_chunks_mut(n * n).enumerate().for_each(|(i1, plane)| {
            for i2 in 0..n {
                let s = n * (i1 + n * i2);
                plane[i2 * n..(i2 + 1) * n].copy_from_slice(&src[s..s + n]);
            }
        });
    }

    // lines along axis 2 for i0 < lim0, i1 < lim1
    fn axis2(&self, data: &mut [Complex64], lim0: usize, lim1: usize, dir: Dir) {
        let mut work = vec![Complex64::default(); data.len()];
        self.swap12(data, &mut work);
        self.axis1(&mut work, lim0, lim1, dir);
        self.swap12(&work, data);
    }
}
