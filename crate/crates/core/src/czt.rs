//! Evaluation of uniformly spaced exponential sums with Bluestein's chirp trick.
//!
//! A [`UniformDft`] computes `y_j = sum_k a_k exp(i s x_j xi_k)` for
//! `x_j = x0 + j dx` and `xi_k = xi0 + k dxi`, where the spacings are
//! arbitrary. No interpolation is involved, so any requested output grid is
//! hit exactly.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_pair(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(len), p.plan_fft_inverse(len))
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, len: usize) -> Self {
        Self { start, step, len }
    }

    pub fn coord(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.coord(self.len.saturating_sub(1))
    }
}

#[derive(Clone)]
pub struct UniformDft {
    input: Axis,
    output: Axis,
    sign: f64,
    fft_len: usize,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn cis(a: f64) -> Complex64 {
    Complex64::new(a.cos(), a.sin())
}

impl UniformDft {
    /// Plan for `input` samples mapped onto `output` points with phase sign `sign` (±1).
    pub fn new(input: Axis, output: Axis, sign: f64) -> Self {
        let (n, m) = (input.len, output.len);
        let theta = sign * input.step * output.step;
        let fft_len = (n + m - 1).next_power_of_two();
        let (fwd, inv) = plan_pair(fft_len);

        // jk = (j^2 + k^2 - (j - k)^2) / 2
        let half_sq = |k: usize| theta * 0.5 * (k as f64) * (k as f64);
        let pre = (0..n).map(|k| cis(sign * output.start * k as f64 * input.step + half_sq(k))).collect();
        let post = (0..m)
            .map(|j| cis(sign * (output.start * input.start + j as f64 * output.step * input.start) + half_sq(j)))
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); fft_len];
        for l in 0..m {
            kernel[l] = cis(-half_sq(l));
        }
        for l in 1..n {
            kernel[fft_len - l] = cis(-half_sq(l));
        }
        fwd.process(&mut kernel);
        let scale = 1.0 / fft_len as f64;
        kernel.iter_mut().for_each(|z| *z *= scale);
        Self { input, output, sign, fft_len, pre, post, kernel, fwd, inv }
    }

    pub fn input(&self) -> Axis {
        self.input
    }

    pub fn output(&self) -> Axis {
        self.output
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    /// Plan for the adjoint map (conjugate transpose).
    pub fn adjoint(&self) -> Self {
        Self::new(self.output, self.input, -self.sign)
    }

    pub fn scratch_len(&self) -> usize {
        self.fft_len
    }

    /// `out[j] = sum_k a[k] exp(i s x_j xi_k)`. `buf` is resized as needed.
    pub fn apply(&self, a: &[Complex64], out: &mut [Complex64], buf: &mut Vec<Complex64>) {
        debug_assert_eq!(a.len(), self.input.len);
        debug_assert_eq!(out.len(), self.output.len);
        buf.clear();
        buf.resize(self.fft_len, Complex64::new(0.0, 0.0));
        for (k, (ak, pk)) in a.iter().zip(&self.pre).enumerate() {
            buf[k] = ak * pk;
        }
        self.fwd.process(buf);
        for (z, h) in buf.iter_mut().zip(&self.kernel) {
            *z *= h;
        }
        self.inv.process(buf);
        for (j, o) in out.iter_mut().enumerate() {
            *o = buf[j] * self.post[j];
        }
    }

    pub fn apply_vec(&self, a: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.output.len];
        let mut buf = Vec::new();
        self.apply(a, &mut out, &mut buf);
        out
    }
}

/// Apply `plans[a]` along axis `a` of a row-major array whose axis `a` has
/// length `plans[a].input().len`.
pub fn apply_separable(plans: &[&UniformDft], data: &[Complex64]) -> Vec<Complex64> {
    if plans.len() == 1 {
        return plans[0].apply_vec(data);
    }
    let mut shape: Vec<usize> = plans.iter().map(|p| p.input().len).collect();
    let mut cur = data.to_vec();
    let mut buf = Vec::new();
    for (axis, plan) in plans.iter().enumerate() {
        let (n, m) = (plan.input().len, plan.output().len);
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let mut next = vec![Complex64::new(0.0, 0.0); outer * m * inner];
        let mut line_in = vec![Complex64::new(0.0, 0.0); n];
        let mut line_out = vec![Complex64::new(0.0, 0.0); m];
        for o in 0..outer {
            for i in 0..inner {
                for k in 0..n {
                    line_in[k] = cur[(o * n + k) * inner + i];
                }
                plan.apply(&line_in, &mut line_out, &mut buf);
                for j in 0..m {
                    next[(o * m + j) * inner + i] = line_out[j];
                }
            }
        }
        shape[axis] = m;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[Complex64], input: Axis, output: Axis, sign: f64) -> Vec<Complex64> {
        (0..output.len)
            .map(|j| a.iter().enumerate().map(|(k, ak)| ak * cis(sign * output.coord(j) * input.coord(k))).sum())
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        let input = Axis::new(-3.1, 0.07, 37);
        let output = Axis::new(2.5, -0.31, 50);
        let a: Vec<Complex64> = (0..37).map(|k| Complex64::new((k as f64).sin(), 0.3 * k as f64)).collect();
        for &s in &[1.0, -1.0] {
            let plan = UniformDft::new(input, output, s);
            let got = plan.apply_vec(&a);
            let want = naive(&a, input, output, s);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).norm() < 1e-10 * (1.0 + w.norm()), "{g} vs {w}");
            }
        }
    }

    #[test]
    fn adjoint_identity() {
        let plan = UniformDft::new(Axis::new(-1.0, 0.1, 20), Axis::new(-4.0, 0.25, 33), 1.0);
        let a: Vec<Complex64> = (0..20).map(|k| Complex64::new(k as f64 * 0.1, 1.0)).collect();
        let b: Vec<Complex64> = (0..33).map(|k| Complex64::new(1.0, -(k as f64) * 0.05)).collect();
        let lhs: Complex64 = plan.apply_vec(&a).iter().zip(&b).map(|(x, y)| x * y.conj()).sum();
        let rhs: Complex64 = a.iter().zip(&plan.adjoint().apply_vec(&b)).map(|(x, y)| x * y.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn separable_two_dimensional() {
        let input = Axis::new(-1.0, 0.25, 8);
        let output = Axis::new(-2.0, 0.5, 6);
        let plan = UniformDft::new(input, output, 1.0);
        let a: Vec<Complex64> = (0..64).map(|k| Complex64::new((k as f64 * 0.7).cos(), 0.0)).collect();
        let got = apply_separable(&[&plan, &plan], &a);
        for j0 in 0..6 {
            for j1 in 0..6 {
                let mut want = Complex64::new(0.0, 0.0);
                for k0 in 0..8 {
                    for k1 in 0..8 {
                        let ph = output.coord(j0) * input.coord(k0) + output.coord(j1) * input.coord(k1);
                        want += a[k0 * 8 + k1] * cis(ph);
                    }
                }
                assert!((got[j0 * 6 + j1] - want).norm() < 1e-10);
            }
        }
    }
}
