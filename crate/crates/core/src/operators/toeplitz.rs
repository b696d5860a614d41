//! Convolution with a radially indexed kernel on the lattice: the weight
//! coupling two nodes depends only on the absolute index offsets.
//!
//! Large lattices use a circulant embedding of twice the size per axis and
//! FFTs; small ones sum directly.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Lattices with at least this many nodes are convolved through FFTs.
const FFT_THRESHOLD: usize = 256;

#[derive(Clone)]
struct Spectrum {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Complex<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct ToeplitzKernel {
    dim: usize,
    n: usize,
    /// `weights[a * n + b]` for offsets `(a, b)` in 2-D, `weights[a]` in 1-D.
    weights: Vec<f64>,
    spectrum: OnceLock<Spectrum>,
}

impl std::fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectrum")
            .field("size", &self.size)
            .finish_non_exhaustive()
    }
}

/// In-place transform of a row-major `size^dim` array.
fn transform(buf: &mut [Complex<f64>], dim: usize, size: usize, fft: &Arc<dyn Fft<f64>>) {
    if dim == 1 {
        fft.process(buf);
        return;
    }
    buf.par_chunks_mut(size).for_each(|row| fft.process(row));
    let mut cols: Vec<Complex<f64>> = vec![Complex::default(); size * size];
    cols.par_chunks_mut(size).enumerate().for_each(|(c, col)| {
        for (r, v) in col.iter_mut().enumerate() {
            *v = buf[r * size + c];
        }
        fft.process(col);
    });
    buf.par_chunks_mut(size).enumerate().for_each(|(r, row)| {
        for (c, v) in row.iter_mut().enumerate() {
            *v = cols[c * size + r];
        }
    });
}

impl ToeplitzKernel {
    /// Builds the kernel from `w(offset)`, offsets given in index units.
    pub fn from_fn(dim: usize, n: usize, w: impl Fn(usize, usize) -> f64) -> Self {
        let weights = match dim {
            1 => (0..n).map(|a| w(a, 0)).collect(),
            _ => (0..n * n).map(|k| w(k / n, k % n)).collect(),
        };
        Self {
            dim,
            n,
            weights,
            spectrum: OnceLock::new(),
        }
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        match self.dim {
            1 => self.weights[a],
            _ => self.weights[a * self.n + b],
        }
    }

    pub fn weight_mut(&mut self, a: usize, b: usize) -> &mut f64 {
        self.spectrum = OnceLock::new();
        match self.dim {
            1 => &mut self.weights[a],
            _ => &mut self.weights[a * self.n + b],
        }
    }

    /// `out_i = Σ_j w(|i - j|) f_j`, summed over all lattice nodes.
    pub fn convolve(&self, f: &[f64]) -> Vec<f64> {
        if f.len() >= FFT_THRESHOLD {
            return self.convolve_fft(f);
        }
        self.convolve_direct(f)
    }

    fn convolve_direct(&self, f: &[f64]) -> Vec<f64> {
        match self.dim {
            1 => self.convolve_1d(f),
            _ => self.convolve_2d(f),
        }
    }

    fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            let size = 2 * self.n;
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let fold = |k: usize| if k <= self.n { k.min(size - k) } else { size - k };
            let mut kernel_hat: Vec<Complex<f64>> = match self.dim {
                1 => (0..size)
                    .map(|k| if k == self.n { 0.0 } else { self.weights[fold(k)] })
                    .map(|w| Complex::new(w, 0.0))
                    .collect(),
                _ => (0..size * size)
                    .map(|k| {
                        let (a, b) = (k / size, k % size);
                        if a == self.n || b == self.n {
                            0.0
                        } else {
                            self.weights[fold(a) * self.n + fold(b)]
                        }
                    })
                    .map(|w| Complex::new(w, 0.0))
                    .collect(),
            };
            transform(&mut kernel_hat, self.dim, size, &forward);
            Spectrum {
                size,
                forward,
                inverse,
                kernel_hat,
            }
        })
    }

    fn convolve_fft(&self, f: &[f64]) -> Vec<f64> {
        let sp = self.spectrum();
        let (n, size) = (self.n, sp.size);
        let total = size.pow(self.dim as u32);
        let mut buf = vec![Complex::default(); total];
        match self.dim {
            1 => buf[..n].iter_mut().zip(f).for_each(|(b, v)| b.re = *v),
            _ => {
                for (r, chunk) in f.chunks(n).enumerate() {
                    buf[r * size..r * size + n]
                        .iter_mut()
                        .zip(chunk)
                        .for_each(|(b, v)| b.re = *v);
                }
            }
        }
        transform(&mut buf, self.dim, size, &sp.forward);
        buf.iter_mut().zip(&sp.kernel_hat).for_each(|(b, k)| *b *= k);
        transform(&mut buf, self.dim, size, &sp.inverse);
        let scale = 1.0 / total as f64;
        match self.dim {
            1 => buf[..n].iter().map(|c| c.re * scale).collect(),
            _ => (0..n * n).map(|k| buf[(k / n) * size + k % n].re * scale).collect(),
        }
    }

    fn convolve_1d(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let w = &self.weights;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let left: f64 = w[1..=i].iter().zip(f[..i].iter().rev()).map(|(a, b)| a * b).sum();
                let right: f64 = w[1..n - i].iter().zip(&f[i + 1..]).map(|(a, b)| a * b).sum();
                w[0] * f[i] + left + right
            })
            .collect()
    }

    fn convolve_2d(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n * n)
            .into_par_iter()
            .map(|node| {
                let (i, j) = (node / n, node % n);
                let mut acc = 0.0;
                for a in 0..n {
                    let row = &self.weights[a.abs_diff(i) * n..(a.abs_diff(i) + 1) * n];
                    let frow = &f[a * n..(a + 1) * n];
                    for (b, fv) in frow.iter().enumerate() {
                        acc += row[b.abs_diff(j)] * fv;
                    }
                }
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(k: &ToeplitzKernel, n: usize, dim: usize, f: &[f64]) -> Vec<f64> {
        let idx = |node: usize| if dim == 1 { (node, 0) } else { (node / n, node % n) };
        (0..f.len())
            .map(|p| {
                let (i, j) = idx(p);
                (0..f.len())
                    .map(|q| {
                        let (a, b) = idx(q);
                        k.weight(i.abs_diff(a), j.abs_diff(b)) * f[q]
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_dense_sum() {
        for dim in [1, 2] {
            let n = 6;
            let k = ToeplitzKernel::from_fn(dim, n, |a, b| 1.0 / (1.0 + (a * a + 3 * b) as f64));
            let len = n.pow(dim as u32);
            let f: Vec<f64> = (0..len).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
            let fast = k.convolve(&f);
            let slow = brute(&k, n, dim, &f);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        for (dim, n) in [(1, 300), (2, 18)] {
            let k = ToeplitzKernel::from_fn(dim, n, |a, b| 1.0 / (1.0 + (a * a + 3 * b) as f64).sqrt());
            let len = n.pow(dim as u32);
            let f: Vec<f64> = (0..len).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
            let fast = k.convolve_fft(&f);
            let slow = k.convolve_direct(&f);
            let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12 * scale, "{a} {b}");
            }
        }
    }
}
