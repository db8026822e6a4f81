//! Zero-padded FFT convolution of an `m^d` lattice with a symmetric kernel.
//!
//! The kernel is embedded in a circulant of per-axis size `P ≥ 2m - 1`.
//! Because the kernel is even in every coordinate its spectrum is real, so
//! only the half spectrum `P^{d-1} × (P/2 + 1)` is stored. Transforms are
//! pruned: a forward pass never touches lines that are identically zero and
//! the inverse pass only computes the lines that survive truncation.

use std::sync::{Arc, Mutex};

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::kernel::KernelTable;

/// Columns transformed together along a strided axis.
const BATCH: usize = 16;

/// Smallest `n ≥ target` whose only prime factors are 2, 3, 5, 7.
pub fn next_fast_len(target: usize) -> usize {
    let mut n = target.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

/// Scratch space for one apply.
struct Workspace {
    lattice: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    line: Vec<f64>,
    cline: Vec<Complex<f64>>,
    columns: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

pub(crate) struct Convolver {
    d: usize,
    m: usize,
    p: usize,
    half: usize,
    /// Real half spectrum of the embedded kernel, scaled by `1/P^d`.
    multiplier: Vec<f64>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pool: Mutex<Vec<Workspace>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("d", &self.d)
            .field("m", &self.m)
            .field("p", &self.p)
            .finish_non_exhaustive()
    }
}

impl Convolver {
    pub(crate) fn new(table: &KernelTable) -> Self {
        let (d, m) = (table.dim(), table.m());
        let p = next_fast_len(2 * m - 1);
        let mut rplanner = RealFftPlanner::<f64>::new();
        let mut cplanner = FftPlanner::<f64>::new();
        let mut conv = Convolver {
            d,
            m,
            p,
            half: p / 2 + 1,
            multiplier: Vec::new(),
            r2c: rplanner.plan_fft_forward(p),
            c2r: rplanner.plan_fft_inverse(p),
            fwd: cplanner.plan_fft_forward(p),
            inv: cplanner.plan_fft_inverse(p),
            pool: Mutex::new(Vec::new()),
        };

        // circulant embedding: offset o sits at o mod P
        let wrap = |k: usize| -> Option<usize> {
            if k < m {
                Some(k)
            } else if k > p - m {
                Some(p - k)
            } else {
                None
            }
        };
        let lines = p.pow(d as u32 - 1);
        let mut ws = conv.workspace(p.pow(d as u32));
        for l in 0..lines {
            let mut rest = l;
            let mut base = 0usize;
            let mut live = true;
            for _ in 0..d - 1 {
                let k = rest % p;
                rest /= p;
                match wrap(k) {
                    Some(a) => base = base * m + a,
                    None => live = false,
                }
            }
            let row = &mut ws.lattice[l * p..(l + 1) * p];
            if !live {
                continue;
            }
            // `base` was assembled fastest-axis first; the table is symmetric
            // under axis permutation so the order does not matter.
            for (k, v) in row.iter_mut().enumerate() {
                if let Some(a) = wrap(k) {
                    *v = table.octant()[base * m + a];
                }
            }
        }
        conv.forward(&mut ws, p);
        let scale = 1.0 / (p as f64).powi(d as i32);
        conv.multiplier = ws.spectrum.iter().map(|c| c.re * scale).collect();
        conv
    }

    pub(crate) fn embedding_len(&self) -> usize {
        self.p
    }

    pub(crate) fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    fn workspace(&self, lattice_len: usize) -> Workspace {
        let scratch_len = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len())
            .max(self.r2c.get_scratch_len())
            .max(self.c2r.get_scratch_len());
        Workspace {
            lattice: vec![0.0; lattice_len],
            spectrum: vec![Complex::default(); self.p.pow(self.d as u32 - 1) * self.half],
            line: vec![0.0; self.p],
            cline: vec![Complex::default(); self.half],
            columns: vec![Complex::default(); BATCH * self.p],
            scratch: vec![Complex::default(); scratch_len],
        }
    }

    /// Offset into the spectrum of line `l`, where `l` enumerates the
    /// first `d - 1` axes restricted to `0..lim`.
    fn line_offset(&self, mut l: usize, lim: usize) -> usize {
        let mut off = 0;
        let mut stride = self.half;
        for _ in 0..self.d - 1 {
            off += (l % lim) * stride;
            l /= lim;
            stride *= self.p;
        }
        off
    }

    /// `ws.lattice` (per-axis extent `lim`, row length `P` when `lim == P`,
    /// else `m`) into `ws.spectrum`.
    fn forward(&self, ws: &mut Workspace, lim: usize) {
        let row = if lim == self.p { self.p } else { self.m };
        ws.spectrum.fill(Complex::default());
        let lines = lim.pow(self.d as u32 - 1);
        for l in 0..lines {
            ws.line[..row].copy_from_slice(&ws.lattice[l * row..(l + 1) * row]);
            ws.line[row..].fill(0.0);
            let off = self.line_offset(l, lim);
            self.r2c
                .process_with_scratch(
                    &mut ws.line,
                    &mut ws.spectrum[off..off + self.half],
                    &mut ws.scratch,
                )
                .expect("r2c buffer sizes");
        }
        for axis in (0..self.d - 1).rev() {
            self.strided_pass(ws, axis, lim, &*self.fwd);
        }
    }

    /// FFT along `axis` (< d-1) for every line whose earlier axes are `< lim`.
    fn strided_pass(&self, ws: &mut Workspace, axis: usize, lim: usize, fft: &dyn Fft<f64>) {
        let p = self.p;
        // inner block: axes after `axis`, contiguous
        let inner = p.pow((self.d - 2 - axis) as u32) * self.half;
        let block = p * inner;
        let outer = lim.pow(axis as u32);
        for o in 0..outer {
            let mut rest = o;
            let mut base = 0;
            let mut stride = block;
            for _ in 0..axis {
                base += (rest % lim) * stride;
                rest /= lim;
                stride *= p;
            }
            let data = &mut ws.spectrum[base..base + block];
            let mut c0 = 0;
            while c0 < inner {
                let nb = BATCH.min(inner - c0);
                let cols = &mut ws.columns[..nb * p];
                for k in 0..p {
                    let src = &data[k * inner + c0..k * inner + c0 + nb];
                    for (b, &v) in src.iter().enumerate() {
                        cols[b * p + k] = v;
                    }
                }
                fft.process_with_scratch(cols, &mut ws.scratch);
                for k in 0..p {
                    let dst = &mut data[k * inner + c0..k * inner + c0 + nb];
                    for (b, v) in dst.iter_mut().enumerate() {
                        *v = cols[b * p + k];
                    }
                }
                c0 += nb;
            }
        }
    }

    /// Linear convolution of the `m^d` lattice array `x` with the kernel,
    /// truncated back to `m^d`, written to `y`.
    pub(crate) fn convolve(&self, x: &[f64], y: &mut [f64]) {
        let m = self.m;
        let mut ws = self
            .pool
            .lock()
            .expect("workspace pool poisoned")
            .pop()
            .unwrap_or_else(|| self.workspace(m.pow(self.d as u32)));
        ws.lattice.copy_from_slice(x);
        self.forward(&mut ws, m);
        for (c, &w) in ws.spectrum.iter_mut().zip(&self.multiplier) {
            *c *= w;
        }
        for axis in 0..self.d - 1 {
            self.strided_pass(&mut ws, axis, m, &*self.inv);
        }
        let lines = m.pow(self.d as u32 - 1);
        for l in 0..lines {
            let off = self.line_offset(l, m);
            ws.cline.copy_from_slice(&ws.spectrum[off..off + self.half]);
            ws.cline[0].im = 0.0;
            if self.p.is_multiple_of(2) {
                ws.cline[self.half - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(&mut ws.cline, &mut ws.line, &mut ws.scratch)
                .expect("c2r buffer sizes");
            y[l * m..(l + 1) * m].copy_from_slice(&ws.line[..m]);
        }
        self.pool.lock().expect("workspace pool poisoned").push(ws);
    }
}
