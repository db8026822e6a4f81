//! Type-I discrete sine transform through a real FFT of length `2(m+1)`.

use std::sync::Arc;

use realfft::{RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex;

pub(crate) struct Dst1 {
    m: usize,
    fft: Arc<dyn RealToComplex<f64>>,
}

pub(crate) struct DstScratch {
    input: Vec<f64>,
    output: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Dst1 {
    pub(crate) fn new(m: usize) -> Self {
        let fft = RealFftPlanner::<f64>::new().plan_fft_forward(2 * (m + 1));
        Dst1 { m, fft }
    }

    pub(crate) fn scratch(&self) -> DstScratch {
        DstScratch {
            input: self.fft.make_input_vec(),
            output: self.fft.make_output_vec(),
            scratch: self.fft.make_scratch_vec(),
        }
    }

    /// `x_k ← Σ_j x_j sin(π j k / (m+1))`, `j, k ∈ 1..=m`. Unnormalized;
    /// applying it twice multiplies by `(m+1)/2`.
    pub(crate) fn transform(&self, x: &mut [f64], s: &mut DstScratch) {
        let m = self.m;
        debug_assert_eq!(x.len(), m);
        // odd extension [0, x, 0, -rev(x)]
        s.input[0] = 0.0;
        s.input[m + 1] = 0.0;
        for (j, &v) in x.iter().enumerate() {
            s.input[j + 1] = v;
            s.input[2 * m + 1 - j] = -v;
        }
        self.fft
            .process_with_scratch(&mut s.input, &mut s.output, &mut s.scratch)
            .expect("dst buffer sizes");
        for (k, v) in x.iter_mut().enumerate() {
            *v = -0.5 * s.output[k + 1].im;
        }
    }
}
