use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// One-sided Welch power spectral density with a periodic Hann window, 50%
/// overlap and per-segment mean removal. Returns `(frequencies, psd)` with
/// the PSD in units²/Hz, so that its integral over frequency approximates
/// the signal variance.
pub fn welch_psd(x: &[f64], fs: f64, nperseg: usize) -> (Vec<f64>, Vec<f64>) {
    let nperseg = nperseg.min(x.len()).max(2);
    let step = nperseg / 2;
    let window: Vec<f64> = (0..nperseg)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / nperseg as f64).cos())
        .collect();
    let wsum: f64 = window.iter().map(|w| w * w).sum();
    let nfreq = nperseg / 2 + 1;
    let mut psd = vec![0.0; nfreq];
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nperseg);
    let mut buf = vec![Complex::new(0.0, 0.0); nperseg];
    let mut segments = 0usize;
    let mut start = 0;
    while start + nperseg <= x.len() {
        let seg = &x[start..start + nperseg];
        let mean = seg.iter().sum::<f64>() / nperseg as f64;
        for (b, (v, w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, b) in psd.iter_mut().zip(&buf) {
            *p += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let scale = 1.0 / (fs * wsum * segments.max(1) as f64);
    for (k, p) in psd.iter_mut().enumerate() {
        *p *= scale;
        let edge = k == 0 || (nperseg % 2 == 0 && k == nfreq - 1);
        if !edge {
            *p *= 2.0;
        }
    }
    let freqs = (0..nfreq).map(|k| k as f64 * fs / nperseg as f64).collect();
    (freqs, psd)
}
