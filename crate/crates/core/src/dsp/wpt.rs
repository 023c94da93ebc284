//! Dyadic wavelet packet transform with periodic boundary extension.
//!
//! Every stage splits a node into a lowpass and a highpass half-length
//! child. Decimating a highpass output mirrors its spectrum, so the natural
//! (filter-path) order of the leaves is not their frequency order; the
//! decomposition tracks that mirroring per node and writes each child
//! directly to its frequency-ordered slot, which is the Gray-code
//! permutation of the natural order.

use crate::bands::BandSpec;
use crate::dsp::wavelet::Wavelet;
use crate::error::{CoreError, Result};

/// Leaf coefficients in ascending frequency order. Leaf `j` of a depth-`d`
/// decomposition at sampling rate `fs` covers `[j, j+1) * fs / 2^(d+1)` Hz.
/// A pruned decomposition keeps only the lowest `n_leaves` leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafSpectrum {
    depth: u32,
    leaf_len: usize,
    coeffs: Vec<f64>,
}

impl LeafSpectrum {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaf_len(&self) -> usize {
        self.leaf_len
    }

    pub fn n_leaves(&self) -> usize {
        self.coeffs.len() / self.leaf_len
    }

    pub fn is_complete(&self) -> bool {
        self.n_leaves() == 1 << self.depth
    }

    pub fn leaf(&self, j: usize) -> &[f64] {
        &self.coeffs[j * self.leaf_len..(j + 1) * self.leaf_len]
    }

    pub fn leaf_energy(&self, j: usize) -> f64 {
        self.leaf(j).iter().map(|c| c * c).sum()
    }

    pub fn leaf_energies(&self) -> Vec<f64> {
        (0..self.n_leaves()).map(|j| self.leaf_energy(j)).collect()
    }

    pub fn total_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn leaf_width_hz(&self, fs_hz: f64) -> f64 {
        fs_hz / (1u64 << (self.depth + 1)) as f64
    }
}

pub fn wpt_decompose(signal: &[f64], depth: u32, wavelet: Wavelet) -> Result<LeafSpectrum> {
    wpt_decompose_lowest(signal, depth, wavelet, 1 << depth)
}

/// Decomposes only the subtree needed for the lowest `keep` leaves. The
/// result is bit-identical to the corresponding prefix of a full
/// decomposition.
pub fn wpt_decompose_lowest(
    signal: &[f64],
    depth: u32,
    wavelet: Wavelet,
    keep: usize,
) -> Result<LeafSpectrum> {
    let n = signal.len();
    if depth > 20 || n == 0 || n % (1usize << depth) != 0 {
        return Err(CoreError::NonDivisibleLength { len: n, depth });
    }
    let keep = keep.clamp(1, 1 << depth);
    let h = wavelet.lowpass();
    let g = wavelet.highpass();

    let mut current = signal.to_vec();
    let mut flips = vec![false];
    let mut node_len = n;
    for level in 1..=depth {
        let span = 1usize << (depth - level);
        let kept = keep.div_ceil(span);
        let child_len = node_len / 2;
        let mut next = vec![0.0; kept * child_len];
        let mut next_flips = vec![false; kept];
        let mut lo = vec![0.0; child_len];
        let mut hi = vec![0.0; child_len];
        for (i, &flip) in flips.iter().enumerate() {
            if 2 * i >= kept {
                break;
            }
            let node = &current[i * node_len..(i + 1) * node_len];
            analysis_step(node, h, &g, &mut lo, &mut hi);
            let (low_pos, high_pos) = if flip { (2 * i + 1, 2 * i) } else { (2 * i, 2 * i + 1) };
            for (pos, data, child_flip) in [(low_pos, &lo, flip), (high_pos, &hi, !flip)] {
                if pos < kept {
                    next[pos * child_len..(pos + 1) * child_len].copy_from_slice(data);
                    next_flips[pos] = child_flip;
                }
            }
        }
        current = next;
        flips = next_flips;
        node_len = child_len;
    }
    Ok(LeafSpectrum {
        depth,
        leaf_len: node_len,
        coeffs: current,
    })
}

/// One periodized filter/decimate stage:
/// `lo[k] = Σ_j h[j] x[(2k + j) mod n]`, likewise `hi` with `g`.
fn analysis_step(x: &[f64], h: &[f64], g: &[f64], lo: &mut [f64], hi: &mut [f64]) {
    let n = x.len();
    let taps = h.len();
    for k in 0..n / 2 {
        let start = 2 * k;
        let (mut a, mut d) = (0.0, 0.0);
        if start + taps <= n {
            let seg = &x[start..start + taps];
            for ((&s, &hj), &gj) in seg.iter().zip(h).zip(g) {
                a += hj * s;
                d += gj * s;
            }
        } else {
            for j in 0..taps {
                let s = x[(start + j) % n];
                a += h[j] * s;
                d += g[j] * s;
            }
        }
        lo[k] = a;
        hi[k] = d;
    }
}

/// Sums leaf energies over each band. Every band edge must sit on the leaf
/// grid and every band must be covered by the spectrum's leaves.
pub fn band_energies(spectrum: &LeafSpectrum, bands: &BandSpec, fs_hz: f64) -> Result<Vec<f64>> {
    let leaf_hz = spectrum.leaf_width_hz(fs_hz);
    bands.check_alignment(leaf_hz)?;
    bands
        .bands()
        .iter()
        .map(|b| {
            let first = (b.lo_hz / leaf_hz).round() as usize;
            let last = (b.hi_hz / leaf_hz).round() as usize;
            if last > spectrum.n_leaves() {
                return Err(CoreError::InvalidBand {
                    lo_hz: b.lo_hz,
                    hi_hz: b.hi_hz,
                    fs_hz,
                });
            }
            Ok((first..last).map(|j| spectrum.leaf_energy(j)).sum())
        })
        .collect()
}

/// Number of lowest leaves needed to cover every band.
pub fn leaves_for_bands(bands: &BandSpec, depth: u32, fs_hz: f64) -> usize {
    let leaf_hz = fs_hz / (1u64 << (depth + 1)) as f64;
    ((bands.max_hz() / leaf_hz).round() as usize).min(1 << depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_divisible_length() {
        assert!(matches!(
            wpt_decompose(&[0.0; 100], 3, Wavelet::Db4),
            Err(CoreError::NonDivisibleLength { len: 100, depth: 3 })
        ));
    }

    #[test]
    fn haar_single_stage_is_sum_and_difference() {
        let s = wpt_decompose(&[1.0, 3.0, 2.0, 2.0], 1, Wavelet::Db1).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.leaf(0)[0] - 4.0 * r).abs() < 1e-12);
        assert!((s.leaf(0)[1] - 4.0 * r).abs() < 1e-12);
        assert!((s.leaf(1)[0] + 2.0 * r).abs() < 1e-12);
        assert!(s.leaf(1)[1].abs() < 1e-12);
    }

    #[test]
    fn pruned_prefix_matches_full() {
        let x: Vec<f64> = (0..512).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let full = wpt_decompose(&x, 5, Wavelet::Db6).unwrap();
        let part = wpt_decompose_lowest(&x, 5, Wavelet::Db6, 7).unwrap();
        assert_eq!(part.n_leaves(), 7);
        for j in 0..7 {
            assert_eq!(part.leaf(j), full.leaf(j));
        }
    }
}
