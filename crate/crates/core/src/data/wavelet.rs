//! Four-level 2D Haar transform of 28×28 images into 799 coefficients in 13
//! groups.
//!
//! Each analysis step maps an `s×s` band to four `s/2 × s/2` bands using the
//! orthonormal 2×2 Haar kernel. The 7×7 band left after two steps is padded to
//! 8×8 by repeating its last row and column, so the bands below it are 4×4
//! and 2×2. Repeating the edge keeps constant images free of detail energy;
//! synthesis crops the padding away again, so the round trip is exact.

use super::Dataset;
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::matrix::Matrix;

pub const SIDE: usize = 28;
pub const NUM_COEFFS: usize = 799;

/// Band side length before each analysis step, finest first.
const STEP_SIDES: [usize; 4] = [28, 14, 7, 4];

/// Coefficient layout: approximation first, then levels 1 (coarsest, 2×2)
/// to 4 (finest, 14×14), each as horizontal, vertical and diagonal detail.
pub struct WaveletLayout;

impl WaveletLayout {
    pub const GROUP_SIZES: [usize; 13] = [4, 4, 4, 4, 16, 16, 16, 49, 49, 49, 196, 196, 196];
    /// Group indices of the three finest (level-4) detail bands.
    pub const HIGHEST_FREQUENCY_GROUPS: [usize; 3] = [10, 11, 12];

    pub fn partition() -> GroupPartition {
        let base = GroupPartition::contiguous(&Self::GROUP_SIZES).expect("layout sizes form a partition");
        GroupPartition::with_names(base.groups().to_vec(), Self::group_names(), NUM_COEFFS).expect("names match groups")
    }

    pub fn group_names() -> Vec<String> {
        let mut names = vec!["approx".to_string()];
        for level in 1..=4 {
            for band in ["H", "V", "D"] {
                names.push(format!("L{level}-{band}"));
            }
        }
        names
    }

    /// Detail level (1..=4) of a group; `None` for the approximation band.
    pub fn level_of(group: usize) -> Option<usize> {
        (1..13).contains(&group).then(|| (group - 1) / 3 + 1)
    }
}

struct Bands {
    ll: Matrix,
    h: Matrix,
    v: Matrix,
    d: Matrix,
}

fn pad_to_even(band: &Matrix) -> Matrix {
    let s = band.rows();
    if s.is_multiple_of(2) {
        return band.clone();
    }
    let mut out = Matrix::zeros(s + 1, s + 1);
    for r in 0..=s {
        for c in 0..=s {
            out.set(r, c, band.get(r.min(s - 1), c.min(s - 1)));
        }
    }
    out
}

fn analyze(band: &Matrix) -> Bands {
    let band = pad_to_even(band);
    let half = band.rows() / 2;
    let mut out = Bands {
        ll: Matrix::zeros(half, half),
        h: Matrix::zeros(half, half),
        v: Matrix::zeros(half, half),
        d: Matrix::zeros(half, half),
    };
    for r in 0..half {
        for c in 0..half {
            let a = band.get(2 * r, 2 * c);
            let b = band.get(2 * r, 2 * c + 1);
            let cc = band.get(2 * r + 1, 2 * c);
            let d = band.get(2 * r + 1, 2 * c + 1);
            out.ll.set(r, c, (a + b + cc + d) / 2.0);
            out.h.set(r, c, (a + b - cc - d) / 2.0);
            out.v.set(r, c, (a - b + cc - d) / 2.0);
            out.d.set(r, c, (a - b - cc + d) / 2.0);
        }
    }
    out
}

/// Inverse of [`analyze`], cropped to `side × side`.
fn synthesize(bands: &Bands, side: usize) -> Matrix {
    let half = bands.ll.rows();
    let mut full = Matrix::zeros(2 * half, 2 * half);
    for r in 0..half {
        for c in 0..half {
            let (s, h, v, d) = (
                bands.ll.get(r, c),
                bands.h.get(r, c),
                bands.v.get(r, c),
                bands.d.get(r, c),
            );
            full.set(2 * r, 2 * c, (s + h + v + d) / 2.0);
            full.set(2 * r, 2 * c + 1, (s + h - v - d) / 2.0);
            full.set(2 * r + 1, 2 * c, (s - h + v - d) / 2.0);
            full.set(2 * r + 1, 2 * c + 1, (s - h - v + d) / 2.0);
        }
    }
    if full.rows() == side {
        return full;
    }
    let mut out = Matrix::zeros(side, side);
    for r in 0..side {
        out.row_mut(r).copy_from_slice(&full.row(r)[..side]);
    }
    out
}

/// Transforms a row-major 28×28 image into 799 coefficients laid out per
/// [`WaveletLayout`].
pub fn haar_forward(image: &[f64]) -> Result<Vec<f64>> {
    if image.len() != SIDE * SIDE {
        return Err(Error::dims(format!(
            "haar_forward expects {} pixels, got {}",
            SIDE * SIDE,
            image.len()
        )));
    }
    let mut band = Matrix::from_vec(SIDE, SIDE, image.to_vec())?;
    let mut details = Vec::with_capacity(4);
    for _ in STEP_SIDES {
        let bands = analyze(&band);
        band = bands.ll;
        details.push((bands.h, bands.v, bands.d));
    }
    let mut out = Vec::with_capacity(NUM_COEFFS);
    out.extend_from_slice(band.as_slice());
    for (h, v, d) in details.iter().rev() {
        out.extend_from_slice(h.as_slice());
        out.extend_from_slice(v.as_slice());
        out.extend_from_slice(d.as_slice());
    }
    debug_assert_eq!(out.len(), NUM_COEFFS);
    Ok(out)
}

/// Rebuilds the 28×28 image (row-major) from 799 coefficients.
pub fn inverse_haar(coeffs: &[f64]) -> Result<Vec<f64>> {
    if coeffs.len() != NUM_COEFFS {
        return Err(Error::dims(format!(
            "inverse_haar expects {NUM_COEFFS} coefficients, got {}",
            coeffs.len()
        )));
    }
    let mut at = 0;
    let mut take = |side: usize| {
        let m = Matrix::from_vec(side, side, coeffs[at..at + side * side].to_vec()).expect("slice length");
        at += side * side;
        m
    };
    let mut band = take(2);
    for &side in STEP_SIDES.iter().rev() {
        let half = band.rows();
        let (h, v, d) = (take(half), take(half), take(half));
        band = synthesize(&Bands { ll: band, h, v, d }, side);
    }
    Ok(band.into_vec())
}

/// Applies [`haar_forward`] to every row of a 784-column dataset and attaches
/// the 13-group wavelet partition.
pub fn haar_dataset(images: &Dataset) -> Result<Dataset> {
    if images.p() != SIDE * SIDE {
        return Err(Error::dims(format!(
            "wavelet features need 28×28 images, dataset has {} columns",
            images.p()
        )));
    }
    let mut data = Vec::with_capacity(images.n() * NUM_COEFFS);
    for r in 0..images.n() {
        data.extend(haar_forward(images.x().row(r))?);
    }
    let x = Matrix::from_vec(images.n(), NUM_COEFFS, data)?;
    let ds = Dataset::new(x, images.y().to_vec(), images.num_classes(), WaveletLayout::partition())?;
    ds.with_feature_names(feature_names())
}

fn feature_names() -> Vec<String> {
    WaveletLayout::group_names()
        .iter()
        .zip(WaveletLayout::GROUP_SIZES)
        .flat_map(|(name, size)| (0..size).map(move |j| format!("{name}[{j}]")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..SIDE * SIDE)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect()
    }

    #[test]
    fn layout_arithmetic() {
        assert_eq!(WaveletLayout::GROUP_SIZES.iter().sum::<usize>(), NUM_COEFFS);
        assert_eq!(4 + 3 * (4 + 16 + 49 + 196), 799);
        let part = WaveletLayout::partition();
        assert_eq!(part.k(), 13);
        assert_eq!(part.name(0), "approx");
        assert_eq!(part.name(12), "L4-D");
        assert_eq!(WaveletLayout::level_of(0), None);
        assert_eq!(WaveletLayout::level_of(1), Some(1));
        assert_eq!(WaveletLayout::level_of(10), Some(4));
    }

    #[test]
    fn constant_image_has_no_detail() {
        let c = haar_forward(&vec![0.5; SIDE * SIDE]).unwrap();
        assert_eq!(c.len(), 799);
        // four averaging steps, each scaling a constant by 2
        assert_eq!(&c[..4], &[8.0; 4]);
        assert!(c[4..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_trip_exact() {
        for seed in 0..5 {
            let x = image(seed);
            let back = inverse_haar(&haar_forward(&x).unwrap()).unwrap();
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "seed {seed}: {err}");
        }
    }

    #[test]
    fn zero_coefficients_give_zero_image() {
        assert!(inverse_haar(&vec![0.0; 799]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dropping_finest_level_is_two_by_two_block_mean() {
        let x = image(42);
        let mut c = haar_forward(&x).unwrap();
        let start = 799 - 3 * 196;
        c[start..].fill(0.0);
        let smooth = inverse_haar(&c).unwrap();
        for r in 0..SIDE {
            for col in 0..SIDE {
                let (r0, c0) = (r - r % 2, col - col % 2);
                let mean =
                    (x[r0 * SIDE + c0] + x[r0 * SIDE + c0 + 1] + x[(r0 + 1) * SIDE + c0] + x[(r0 + 1) * SIDE + c0 + 1])
                        / 4.0;
                assert!((smooth[r * SIDE + col] - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_lengths() {
        assert!(haar_forward(&[0.0; 10]).is_err());
        assert!(inverse_haar(&[0.0; 798]).is_err());
    }
}
