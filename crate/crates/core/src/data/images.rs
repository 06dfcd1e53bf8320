//! Image preparation: block-mean downsampling and angle embedding.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::idx::IdxImages;
use crate::error::{domain, Result};
use crate::groups::Embedding;
use crate::simcore::StateVector;
use crate::Real;

/// Downsampled image with a binary label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSample {
    /// Row-major pixels in `[0, 1]`.
    pub pixels: Vec<f64>,
    pub label: u8,
}

/// Mean over disjoint `(rows/out_rows) × (cols/out_cols)` blocks.
pub fn downsample(
    image: &[f64],
    rows: usize,
    cols: usize,
    out_rows: usize,
    out_cols: usize,
) -> Result<Vec<f64>> {
    if image.len() != rows * cols {
        return domain(format!("{} pixels for a {rows}×{cols} image", image.len()));
    }
    if out_rows == 0
        || out_cols == 0
        || !rows.is_multiple_of(out_rows)
        || !cols.is_multiple_of(out_cols)
    {
        return domain(format!(
            "{rows}×{cols} does not tile into {out_rows}×{out_cols} blocks"
        ));
    }
    let (bh, bw) = (rows / out_rows, cols / out_cols);
    let scale = 1.0 / (bh * bw) as f64;
    let mut out = vec![0.0; out_rows * out_cols];
    for r in 0..rows {
        for c in 0..cols {
            out[(r / bh) * out_cols + c / bw] += image[r * cols + c];
        }
    }
    out.iter_mut().for_each(|x| *x *= scale);
    Ok(out)
}

/// 28×28 → 4×4 by 7×7 block means.
pub fn downsample_4x4(image: &[f64]) -> Result<Vec<f64>> {
    downsample(image, 28, 28, 4, 4)
}

/// `⊗_q RY(π·p_q)|0⟩` where `p_q` is the pixel the embedding sends to qubit `q`.
pub fn angle_embed<T: Real>(pixels: &[f64], embedding: &Embedding) -> Result<StateVector<T>> {
    if pixels.len() != embedding.n_qubits() {
        return domain(format!(
            "{} pixels for a {}-qubit embedding",
            pixels.len(),
            embedding.n_qubits()
        ));
    }
    if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return domain(format!("pixel value {p} outside [0, 1]"));
    }
    let mut per_qubit = vec![[Complex::new(T::zero(), T::zero()); 2]; pixels.len()];
    for (pixel, &q) in embedding.pixel_to_qubit.iter().enumerate() {
        let half = T::of(std::f64::consts::PI * pixels[pixel] / 2.0);
        per_qubit[q] = [
            Complex::new(half.cos(), T::zero()),
            Complex::new(half.sin(), T::zero()),
        ];
    }
    Ok(StateVector::product(&per_qubit))
}

/// Images of classes `negative` (label 0) and `positive` (label 1),
/// downsampled to `out × out`, in file order, keeping the first
/// `per_class` of each class.
pub fn binary_image_samples(
    set: &IdxImages,
    negative: u8,
    positive: u8,
    out: usize,
    per_class: Option<usize>,
) -> Result<Vec<ImageSample>> {
    let mut samples = Vec::new();
    let mut counts = [0usize; 2];
    for i in 0..set.len() {
        let label = match set.labels[i] {
            l if l == negative => 0,
            l if l == positive => 1,
            _ => continue,
        };
        if per_class.is_some_and(|l| counts[label as usize] >= l) {
            continue;
        }
        counts[label as usize] += 1;
        samples.push(ImageSample {
            pixels: downsample(&set.image(i), set.rows, set.cols, out, out)?,
            label,
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_images() {
        assert_eq!(downsample_4x4(&[0.0; 784]).unwrap(), vec![0.0; 16]);
        assert!(downsample_4x4(&[1.0; 784])
            .unwrap()
            .iter()
            .all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn one_block_of_ones() {
        let mut img = vec![0.0; 784];
        for r in 7..14 {
            for c in 21..28 {
                img[r * 28 + c] = 1.0;
            }
        }
        let d = downsample_4x4(&img).unwrap();
        for (i, x) in d.iter().enumerate() {
            let want = if i == 4 + 3 { 1.0 } else { 0.0 };
            assert!((x - want).abs() < 1e-15);
        }
        assert!(downsample(&img, 28, 28, 5, 5).is_err());
    }

    #[test]
    fn embedding_extremes() {
        let e = Embedding::row_major(4, 4);
        let zero = angle_embed::<f64>(&[0.0; 16], &e).unwrap();
        assert!((zero.amplitudes()[0].re - 1.0).abs() < 1e-15);
        let one = angle_embed::<f64>(&[1.0; 16], &e).unwrap();
        assert!((one.amplitudes()[0xFFFF].norm() - 1.0).abs() < 1e-12);
        assert!(angle_embed::<f64>(&[1.5; 16], &e).is_err());
        assert!(angle_embed::<f64>(&[0.5; 4], &e).is_err());
    }

    #[test]
    fn embedding_follows_pixel_to_qubit() {
        // single bright pixel lands on the qubit the embedding names
        let e = Embedding::mirror_symmetric(4, 4).unwrap();
        let mut px = vec![0.0; 16];
        px[2] = 1.0; // row 0, column 2
        let s = angle_embed::<f64>(&px, &e).unwrap();
        let z = s.z_expectations();
        let q = e.qubit_of(0, 2);
        assert_eq!(q, 11);
        for (i, v) in z.iter().enumerate() {
            assert!((v - if i == q { -1.0 } else { 1.0 }).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_selection() {
        let set = IdxImages {
            rows: 4,
            cols: 4,
            pixels: (0..80).map(|i| (i * 3) as u8).collect(),
            labels: vec![8, 3, 8, 0, 0],
        };
        let s = binary_image_samples(&set, 0, 8, 2, None).unwrap();
        assert_eq!(
            s.iter().map(|x| x.label).collect::<Vec<_>>(),
            vec![1, 1, 0, 0]
        );
        assert_eq!(s[0].pixels.len(), 4);
        let one_each = binary_image_samples(&set, 0, 8, 2, Some(1)).unwrap();
        assert_eq!(
            one_each.iter().map(|x| x.label).collect::<Vec<_>>(),
            vec![1, 0]
        );
        assert_eq!(one_each[1], s[2]);
    }
}
