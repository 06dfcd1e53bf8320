//! IDX (big-endian magic, dimensions, raw bytes) reader.

use std::path::Path;

use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Raw 8-bit images, stored flat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl IdxImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn raw(&self, i: usize) -> &[u8] {
        let sz = self.rows * self.cols;
        &self.pixels[i * sz..(i + 1) * sz]
    }

    /// Image `i` scaled into `[0, 1]` by `1/255`.
    pub fn image(&self, i: usize) -> Vec<f64> {
        self.raw(i).iter().map(|&b| f64::from(b) / 255.0).collect()
    }
}

fn parse_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        msg: msg.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| {
            parse_err(
                bytes.len(),
                format!("truncated header, needed 4 bytes at {offset}"),
            )
        })
}

fn check_magic(bytes: &[u8], want: u32) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != want {
        return Err(parse_err(
            0,
            format!("bad magic 0x{magic:08x}, expected 0x{want:08x}"),
        ));
    }
    Ok(())
}

/// Returns `(rows, cols, pixel bytes)` of an image file.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let need = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(parse_err(
            bytes.len(),
            format!(
                "truncated: {count} images of {rows}×{cols} need {need} bytes, found {}",
                body.len()
            ),
        ));
    }
    if body.len() > need {
        return Err(parse_err(16 + need, "trailing bytes after last image"));
    }
    Ok((rows, cols, body.to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(parse_err(
            bytes.len(),
            format!("truncated: {count} labels, found {}", body.len()),
        ));
    }
    if body.len() > count {
        return Err(parse_err(8 + count, "trailing bytes after last label"));
    }
    Ok(body.to_vec())
}

/// Reads a matching image/label file pair.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<IdxImages> {
    let (rows, cols, pixels) = parse_idx_images(&std::fs::read(images_path)?)?;
    let labels = parse_idx_labels(&std::fs::read(labels_path)?)?;
    let n_images = pixels.len().checked_div(rows * cols).unwrap_or(0);
    if n_images != labels.len() {
        return Err(parse_err(
            4,
            format!("{n_images} images but {} labels", labels.len()),
        ));
    }
    Ok(IdxImages {
        rows,
        cols,
        pixels,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images_file(count: u32, rows: u32, cols: u32, body: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for x in [IMAGES_MAGIC, count, rows, cols] {
            v.extend(x.to_be_bytes());
        }
        v.extend_from_slice(body);
        v
    }

    fn labels_file(count: u32, body: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for x in [LABELS_MAGIC, count] {
            v.extend(x.to_be_bytes());
        }
        v.extend_from_slice(body);
        v
    }

    #[test]
    fn parses_small_files() {
        let (r, c, px) = parse_idx_images(&images_file(2, 1, 2, &[0, 255, 1, 2])).unwrap();
        assert_eq!((r, c), (1, 2));
        assert_eq!(px, vec![0, 255, 1, 2]);
        assert_eq!(
            parse_idx_labels(&labels_file(2, &[3, 4])).unwrap(),
            vec![3, 4]
        );
    }

    #[test]
    fn byte_255_scales_to_one() {
        let set = IdxImages {
            rows: 1,
            cols: 2,
            pixels: vec![255, 0],
            labels: vec![1],
        };
        assert_eq!(set.image(0), vec![1.0, 0.0]);
    }

    #[test]
    fn bad_magic_reports_offset_zero() {
        let mut f = images_file(1, 1, 1, &[0]);
        f[3] = 0x01;
        match parse_idx_images(&f) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("{other:?}"),
        }
        assert!(parse_idx_labels(&images_file(1, 1, 1, &[0])).is_err());
    }

    #[test]
    fn truncation_reports_file_end() {
        let f = images_file(2, 2, 2, &[0; 5]);
        match parse_idx_images(&f) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, f.len()),
            other => panic!("{other:?}"),
        }
        assert!(parse_idx_images(&f[..10]).is_err());
        assert!(parse_idx_labels(&labels_file(3, &[1])).is_err());
    }

    #[test]
    fn count_mismatch_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("i");
        let lp = dir.path().join("l");
        std::fs::write(&ip, images_file(2, 1, 1, &[0, 1])).unwrap();
        std::fs::write(&lp, labels_file(3, &[0, 1, 2])).unwrap();
        assert!(matches!(load_idx(&ip, &lp), Err(Error::Parse { .. })));
        std::fs::write(&lp, labels_file(2, &[0, 1])).unwrap();
        assert_eq!(load_idx(&ip, &lp).unwrap().len(), 2);
    }
}
