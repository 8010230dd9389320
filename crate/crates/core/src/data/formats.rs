//! Readers for IDX (MNIST), CIFAR-10 binary batches and labeled CSV.

use std::path::Path;

use thiserror::Error;

use crate::error::Result;
use crate::numerics::Vector;

use super::LabeledPoint;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("input of {found} bytes is shorter than the {needed}-byte header")]
    TruncatedHeader { needed: usize, found: usize },
    #[error("unsupported IDX magic number {0:#010x}")]
    BadMagic(u32),
    #[error("IDX dimensions overflow the address space")]
    DimensionOverflow,
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{extra} trailing bytes after the payload")]
    TrailingBytes { extra: usize },
    #[error("CIFAR-10 batch length {0} is not a positive multiple of 3073")]
    RecordLength(usize),
    #[error("label {label} in record {record} is outside 0..=9")]
    LabelOutOfRange { label: u8, record: usize },
    #[error("image file holds {images} items but label file holds {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("expected a {expected}-D IDX file, found {found}-D")]
    Rank { expected: usize, found: usize },
    #[error("CSV line {line}: {message}")]
    Csv { line: u64, message: String },
}

/// An IDX tensor of unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub shape: Vec<usize>,
    pub data: Vec<u8>,
}

/// Parses an IDX container: magic `00 00 08 01` (1-D) or `00 00 08 03`
/// (3-D), big-endian `u32` sizes, then exactly `∏ sizes` payload bytes.
pub fn load_idx(bytes: &[u8]) -> std::result::Result<IdxTensor, ParseError> {
    if bytes.len() < 4 {
        return Err(ParseError::TruncatedHeader {
            needed: 4,
            found: bytes.len(),
        });
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let rank = match magic {
        0x0000_0801 => 1,
        0x0000_0803 => 3,
        other => return Err(ParseError::BadMagic(other)),
    };
    let header = 4 + 4 * rank;
    if bytes.len() < header {
        return Err(ParseError::TruncatedHeader {
            needed: header,
            found: bytes.len(),
        });
    }
    let shape: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let expected = shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or(ParseError::DimensionOverflow)?;
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(ParseError::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(ParseError::TrailingBytes {
            extra: payload.len() - expected,
        });
    }
    Ok(IdxTensor {
        shape,
        data: payload.to_vec(),
    })
}

fn pixels(raw: &[u8], scale: bool) -> Vector {
    let f = if scale { 1.0 / 255.0 } else { 1.0 };
    Vector::new(raw.iter().map(|&b| b as f64 * f).collect()).expect("finite pixels")
}

/// Pairs an IDX image tensor with its IDX label vector.
pub fn idx_points(images: &IdxTensor, labels: &IdxTensor, scale: bool) -> std::result::Result<Vec<LabeledPoint>, ParseError> {
    if images.shape.len() != 3 {
        return Err(ParseError::Rank {
            expected: 3,
            found: images.shape.len(),
        });
    }
    if labels.shape.len() != 1 {
        return Err(ParseError::Rank {
            expected: 1,
            found: labels.shape.len(),
        });
    }
    let (n, pix) = (images.shape[0], images.shape[1] * images.shape[2]);
    if n != labels.shape[0] {
        return Err(ParseError::CountMismatch {
            images: n,
            labels: labels.shape[0],
        });
    }
    if pix == 0 {
        return Err(ParseError::DimensionOverflow);
    }
    Ok(images
        .data
        .chunks_exact(pix)
        .zip(&labels.data)
        .map(|(img, &y)| LabeledPoint::new(pixels(img, scale), y))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnistSplit {
    Train,
    Test,
}

impl MnistSplit {
    pub fn file_names(self) -> (&'static str, &'static str) {
        match self {
            MnistSplit::Train => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
            MnistSplit::Test => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        }
    }
}

/// Reads one MNIST split from `dir` using the standard uncompressed file names.
pub fn load_mnist(dir: &Path, split: MnistSplit, scale: bool) -> Result<Vec<LabeledPoint>> {
    let (img, lab) = split.file_names();
    let images = load_idx(&std::fs::read(dir.join(img))?)?;
    let labels = load_idx(&std::fs::read(dir.join(lab))?)?;
    Ok(idx_points(&images, &labels, scale)?)
}

pub const CIFAR10_RECORD_LEN: usize = 1 + 3072;

/// Parses a CIFAR-10 binary batch: records of one label byte and 3072
/// pixel bytes. Pixels are divided by 255 when `scale` is set.
pub fn load_cifar10_batch(bytes: &[u8], scale: bool) -> std::result::Result<Vec<LabeledPoint>, ParseError> {
    if bytes.is_empty() || bytes.len() % CIFAR10_RECORD_LEN != 0 {
        return Err(ParseError::RecordLength(bytes.len()));
    }
    bytes
        .chunks_exact(CIFAR10_RECORD_LEN)
        .enumerate()
        .map(|(record, r)| {
            if r[0] > 9 {
                return Err(ParseError::LabelOutOfRange { label: r[0], record });
            }
            Ok(LabeledPoint::new(pixels(&r[1..], scale), r[0]))
        })
        .collect()
}

/// Reads labeled CSV: a header row, numeric feature columns, and a final
/// integer label column. Lines starting with `#` are skipped.
pub fn load_csv<R: std::io::Read>(reader: R) -> std::result::Result<Vec<LabeledPoint>, ParseError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    let mut width = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ParseError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |message: String| ParseError::Csv { line, message };
        if rec.len() < 2 {
            return Err(err("need at least one feature and a label".into()));
        }
        if *width.get_or_insert(rec.len()) != rec.len() {
            return Err(err(format!("expected {} fields, found {}", width.unwrap(), rec.len())));
        }
        let label: u8 = rec[rec.len() - 1].parse().map_err(|_| err(format!("bad label `{}`", &rec[rec.len() - 1])))?;
        let features = rec
            .iter()
            .take(rec.len() - 1)
            .map(|f| match f.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(err(format!("bad feature `{f}`"))),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        out.push(LabeledPoint::new(Vector::new(features).expect("checked finite"), label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngState;

    fn idx3(n: u32, r: u32, c: u32, payload: &[u8]) -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3];
        for x in [n, r, c] {
            b.extend_from_slice(&x.to_be_bytes());
        }
        b.extend_from_slice(payload);
        b
    }

    #[test]
    fn idx_fixture_round_trip() {
        let payload = [0u8, 1, 2, 3, 250, 251, 252, 255];
        let t = load_idx(&idx3(2, 2, 2, &payload)).unwrap();
        assert_eq!(t.shape, vec![2, 2, 2]);
        assert_eq!(t.data, payload);
        let labels = load_idx(&[0, 0, 8, 1, 0, 0, 0, 2, 7, 3]).unwrap();
        assert_eq!((labels.shape.clone(), labels.data.clone()), (vec![2], vec![7, 3]));
        let pts = idx_points(&t, &labels, false).unwrap();
        assert_eq!(pts[1].zeta.as_slice(), &[250.0, 251.0, 252.0, 255.0]);
        assert_eq!(pts[1].y, 3);
        let scaled = idx_points(&t, &labels, true).unwrap();
        assert_eq!(scaled[1].zeta[3], 1.0);
    }

    #[test]
    fn idx_rejections() {
        let mut bad = idx3(2, 2, 2, &[0; 8]);
        bad[3] = 2;
        assert_eq!(load_idx(&bad), Err(ParseError::BadMagic(0x0802)));
        assert!(matches!(load_idx(&idx3(2, 2, 2, &[0; 7])), Err(ParseError::TruncatedPayload { expected: 8, found: 7 })));
        assert!(matches!(load_idx(&idx3(2, 2, 2, &[0; 9])), Err(ParseError::TrailingBytes { extra: 1 })));
        assert!(matches!(load_idx(&[0, 0, 8]), Err(ParseError::TruncatedHeader { .. })));
        assert!(matches!(load_idx(&[0, 0, 8, 3, 0, 0]), Err(ParseError::TruncatedHeader { .. })));
        let huge = idx3(u32::MAX, u32::MAX, u32::MAX, &[]);
        assert_eq!(load_idx(&huge), Err(ParseError::DimensionOverflow));
        let t = load_idx(&idx3(2, 1, 1, &[0, 0])).unwrap();
        let l = load_idx(&[0, 0, 8, 1, 0, 0, 0, 3, 1, 1, 1]).unwrap();
        assert!(matches!(idx_points(&t, &l, true), Err(ParseError::CountMismatch { .. })));
    }

    #[test]
    fn cifar_fixtures() {
        let zero = load_cifar10_batch(&[0u8; CIFAR10_RECORD_LEN], true).unwrap();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero[0].y, 0);
        assert!(zero[0].zeta.is_zero());
        assert_eq!(load_cifar10_batch(&[0u8; 3072], true), Err(ParseError::RecordLength(3072)));

        let mut two = vec![0u8; 2 * CIFAR10_RECORD_LEN];
        two[0] = 6;
        two[1] = 17;
        two[CIFAR10_RECORD_LEN - 1] = 200;
        two[CIFAR10_RECORD_LEN] = 9;
        two[CIFAR10_RECORD_LEN + 1] = 255;
        two[2 * CIFAR10_RECORD_LEN - 1] = 1;
        let pts = load_cifar10_batch(&two, false).unwrap();
        assert_eq!((pts[0].y, pts[1].y), (6, 9));
        assert_eq!((pts[0].zeta[0], pts[0].zeta[3071]), (17.0, 200.0));
        assert_eq!((pts[1].zeta[0], pts[1].zeta[3071]), (255.0, 1.0));
        let scaled = load_cifar10_batch(&two, true).unwrap();
        assert_eq!(scaled[1].zeta[0], 1.0);
        two[CIFAR10_RECORD_LEN] = 10;
        assert_eq!(
            load_cifar10_batch(&two, true),
            Err(ParseError::LabelOutOfRange { label: 10, record: 1 })
        );
    }

    #[test]
    fn csv_reader() {
        let text = "x1,x2,label\n# comment\n1.5,-2,1\n0, 3e-1 ,0\n";
        let pts = load_csv(text.as_bytes()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].zeta.as_slice(), &[1.5, -2.0]);
        assert_eq!(pts[1].y, 0);
        assert_eq!(pts[1].zeta[1], 0.3);
        assert!(load_csv("a,b\n1,x\n".as_bytes()).is_err());
        assert!(load_csv("a,b\n1,1.5\n".as_bytes()).is_err());
        assert!(load_csv("a,b,c\n1,2,0\n1,0\n".as_bytes()).is_err());
        assert!(load_csv("a,b\nNaN,0\n".as_bytes()).is_err());
    }

    #[test]
    fn parsers_are_total_on_random_bytes() {
        let mut rng = RngState::new(10, 0).rng();
        for i in 0..10_000 {
            let len = rng.index(64);
            let mut bytes: Vec<u8> = (0..len).map(|_| rng.next_u64() as u8).collect();
            if i % 2 == 0 && bytes.len() >= 4 {
                bytes[..4].copy_from_slice(&[0, 0, 8, if i % 4 == 0 { 1 } else { 3 }]);
            }
            let _ = load_idx(&bytes);
            let _ = load_cifar10_batch(&bytes, true);
            let _ = load_csv(bytes.as_slice());
        }
    }
}
