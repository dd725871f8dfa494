//! MNIST (IDX) and CIFAR-100 (binary) loaders, stratified subsetting, one-hot
//! targets, and per-epoch batch plans.
//!
//! Pixels are scaled by 1/255 with no centering. IDX files may be gzip
//! compressed; compression is detected from the leading `1f 8b` bytes.

use std::io::Read;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, SeededRng};
use crate::tensor::Matrix;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const MNIST_CLASSES: usize = 10;

pub const CIFAR_PIXELS: usize = 3072;
pub const CIFAR_RECORD: usize = 2 + CIFAR_PIXELS;
pub const CIFAR100_CLASSES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    pub images: Matrix,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub pixel_dim: usize,
}

impl LabeledImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> LabeledImages {
        LabeledImages {
            images: self.images.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            pixel_dim: self.pixel_dim,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    maybe_gunzip(path, raw)
}

fn maybe_gunzip(path: &Path, raw: Vec<u8>) -> Result<Vec<u8>> {
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            expected: offset + 4,
            actual: bytes.len(),
        })
}

fn expect_len(bytes: &[u8], expected: usize, path: &Path) -> Result<()> {
    match bytes.len().cmp(&expected) {
        std::cmp::Ordering::Less => Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len(),
        }),
        std::cmp::Ordering::Greater => Err(Error::TrailingBytes {
            path: path.to_path_buf(),
            extra: bytes.len() - expected,
        }),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

fn scale_pixels(bytes: &[u8]) -> Vec<f64> {
    bytes.iter().map(|&b| f64::from(b) / 255.0).collect()
}

/// Parses in-memory IDX image and label containers. `images_path` and
/// `labels_path` only label errors.
pub fn parse_idx(images: &[u8], labels: &[u8], images_path: &Path, labels_path: &Path) -> Result<LabeledImages> {
    check_magic(images, IDX_IMAGES_MAGIC, images_path)?;
    let count = be_u32(images, 4, images_path)? as usize;
    let rows = be_u32(images, 8, images_path)? as usize;
    let cols = be_u32(images, 12, images_path)? as usize;

    check_magic(labels, IDX_LABELS_MAGIC, labels_path)?;
    let label_count = be_u32(labels, 4, labels_path)? as usize;
    if label_count != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: label_count,
        });
    }

    let pixel_dim = rows.checked_mul(cols);
    let body = pixel_dim.and_then(|p| p.checked_mul(count));
    let (pixel_dim, body) = match (pixel_dim, body) {
        (Some(p), Some(b)) if b <= isize::MAX as usize - 16 => (p, b),
        _ => {
            return Err(Error::Truncated {
                path: images_path.to_path_buf(),
                expected: usize::MAX,
                actual: images.len(),
            })
        }
    };
    expect_len(images, 16 + body, images_path)?;
    expect_len(labels, 8 + count, labels_path)?;

    let labels: Vec<usize> = labels[8..].iter().map(|&b| b as usize).collect();
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= MNIST_CLASSES) {
        return Err(Error::LabelOutOfRange {
            path: labels_path.to_path_buf(),
            index,
            label,
            class_count: MNIST_CLASSES,
        });
    }
    Ok(LabeledImages {
        images: Matrix::from_parts(count, pixel_dim, scale_pixels(&images[16..])),
        labels,
        class_count: MNIST_CLASSES,
        pixel_dim,
    })
}

pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledImages> {
    let images = read_bytes(images_path)?;
    let labels = read_bytes(labels_path)?;
    parse_idx(&images, &labels, images_path, labels_path)
}

/// Parses CIFAR-100 binary records: coarse label, fine label, 3072 pixels
/// (channel-major 3x32x32). The fine label is the class.
pub fn parse_cifar100(bytes: &[u8], path: &Path) -> Result<LabeledImages> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(Error::RecordLength {
            path: path.to_path_buf(),
            len: bytes.len(),
            record: CIFAR_RECORD,
        });
    }
    let count = bytes.len() / CIFAR_RECORD;
    let mut labels = Vec::with_capacity(count);
    let mut pixels = Vec::with_capacity(count * CIFAR_PIXELS);
    for (index, record) in bytes.chunks_exact(CIFAR_RECORD).enumerate() {
        let fine = record[1] as usize;
        if fine >= CIFAR100_CLASSES {
            return Err(Error::LabelOutOfRange {
                path: path.to_path_buf(),
                index,
                label: fine,
                class_count: CIFAR100_CLASSES,
            });
        }
        labels.push(fine);
        pixels.extend(record[2..].iter().map(|&b| f64::from(b) / 255.0));
    }
    Ok(LabeledImages {
        images: Matrix::from_parts(count, CIFAR_PIXELS, pixels),
        labels,
        class_count: CIFAR100_CLASSES,
        pixel_dim: CIFAR_PIXELS,
    })
}

pub fn load_cifar100(path: &Path) -> Result<LabeledImages> {
    let bytes = read_bytes(path)?;
    parse_cifar100(&bytes, path)
}

/// Takes `min(per_class, available)` samples of every class, chosen and then
/// ordered by `seed`.
pub fn subset(data: &LabeledImages, per_class: NonZeroUsize, seed: u64) -> LabeledImages {
    let mut rng = SeededRng::with_stream(seed, stream::SUBSET);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.class_count];
    for (i, &l) in data.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut chosen = Vec::new();
    for members in &mut by_class {
        rng.shuffle(members);
        chosen.extend(members.iter().take(per_class.get()));
    }
    rng.shuffle(&mut chosen);
    data.select(&chosen)
}

pub fn one_hot(labels: &[usize], class_count: usize) -> Result<Matrix> {
    let mut out = Matrix::zeros(labels.len(), class_count);
    for (r, &l) in labels.iter().enumerate() {
        if l >= class_count {
            return Err(Error::LabelOutOfRange {
                path: PathBuf::new(),
                index: r,
                label: l,
                class_count,
            });
        }
        out.set(r, l, 1.0);
    }
    Ok(out)
}

/// Shuffled mini-batch schedule for one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub order: Vec<usize>,
    pub drop_last: bool,
}

impl BatchPlan {
    /// The order depends only on `(seed, epoch)` and the sample count.
    pub fn new(count: usize, batch_size: NonZeroUsize, seed: u64, epoch: u64, drop_last: bool) -> Self {
        let mut rng = SeededRng::new(derive_seed(derive_seed(seed, stream::SHUFFLE), epoch));
        Self {
            batch_size: batch_size.get(),
            order: rng.permutation(count),
            drop_last,
        }
    }

    pub fn batches(&self) -> impl Iterator<Item = &[usize]> {
        let size = self.batch_size;
        let drop_last = self.drop_last;
        self.order.chunks(size).filter(move |c| !drop_last || c.len() == size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_images(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for w in [IDX_IMAGES_MAGIC, count, rows, cols] {
            v.extend_from_slice(&w.to_be_bytes());
        }
        v.extend_from_slice(pixels);
        v
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        v.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        v.extend_from_slice(labels);
        v
    }

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn single_blank_image() {
        let d = parse_idx(&idx_images(1, 28, 28, &[0; 784]), &idx_labels(&[7]), p(), p()).unwrap();
        assert_eq!(d.images.shape(), (1, 784));
        assert!(d.images.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(d.labels, vec![7]);
        assert_eq!(d.pixel_dim, 784);
    }

    #[test]
    fn white_pixel_maps_to_one() {
        let d = parse_idx(&idx_images(1, 1, 2, &[255, 51]), &idx_labels(&[0]), p(), p()).unwrap();
        assert_eq!(d.images.as_slice(), &[1.0, 0.2]);
    }

    #[test]
    fn idx_errors_are_distinct() {
        let imgs = idx_images(5, 1, 1, &[0; 5]);
        let err = parse_idx(&imgs, &idx_labels(&[0; 4]), p(), p()).unwrap_err();
        assert!(matches!(err, Error::CountMismatch { images: 5, labels: 4 }));

        let mut bad = imgs.clone();
        bad[3] = 0x01;
        assert!(matches!(
            parse_idx(&bad, &idx_labels(&[0; 5]), p(), p()),
            Err(Error::BadMagic { .. })
        ));
        assert!(matches!(
            parse_idx(&imgs[..18], &idx_labels(&[0; 5]), p(), p()),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            parse_idx(&imgs, &idx_labels(&[0, 0, 10, 0, 0]), p(), p()),
            Err(Error::LabelOutOfRange { index: 2, .. })
        ));
        assert!(matches!(
            parse_idx(&imgs[..2], &idx_labels(&[0; 5]), p(), p()),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn huge_header_is_rejected() {
        let imgs = idx_images(u32::MAX, u32::MAX, u32::MAX, &[]);
        let labels = {
            let mut v = IDX_LABELS_MAGIC.to_be_bytes().to_vec();
            v.extend_from_slice(&u32::MAX.to_be_bytes());
            v
        };
        assert!(parse_idx(&imgs, &labels, p(), p()).is_err());
    }

    #[test]
    fn gzip_is_transparent() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let raw = idx_labels(&[1, 2, 3]);
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(&raw).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(maybe_gunzip(p(), gz).unwrap(), raw);
        assert!(maybe_gunzip(p(), vec![0x1f, 0x8b, 0, 0]).is_err());
    }

    #[test]
    fn cifar_records() {
        let mut rec = vec![3u8, 99];
        rec.extend(std::iter::repeat_n(255u8, CIFAR_PIXELS));
        let d = parse_cifar100(&rec, p()).unwrap();
        assert_eq!(d.labels, vec![99]);
        assert_eq!(d.class_count, 100);
        assert!(d.images.as_slice().iter().all(|&v| v == 1.0));

        rec[1] = 100;
        assert!(matches!(parse_cifar100(&rec, p()), Err(Error::LabelOutOfRange { .. })));
        assert!(matches!(
            parse_cifar100(&rec[..3073], p()),
            Err(Error::RecordLength { len: 3073, .. })
        ));
    }

    fn toy(per_class: &[usize]) -> LabeledImages {
        let labels: Vec<usize> = per_class
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        let n = labels.len();
        LabeledImages {
            images: Matrix::from_parts(n, 1, (0..n).map(|i| i as f64).collect()),
            labels,
            class_count: per_class.len(),
            pixel_dim: 1,
        }
    }

    #[test]
    fn subset_is_stratified_and_deterministic() {
        let data = toy(&[5, 3, 8]);
        let one = subset(&data, NonZeroUsize::new(1).unwrap(), 4);
        assert_eq!(one.class_counts(), vec![1, 1, 1]);
        let four = subset(&data, NonZeroUsize::new(4).unwrap(), 4);
        assert_eq!(four.class_counts(), vec![4, 3, 4]);
        assert_eq!(four, subset(&data, NonZeroUsize::new(4).unwrap(), 4));

        let all = subset(&data, NonZeroUsize::new(100).unwrap(), 9);
        assert_eq!(all.len(), data.len());
        let mut ids: Vec<u64> = all.images.as_slice().iter().map(|&v| v as u64).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn one_hot_rows() {
        let m = one_hot(&[3], 10).unwrap();
        assert_eq!(m.row(0).iter().position(|&v| v == 1.0), Some(3));
        assert_eq!(m.as_slice().iter().sum::<f64>(), 1.0);
        assert_eq!(one_hot(&[], 10).unwrap().shape(), (0, 10));
        assert!(one_hot(&[10], 10).is_err());
        let labels = [0, 9, 4, 4, 1];
        let m = one_hot(&labels, 10).unwrap();
        let back: Vec<usize> = (0..5).map(|r| crate::mlp::argmax(m.row(r)).unwrap()).collect();
        assert_eq!(back, labels);
    }

    #[test]
    fn batch_plan_covers_once() {
        let bs = NonZeroUsize::new(4).unwrap();
        let plan = BatchPlan::new(10, bs, 1, 0, false);
        assert_eq!(plan, BatchPlan::new(10, bs, 1, 0, false));
        assert_ne!(plan.order, BatchPlan::new(10, bs, 1, 1, false).order);
        let sizes: Vec<usize> = plan.batches().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        let mut seen: Vec<usize> = plan.batches().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        let dropped = BatchPlan::new(10, bs, 1, 0, true);
        assert_eq!(dropped.batches().count(), 2);
    }
}
