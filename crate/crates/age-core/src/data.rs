//! Synthetic benchmark datasets, dataset file I/O, and evaluation metrics.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Default radius a sample may sit from its mode center (in units of the
/// mode's standard deviation) and still count as high quality.
pub const HIGH_QUALITY_SIGMA: f64 = 3.0;

#[derive(Clone, Debug, Default)]
pub struct DatasetMeta {
    pub name: String,
    pub mode_centers: Option<Vec<Vec<f64>>>,
    pub mode_std: f64,
}

/// In-memory dataset: samples row-major, optional per-sample class labels.
#[derive(Debug)]
pub struct Dataset {
    pub samples: Tensor,
    pub labels: Option<Vec<usize>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn n_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1))
    }
}

/// Centers of an n-mode ring of radius `radius`.
pub fn ring_centers(n_modes: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..n_modes)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n_modes as f64;
            vec![radius * angle.cos(), radius * angle.sin()]
        })
        .collect()
}

/// Equal-count Gaussian blobs on a ring; the standard mode-collapse benchmark.
pub fn make_gaussian_ring(
    n_modes: usize,
    radius: f64,
    std: f64,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_modes < 1 {
        return Err(Error::invalid("ring needs at least one mode"));
    }
    if std <= 0.0 {
        return Err(Error::invalid("ring mode std must be positive"));
    }
    let centers = ring_centers(n_modes, radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    let per_mode = n / n_modes;
    let remainder = n % n_modes;
    for (k, center) in centers.iter().enumerate() {
        let count = per_mode + usize::from(k < remainder);
        for _ in 0..count {
            data.push(center[0] + std * rng.sample::<f64, _>(StandardNormal));
            data.push(center[1] + std * rng.sample::<f64, _>(StandardNormal));
            labels.push(k);
        }
    }
    Ok(Dataset {
        samples: Tensor::from_vec(n, 2, data)?,
        labels: Some(labels),
        meta: DatasetMeta {
            name: format!("ring{n_modes}"),
            mode_centers: Some(centers),
            mode_std: std,
        },
    })
}

/// Uniform samples over the black squares of a 4x4 checkerboard on [-2, 2]^2.
pub fn make_checkerboard(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let black: Vec<(usize, usize)> = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|(i, j)| (i + j) % 2 == 0)
        .collect();
    let mut data = Vec::with_capacity(n * 2);
    for _ in 0..n {
        let (i, j) = black[rng.gen_range(0..black.len())];
        data.push(-2.0 + i as f64 + rng.gen_range(0.0..1.0));
        data.push(-2.0 + j as f64 + rng.gen_range(0.0..1.0));
    }
    Ok(Dataset {
        samples: Tensor::from_vec(n, 2, data)?,
        labels: None,
        meta: DatasetMeta {
            name: "checkerboard".into(),
            mode_centers: None,
            mode_std: 0.0,
        },
    })
}

/// Every sample equals x0; degenerate target for collapse tests.
pub fn make_point_mass(x0: &[f64], n: usize) -> Result<Dataset> {
    if x0.is_empty() || n == 0 {
        return Err(Error::invalid("point mass needs a nonempty point and n >= 1"));
    }
    let mut data = Vec::with_capacity(n * x0.len());
    for _ in 0..n {
        data.extend_from_slice(x0);
    }
    Ok(Dataset {
        samples: Tensor::from_vec(n, x0.len(), data)?,
        labels: None,
        meta: DatasetMeta {
            name: "point_mass".into(),
            mode_centers: Some(vec![x0.to_vec()]),
            mode_std: 0.0,
        },
    })
}

/// Coverage report: a sample is high quality when it falls within
/// 3 sigma of its nearest center; a mode counts as covered once at least
/// `threshold` high-quality samples claim it.
pub fn mode_coverage(
    samples: &Tensor,
    centers: &[Vec<f64>],
    std: f64,
    threshold: usize,
) -> (usize, f64) {
    assert!(!centers.is_empty(), "mode_coverage needs at least one center");
    let dim = samples.cols();
    let data = samples.value();
    let n = samples.rows();
    let mut per_mode = vec![0usize; centers.len()];
    let mut high_quality = 0usize;
    for row in data.chunks(dim) {
        let (best, dist) = centers
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let d2: f64 = row.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum();
                (k, d2.sqrt())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if dist <= HIGH_QUALITY_SIGMA * std {
            high_quality += 1;
            per_mode[best] += 1;
        }
    }
    let covered = per_mode.iter().filter(|&&c| c >= threshold).count();
    let hq_fraction = if n == 0 { 0.0 } else { high_quality as f64 / n as f64 };
    (covered, hq_fraction)
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with header `x0,...,x{D-1}[,label]`, 17 significant digits, LF endings.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(&mut w, &ds.samples, ds.labels.as_deref())
}

pub fn write_csv(w: &mut impl Write, samples: &Tensor, labels: Option<&[usize]>) -> Result<()> {
    let dim = samples.cols();
    let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    writeln!(w, "{}", header.join(","))?;
    let data = samples.value();
    for (i, row) in data.chunks(dim).enumerate() {
        let mut fields: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        if let Some(labels) = labels {
            fields.push(labels[i].to_string());
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::CsvParse { line: 1, msg: "empty file, expected a header".into() }),
    };
    let columns: Vec<&str> = header.trim_end().split(',').collect();
    let has_label = columns.last() == Some(&"label");
    let dim = columns.len() - usize::from(has_label);
    if dim == 0 {
        return Err(Error::CsvParse { line: 1, msg: "header has no feature columns".into() });
    }
    for (j, name) in columns.iter().take(dim).enumerate() {
        if *name != format!("x{j}") {
            return Err(Error::CsvParse {
                line: 1,
                msg: format!("expected column x{j}, found {name:?}"),
            });
        }
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::CsvParse {
                line: line_no,
                msg: format!("expected {} fields, found {}", columns.len(), fields.len()),
            });
        }
        for field in &fields[..dim] {
            let v: f64 = field.parse().map_err(|_| Error::CsvParse {
                line: line_no,
                msg: format!("non-numeric cell {field:?}"),
            })?;
            data.push(v);
        }
        if has_label {
            let l: usize = fields[dim].parse().map_err(|_| Error::CsvParse {
                line: line_no,
                msg: format!("non-integer label {:?}", fields[dim]),
            })?;
            labels.push(l);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::CsvParse { line: 1, msg: "no data rows after the header".into() });
    }
    Ok(Dataset {
        samples: Tensor::from_vec(n, dim, data)?,
        labels: if has_label { Some(labels) } else { None },
        meta: DatasetMeta { name: "csv".into(), mode_centers: None, mode_std: 0.0 },
    })
}

/// Tiles samples (values in [-1, 1], H*W per row) into a binary P6 PPM,
/// row-major, mapping v to round(255 * (v+1) / 2) on all three channels.
pub fn render_raster_grid(
    samples: &Tensor,
    height: usize,
    width: usize,
    grid_cols: usize,
) -> Result<Vec<u8>> {
    let n = samples.rows();
    if n == 0 || grid_cols == 0 {
        return Err(Error::invalid("raster grid needs samples and grid_cols >= 1"));
    }
    if samples.cols() != height * width {
        return Err(Error::invalid(format!(
            "sample dimension {} does not match {}x{} raster",
            samples.cols(),
            height,
            width
        )));
    }
    let data = samples.value();
    if let Some(bad) = data.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("raster value {bad} outside [-1, 1]")));
    }
    let grid_rows = n.div_ceil(grid_cols);
    let (img_w, img_h) = (grid_cols * width, grid_rows * height);
    let mut img = vec![0u8; img_w * img_h * 3];
    for (idx, sample) in data.chunks(height * width).enumerate() {
        let (tile_r, tile_c) = (idx / grid_cols, idx % grid_cols);
        for r in 0..height {
            for c in 0..width {
                let v = sample[r * width + c];
                let byte = (255.0 * (v + 1.0) / 2.0 + 0.5).floor() as u8;
                let y = tile_r * height + r;
                let x = tile_c * width + c;
                let at = (y * img_w + x) * 3;
                img[at] = byte;
                img[at + 1] = byte;
                img[at + 2] = byte;
            }
        }
    }
    let mut out = format!("P6\n{img_w} {img_h}\n255\n").into_bytes();
    out.extend_from_slice(&img);
    Ok(out)
}

pub fn save_raster_grid(
    samples: &Tensor,
    height: usize,
    width: usize,
    grid_cols: usize,
    path: &Path,
) -> Result<()> {
    let bytes = render_raster_grid(samples, height, width, grid_cols)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_mode_means_and_label_histogram() {
        let ds = make_gaussian_ring(8, 2.0, 0.02, 8000, 5).unwrap();
        let centers = ds.meta.mode_centers.clone().unwrap();
        let labels = ds.labels.clone().unwrap();
        let data = ds.samples.value();
        let mut counts = vec![0usize; 8];
        let mut sums = vec![[0.0f64; 2]; 8];
        for (i, row) in data.chunks(2).enumerate() {
            let k = labels[i];
            counts[k] += 1;
            sums[k][0] += row[0];
            sums[k][1] += row[1];
        }
        assert_eq!(counts, vec![1000; 8]);
        for k in 0..8 {
            let mean = [sums[k][0] / 1000.0, sums[k][1] / 1000.0];
            assert!((mean[0] - centers[k][0]).abs() < 0.01);
            assert!((mean[1] - centers[k][1]).abs() < 0.01);
        }
    }

    #[test]
    fn single_mode_ring_is_a_blob_at_origin() {
        let ds = make_gaussian_ring(1, 0.0, 0.5, 500, 1).unwrap();
        let data = ds.samples.value();
        let mean_x: f64 = data.chunks(2).map(|r| r[0]).sum::<f64>() / 500.0;
        let mean_y: f64 = data.chunks(2).map(|r| r[1]).sum::<f64>() / 500.0;
        assert!(mean_x.abs() < 0.1 && mean_y.abs() < 0.1);
        assert_eq!(ds.meta.mode_centers.unwrap(), vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn generators_are_seed_deterministic_and_seed_sensitive() {
        let a = make_gaussian_ring(8, 2.0, 0.02, 100, 5).unwrap().samples.value();
        let b = make_gaussian_ring(8, 2.0, 0.02, 100, 5).unwrap().samples.value();
        let c = make_gaussian_ring(8, 2.0, 0.02, 100, 6).unwrap().samples.value();
        assert_eq!(a, b);
        assert_ne!(a[..20], c[..20]);
    }

    fn in_black_square(x: f64, y: f64) -> bool {
        if !(-2.0..2.0).contains(&x) || !(-2.0..2.0).contains(&y) {
            return false;
        }
        let i = (x + 2.0).floor() as i64;
        let j = (y + 2.0).floor() as i64;
        (i + j) % 2 == 0
    }

    #[test]
    fn checkerboard_membership_and_symmetry() {
        let ds = make_checkerboard(4000, 9).unwrap();
        let data = ds.samples.value();
        let inside = data.chunks(2).filter(|r| in_black_square(r[0], r[1])).count();
        assert!(inside as f64 / 4000.0 >= 0.99);
        let mean_x: f64 = data.chunks(2).map(|r| r[0]).sum::<f64>() / 4000.0;
        let mean_y: f64 = data.chunks(2).map(|r| r[1]).sum::<f64>() / 4000.0;
        assert!(mean_x.abs() < 0.05 && mean_y.abs() < 0.05);
    }

    #[test]
    fn point_mass_repeats_x0() {
        let ds = make_point_mass(&[1.5, -2.0], 7).unwrap();
        assert_eq!(ds.len(), 7);
        for row in ds.samples.value().chunks(2) {
            assert_eq!(row, &[1.5, -2.0]);
        }
    }

    #[test]
    fn coverage_of_the_dataset_itself() {
        let ds = make_gaussian_ring(8, 2.0, 0.02, 8000, 13).unwrap();
        let centers = ds.meta.mode_centers.clone().unwrap();
        let (covered, hq) = mode_coverage(&ds.samples, &centers, 0.02, 10);
        assert_eq!(covered, 8);
        // 3 sigma containment in 2-D is 1 - exp(-9/2) ~ 0.9889.
        assert!(hq > 0.97, "hq {hq}");
    }

    #[test]
    fn coverage_degenerate_cases() {
        let centers = ring_centers(8, 2.0);
        let one_center = Tensor::from_vec(100, 2, vec![2.0, 0.0].repeat(100)).unwrap();
        let (covered, _) = mode_coverage(&one_center, &centers, 0.02, 10);
        assert_eq!(covered, 1);

        let far = Tensor::from_vec(10, 2, vec![50.0; 20]).unwrap();
        let (covered, hq) = mode_coverage(&far, &centers, 0.02, 1);
        assert_eq!(covered, 0);
        assert_eq!(hq, 0.0);
    }

    #[test]
    fn coverage_is_permutation_invariant() {
        let ds = make_gaussian_ring(5, 2.0, 0.05, 500, 3).unwrap();
        let centers = ds.meta.mode_centers.clone().unwrap();
        let (c1, h1) = mode_coverage(&ds.samples, &centers, 0.05, 10);
        let mut data = ds.samples.value();
        data.rotate_left(2 * 123);
        let shuffled = Tensor::from_vec(500, 2, data).unwrap();
        let mut centers_r = centers.clone();
        centers_r.rotate_left(2);
        let (c2, h2) = mode_coverage(&shuffled, &centers_r, 0.05, 10);
        assert_eq!((c1, h1), (c2, h2));
    }

    #[test]
    fn csv_round_trip_bit_exact_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        let ds = make_gaussian_ring(3, 1.0, 0.3, 30, 77).unwrap();
        save_csv(&ds, &path).unwrap();
        let loaded = load_csv(&path).unwrap();
        assert_eq!(loaded.labels, ds.labels);
        for (a, b) in ds.samples.value().iter().zip(loaded.samples.value()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();

        let header_only = dir.path().join("header.csv");
        std::fs::write(&header_only, "x0,x1\n").unwrap();
        assert!(matches!(load_csv(&header_only), Err(Error::CsvParse { line: 1, .. })));

        let ragged = dir.path().join("ragged.csv");
        std::fs::write(&ragged, "x0,x1\n1.0,2.0\n3.0\n").unwrap();
        match load_csv(&ragged) {
            Err(Error::CsvParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }

        let non_numeric = dir.path().join("nan.csv");
        std::fs::write(&non_numeric, "x0,x1\n1.0,abc\n").unwrap();
        match load_csv(&non_numeric) {
            Err(Error::CsvParse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("abc"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ppm_value_mapping() {
        let tile = |v: f64| {
            let t = Tensor::from_vec(1, 4, vec![v; 4]).unwrap();
            render_raster_grid(&t, 2, 2, 1).unwrap()
        };
        let black = tile(-1.0);
        assert_eq!(&black[..11], b"P6\n2 2\n255\n");
        assert!(black[11..].iter().all(|&b| b == 0));
        let white = tile(1.0);
        assert!(white[11..].iter().all(|&b| b == 255));
        let gray = tile(0.0);
        assert!(gray[11..].iter().all(|&b| b == 128));
    }

    #[test]
    fn ppm_tiles_row_major() {
        // Two 1x1 samples in a 2-column grid: left tile then right tile.
        let t = Tensor::from_vec(2, 1, vec![-1.0, 1.0]).unwrap();
        let img = render_raster_grid(&t, 1, 1, 2).unwrap();
        assert_eq!(&img[..11], b"P6\n2 1\n255\n");
        assert_eq!(&img[11..], &[0, 0, 0, 255, 255, 255]);
    }

    #[test]
    fn ppm_rejects_out_of_range_and_mismatched_dims() {
        let t = Tensor::from_vec(1, 4, vec![2.0; 4]).unwrap();
        assert!(render_raster_grid(&t, 2, 2, 1).is_err());
        let t = Tensor::from_vec(1, 3, vec![0.0; 3]).unwrap();
        assert!(render_raster_grid(&t, 2, 2, 1).is_err());
    }
}
