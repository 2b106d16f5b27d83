//! Block compressed sensing of grayscale images in an 8x8 Haar basis.

use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::batch::SolverSpec;
use crate::error::{input, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::signal::{gen_matrix, stream, trial_seed};

pub const BLOCK: usize = 8;
pub const BLOCK_LEN: usize = BLOCK * BLOCK;
/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 120.0;

/// Row-major grayscale image with real-valued pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Dimension {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    fn check_blocks(&self) -> Result<()> {
        if !self.width.is_multiple_of(BLOCK)
            || !self.height.is_multiple_of(BLOCK)
            || self.pixels.is_empty()
        {
            return input(format!(
                "image is {}x{}; both sides must be positive multiples of {BLOCK}",
                self.width, self.height
            ));
        }
        Ok(())
    }

    pub fn block_count(&self) -> usize {
        (self.width / BLOCK) * (self.height / BLOCK)
    }

    /// Block `b` in raster order, as a row-major 64-vector.
    pub fn block(&self, b: usize) -> [f64; BLOCK_LEN] {
        let per_row = self.width / BLOCK;
        let (bx, by) = ((b % per_row) * BLOCK, (b / per_row) * BLOCK);
        let mut out = [0.0; BLOCK_LEN];
        for r in 0..BLOCK {
            for c in 0..BLOCK {
                out[r * BLOCK + c] = self.get(bx + c, by + r);
            }
        }
        out
    }

    pub fn set_block(&mut self, b: usize, values: &[f64; BLOCK_LEN]) {
        let per_row = self.width / BLOCK;
        let (bx, by) = ((b % per_row) * BLOCK, (b / per_row) * BLOCK);
        for r in 0..BLOCK {
            for c in 0..BLOCK {
                self.pixels[(by + r) * self.width + bx + c] = values[r * BLOCK + c];
            }
        }
    }

    pub fn clamped(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|p| p.clamp(0.0, 255.0)).collect(),
        }
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::Image(e.to_string()))?
            .to_luma8();
        let (w, h) = img.dimensions();
        Image::new(
            w as usize,
            h as usize,
            img.into_raw().into_iter().map(f64::from).collect(),
        )
    }

    /// Binary 8-bit PGM; pixels are rounded and clamped to `[0, 255]`.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let raw: Vec<u8> = self
            .pixels
            .iter()
            .map(|p| p.round().clamp(0.0, 255.0) as u8)
            .collect();
        let buf = image::GrayImage::from_raw(self.width as u32, self.height as u32, raw)
            .ok_or_else(|| Error::Image("pixel buffer size mismatch".into()))?;
        let file = std::fs::File::create(path)?;
        let encoder = image::codecs::pnm::PnmEncoder::new(std::io::BufWriter::new(file))
            .with_subtype(image::codecs::pnm::PnmSubtype::Graymap(
                image::codecs::pnm::SampleEncoding::Binary,
            ));
        buf.write_with_encoder(encoder)
            .map_err(|e| Error::Image(e.to_string()))
    }
}

/// Orthonormal 8-point Haar analysis matrix, full three-level decomposition.
/// Row 0 is the scaling function; rows follow coarse-to-fine order.
fn haar_matrix() -> &'static [[f64; BLOCK]; BLOCK] {
    static H: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    H.get_or_init(|| {
        let mut h = [[0.0; BLOCK]; BLOCK];
        h[0] = [1.0 / (BLOCK as f64).sqrt(); BLOCK];
        let mut row = 1;
        let mut width = BLOCK;
        // level with support `width`, shifted by multiples of `width`
        let mut supports = vec![];
        while width >= 2 {
            supports.push(width);
            width /= 2;
        }
        for w in supports {
            let amp = 1.0 / (w as f64).sqrt();
            for start in (0..BLOCK).step_by(w) {
                for i in 0..w {
                    h[row][start + i] = if i < w / 2 { amp } else { -amp };
                }
                row += 1;
            }
        }
        h
    })
}

/// 2D Haar coefficients `H B H^T` of a row-major 8x8 block, row-major.
pub fn haar2d(block: &[f64; BLOCK_LEN]) -> [f64; BLOCK_LEN] {
    let h = haar_matrix();
    let mut tmp = [0.0; BLOCK_LEN];
    // rows: tmp = B H^T
    for r in 0..BLOCK {
        for k in 0..BLOCK {
            tmp[r * BLOCK + k] = (0..BLOCK).map(|c| block[r * BLOCK + c] * h[k][c]).sum();
        }
    }
    let mut out = [0.0; BLOCK_LEN];
    for k in 0..BLOCK {
        for c in 0..BLOCK {
            out[k * BLOCK + c] = (0..BLOCK).map(|r| h[k][r] * tmp[r * BLOCK + c]).sum();
        }
    }
    out
}

/// Inverse of [`haar2d`]: `H^T C H`.
pub fn haar2d_inverse(coefficients: &[f64; BLOCK_LEN]) -> [f64; BLOCK_LEN] {
    let h = haar_matrix();
    let mut tmp = [0.0; BLOCK_LEN];
    for k in 0..BLOCK {
        for c in 0..BLOCK {
            tmp[k * BLOCK + c] = (0..BLOCK)
                .map(|j| coefficients[k * BLOCK + j] * h[j][c])
                .sum();
        }
    }
    let mut out = [0.0; BLOCK_LEN];
    for r in 0..BLOCK {
        for c in 0..BLOCK {
            out[r * BLOCK + c] = (0..BLOCK).map(|k| h[k][r] * tmp[k * BLOCK + c]).sum();
        }
    }
    out
}

/// Synthesis matrix: column `j` is the block of coefficient `j`.
pub fn haar_basis() -> Matrix {
    let mut psi = Matrix::zeros(BLOCK_LEN, BLOCK_LEN);
    for j in 0..BLOCK_LEN {
        let mut e = [0.0; BLOCK_LEN];
        e[j] = 1.0;
        psi.set_column(j, &Vector::from_row_slice(&haar2d_inverse(&e)));
    }
    psi
}

/// Indices of the `k` largest-magnitude entries, ties to the lower index.
fn top_k(coefficients: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..coefficients.len()).collect();
    order.sort_by(|&a, &b| {
        coefficients[b]
            .abs()
            .total_cmp(&coefficients[a].abs())
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Keeps the `k` largest Haar coefficients of every block.
pub fn sparsify_blocks(image: &Image, k: usize) -> Result<Image> {
    image.check_blocks()?;
    if k == 0 || k > BLOCK_LEN {
        return input(format!("K must lie in 1..={BLOCK_LEN}, got {k}"));
    }
    let mut out = image.clone();
    for b in 0..image.block_count() {
        let c = haar2d(&image.block(b));
        let mut kept = [0.0; BLOCK_LEN];
        for j in top_k(&c, k) {
            kept[j] = c[j];
        }
        out.set_block(b, &haar2d_inverse(&kept));
    }
    Ok(out)
}

/// Mean squared error over all pixels.
pub fn mse(reference: &Image, other: &Image) -> Result<f64> {
    if reference.width != other.width || reference.height != other.height {
        return input("images differ in size");
    }
    if reference.pixels.is_empty() {
        return input("empty image");
    }
    let sum: f64 = reference
        .pixels
        .iter()
        .zip(&other.pixels)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.pixels.len() as f64)
}

/// `10 log10(peak^2 / MSE)`, capped at [`PSNR_CAP`].
pub fn psnr(reference: &Image, other: &Image, peak: f64) -> Result<f64> {
    let e = mse(reference, other)?;
    if e == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (peak * peak / e).log10()).min(PSNR_CAP))
}

/// Options of a block recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSetup {
    /// Nonzero Haar coefficients per block.
    #[serde(rename = "K")]
    pub k: usize,
    /// Measurements per block.
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    /// Draw a fresh matrix for every block instead of sharing one.
    pub redraw_per_block: bool,
}

impl ImageSetup {
    pub fn new(k: usize, m: usize, seed: u64) -> Self {
        Self {
            k,
            m,
            seed,
            redraw_per_block: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecovery {
    pub solver: String,
    pub setup: ImageSetup,
    /// Clamped to `[0, 255]`.
    pub reconstruction: Image,
    /// Against the clamped reference, peak 255.
    pub psnr: f64,
    pub blocks: usize,
    /// Blocks whose solver returned an error; reconstructed as zero.
    pub failed_blocks: usize,
    /// Blocks whose solver stopped without meeting the residue test.
    pub unconverged_blocks: usize,
}

/// Recovers every block of `image` from `M` measurements `y = Phi b` by
/// solving for its Haar coefficients against the dictionary `Phi Psi`.
///
/// `image` should already be `K`-sparse per block (see [`sparsify_blocks`]);
/// it also serves as the PSNR reference.
pub fn recover_image(
    image: &Image,
    solver: &SolverSpec,
    setup: &ImageSetup,
) -> Result<ImageRecovery> {
    image.check_blocks()?;
    if setup.k == 0 || setup.m == 0 || setup.m > BLOCK_LEN || setup.k > setup.m {
        return input(format!(
            "need 1 <= K <= M <= {BLOCK_LEN}, got K={}, M={}",
            setup.k, setup.m
        ));
    }
    let psi = haar_basis();
    let shared = gen_matrix(setup.m, BLOCK_LEN, setup.seed)?.phi;
    let shared_dict = &shared * &psi;
    let mut out = image.clone();
    let (mut failed, mut unconverged) = (0, 0);
    for b in 0..image.block_count() {
        let own;
        let (phi, dict) = if setup.redraw_per_block {
            let phi = gen_matrix(setup.m, BLOCK_LEN, trial_seed(setup.seed, b as u64))?.phi;
            let dict = &phi * &psi;
            own = (phi, dict);
            (&own.0, &own.1)
        } else {
            (&shared, &shared_dict)
        };
        let block = Vector::from_row_slice(&image.block(b));
        let y = phi * block;
        let mut coefficients = [0.0; BLOCK_LEN];
        match solver.solve(dict, &y, setup.k) {
            Ok(r) => {
                if r.reason != crate::output::TerminationReason::ResidueMet || !r.converged {
                    unconverged += 1;
                }
                coefficients.copy_from_slice(&r.coefficients);
            }
            Err(e) => {
                log::warn!("block {b}: {e}");
                failed += 1;
            }
        }
        out.set_block(b, &haar2d_inverse(&coefficients));
    }
    let reconstruction = out.clamped();
    let psnr = psnr(&image.clamped(), &reconstruction, 255.0)?;
    Ok(ImageRecovery {
        solver: solver.label(),
        setup: setup.clone(),
        reconstruction,
        psnr,
        blocks: image.block_count(),
        failed_blocks: failed,
        unconverged_blocks: unconverged,
    })
}

/// Deterministic test picture: a smooth gradient with a few flat
/// rectangles and a disc, values in `[0, 255]`.
pub fn synthetic_image(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = stream(seed, 11);
    let gx: f64 = rng.random_range(-1.0..1.0);
    let gy: f64 = rng.random_range(-1.0..1.0);
    let base: f64 = rng.random_range(60.0..120.0);
    let mut pixels = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            pixels[y * width + x] =
                base + 40.0 * (gx * x as f64 / width as f64 + gy * y as f64 / height as f64);
        }
    }
    for _ in 0..4 {
        let (x0, y0) = (rng.random_range(0..width), rng.random_range(0..height));
        let (w, h) = (
            rng.random_range(4..=width / 2),
            rng.random_range(4..=height / 2),
        );
        let level: f64 = rng.random_range(0.0..255.0);
        for y in y0..(y0 + h).min(height) {
            for x in x0..(x0 + w).min(width) {
                pixels[y * width + x] = level;
            }
        }
    }
    let (cx, cy) = (
        rng.random_range(0.0..width as f64),
        rng.random_range(0.0..height as f64),
    );
    let radius = rng.random_range(2.0..(width.min(height) as f64 / 3.0).max(3.0));
    let level: f64 = rng.random_range(0.0..255.0);
    for y in 0..height {
        for x in 0..width {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            if dx * dx + dy * dy <= radius * radius {
                pixels[y * width + x] = level;
            }
        }
    }
    Image {
        width,
        height,
        pixels: pixels.into_iter().map(|p| p.clamp(0.0, 255.0)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astar::{AompConfig, CostModel};
    use crate::baselines::BaselineConfig;
    use rand_distr::StandardNormal;

    fn random_block(seed: u64) -> [f64; BLOCK_LEN] {
        let mut rng = stream(seed, 5);
        std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn haar_rows_are_orthonormal() {
        let h = haar_matrix();
        for i in 0..BLOCK {
            for j in 0..BLOCK {
                let d: f64 = (0..BLOCK).map(|k| h[i][k] * h[j][k]).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let psi = haar_basis();
        assert!((psi.transpose() * &psi - Matrix::identity(64, 64)).amax() < 1e-14);
    }

    #[test]
    fn constant_and_zero_blocks() {
        let c = haar2d(&[3.0; BLOCK_LEN]);
        assert!((c[0] - 24.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
        assert_eq!(haar2d(&[0.0; BLOCK_LEN]), [0.0; BLOCK_LEN]);
    }

    #[test]
    fn round_trip_and_parseval() {
        for seed in 0..20 {
            let b = random_block(seed);
            let c = haar2d(&b);
            let back = haar2d_inverse(&c);
            assert!(b.iter().zip(&back).all(|(x, y)| (x - y).abs() < 1e-12));
            let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nc: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((nb - nc).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_matches_inverse_transform() {
        let psi = haar_basis();
        let c = random_block(7);
        let direct = haar2d_inverse(&c);
        let via = &psi * Vector::from_row_slice(&c);
        assert!(direct
            .iter()
            .zip(via.iter())
            .all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn sparsify_identities() {
        let img = synthetic_image(16, 16, 3);
        let full = sparsify_blocks(&img, 64).unwrap();
        assert!(img
            .pixels
            .iter()
            .zip(&full.pixels)
            .all(|(a, b)| (a - b).abs() < 1e-9));
        let flat = Image::new(16, 8, vec![77.0; 128]).unwrap();
        let one = sparsify_blocks(&flat, 1).unwrap();
        assert!(flat
            .pixels
            .iter()
            .zip(&one.pixels)
            .all(|(a, b)| (a - b).abs() < 1e-9));
        let sparse = sparsify_blocks(&img, 5).unwrap();
        for b in 0..sparse.block_count() {
            let nz = haar2d(&sparse.block(b))
                .iter()
                .filter(|v| v.abs() > 1e-9)
                .count();
            assert!(nz <= 5);
        }
        assert!(sparsify_blocks(&Image::new(12, 8, vec![0.0; 96]).unwrap(), 3).is_err());
        assert!(sparsify_blocks(&img, 0).is_err());
    }

    #[test]
    fn kept_energy_is_maximal() {
        let c = haar2d(&random_block(9));
        let kept: f64 = top_k(&c, 3).iter().map(|&j| c[j] * c[j]).sum();
        for a in 0..64 {
            for b in a + 1..64 {
                for d in b + 1..64 {
                    assert!(kept >= c[a] * c[a] + c[b] * c[b] + c[d] * c[d]);
                }
            }
        }
    }

    #[test]
    fn psnr_values() {
        let a = Image::new(8, 8, vec![10.0; 64]).unwrap();
        let mut b = a.clone();
        assert_eq!(psnr(&a, &b, 255.0).unwrap(), PSNR_CAP);
        for p in &mut b.pixels {
            *p += 1.0;
        }
        assert!((psnr(&a, &b, 255.0).unwrap() - 48.1308).abs() < 1e-4);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let img = synthetic_image(16, 8, 4);
        img.write_pgm(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5"));
        let back = Image::read_pgm(&path).unwrap();
        assert_eq!((back.width, back.height), (16, 8));
        assert!(img
            .pixels
            .iter()
            .zip(&back.pixels)
            .all(|(a, b)| (a.round() - b).abs() < 1e-12));
        assert!(Image::read_pgm(&dir.path().join("missing.pgm")).is_err());
    }

    #[test]
    fn synthetic_image_is_deterministic() {
        assert_eq!(synthetic_image(32, 32, 8), synthetic_image(32, 32, 8));
        assert_ne!(synthetic_image(32, 32, 8), synthetic_image(32, 32, 9));
        assert!(synthetic_image(32, 32, 8)
            .pixels
            .iter()
            .all(|p| (0.0..=255.0).contains(p)));
    }

    #[test]
    fn recovery_of_easy_blocks_is_exact() {
        let img = sparsify_blocks(&synthetic_image(16, 16, 1), 3).unwrap();
        let omp = SolverSpec::baseline(BaselineConfig::omp());
        let mut cfg = AompConfig::amul_e(20);
        cfg.cost = CostModel::AMul { alpha: 0.85 };
        for solver in [omp, SolverSpec::aomp(cfg)] {
            let rec = recover_image(&img, &solver, &ImageSetup::new(3, 32, 2)).unwrap();
            assert_eq!(rec.blocks, 4);
            assert_eq!(rec.failed_blocks, 0);
            assert!(rec.psnr > 100.0, "{}: {}", rec.solver, rec.psnr);
        }
        let mut setup = ImageSetup::new(3, 32, 2);
        setup.redraw_per_block = true;
        let rec =
            recover_image(&img, &SolverSpec::baseline(BaselineConfig::omp()), &setup).unwrap();
        assert!(rec.psnr > 100.0);
        assert!(recover_image(
            &img,
            &SolverSpec::baseline(BaselineConfig::omp()),
            &ImageSetup::new(40, 32, 2)
        )
        .is_err());
    }
}
