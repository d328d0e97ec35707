use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::geometry::UlaGeometry;
use super::scene::SourceScene;
use crate::error::{domain, DoaError, Result};
use crate::{CMatrix, C64};

const MAGIC: &[u8; 4] = b"DOAS";
const VERSION: u32 = 1;

/// `N x T` block of array snapshots; column `t` is `y(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotBlock {
    geometry: UlaGeometry,
    data: CMatrix,
}

impl SnapshotBlock {
    pub fn new(geometry: UlaGeometry, data: CMatrix) -> Result<Self> {
        if data.rows() != geometry.n_sensors() {
            return domain(format!(
                "snapshot rows {} do not match {} sensors",
                data.rows(),
                geometry.n_sensors()
            ));
        }
        if data.cols() == 0 {
            return domain("snapshot block needs at least one snapshot");
        }
        Ok(Self { geometry, data })
    }

    pub fn geometry(&self) -> &UlaGeometry {
        &self.geometry
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn n_snapshots(&self) -> usize {
        self.data.cols()
    }

    /// Little-endian `DOAS` container: magic, version, N, T, then T*N complex
    /// doubles in column-major order (real part first).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let (n, t) = (self.data.rows(), self.data.cols());
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&u32::try_from(n).map_err(|_| too_large())?.to_le_bytes())?;
        w.write_all(&u32::try_from(t).map_err(|_| too_large())?.to_le_bytes())?;
        let mut buf = Vec::with_capacity(n * t * 16);
        for col in 0..t {
            for row in 0..n {
                let z = self.data[(row, col)];
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a block written by [`SnapshotBlock::write_to`]. The container
    /// does not store the element spacing, so it is supplied by the caller.
    pub fn read_from<R: Read>(mut r: R, spacing_ratio: f64) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(DoaError::Format(format!("bad snapshot magic {magic:?}")));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(DoaError::Format(format!("unsupported snapshot version {version}")));
        }
        let n = read_u32(&mut r)? as usize;
        let t = read_u32(&mut r)? as usize;
        let geometry = UlaGeometry::new(n, spacing_ratio)?;
        let mut raw = vec![0u8; n * t * 16];
        read_exact(&mut r, &mut raw)?;
        let mut data = CMatrix::zeros(n, t);
        for (idx, chunk) in raw.chunks_exact(16).enumerate() {
            let re = f64::from_le_bytes(chunk[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(chunk[8..].try_into().expect("8 bytes"));
            data[(idx % n, idx / n)] = C64::new(re, im);
        }
        Self::new(geometry, data)
    }
}

fn too_large() -> DoaError {
    DoaError::Format("dimension does not fit in u32".into())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => DoaError::Format("truncated snapshot file".into()),
        _ => DoaError::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Draws `T` snapshots `y(t) = A s(t) + e(t)` with independent circular
/// complex Gaussian sources and white noise.
///
/// A single ChaCha8 stream seeded from `seed` supplies every variate in the
/// order `s(1), e(1), s(2), e(2), ...`; within `s(t)` sources are drawn in
/// order and each complex sample takes two standard normals `(x, y)` and
/// forms `sigma (x + j y) / sqrt(2)`.
pub fn simulate_snapshots(
    geom: &UlaGeometry,
    scene: &SourceScene,
    n_snapshots: usize,
    seed: u64,
) -> Result<SnapshotBlock> {
    if n_snapshots == 0 {
        return domain("at least one snapshot is required");
    }
    scene.check_against(geom)?;
    let n = geom.n_sensors();
    let a = geom.manifold(scene.doas_deg())?;
    let k = scene.n_sources();
    let source_std: Vec<f64> = scene.source_powers().iter().map(|p| p.sqrt()).collect();
    let noise_std = scene.noise_power().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |std: f64| {
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        C64::new(x, y) * (std * std::f64::consts::FRAC_1_SQRT_2)
    };

    let mut data = CMatrix::zeros(n, n_snapshots);
    let mut s = vec![C64::new(0.0, 0.0); k];
    for t in 0..n_snapshots {
        for (sk, &std) in s.iter_mut().zip(&source_std) {
            *sk = draw(std);
        }
        for row in 0..n {
            let noise = draw(noise_std);
            let signal = (0..k).fold(C64::new(0.0, 0.0), |acc, kk| acc + a[(row, kk)] * s[kk]);
            data[(row, t)] = signal + noise;
        }
    }
    SnapshotBlock::new(*geom, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::covariance::{sample_covariance, true_covariance};
    use crate::linalg::hermitian_eig;

    fn geom(n: usize) -> UlaGeometry {
        UlaGeometry::new(n, 0.5).unwrap()
    }

    #[test]
    fn noiseless_single_snapshot_in_steering_span() {
        let g = geom(6);
        let s = SourceScene::new(vec![17.0], vec![2.0], 0.0).unwrap();
        let b = simulate_snapshots(&g, &s, 1, 5).unwrap();
        let a = g.steering_vector(17.0).unwrap();
        let y = b.data().column(0);
        let coef = y[0] / a[0];
        for (yi, ai) in y.iter().zip(&a) {
            assert!((yi - ai * coef).norm() < 1e-12);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = geom(8);
        let s = SourceScene::new(vec![-5.0, 12.0], vec![1.0, 1.0], 3.0).unwrap();
        let a = simulate_snapshots(&g, &s, 50, 99).unwrap();
        let b = simulate_snapshots(&g, &s, 50, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_snapshots(&g, &s, 50, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn large_sample_converges_to_true_covariance() {
        let g = geom(8);
        let s = SourceScene::new(vec![10.11, 13.3], vec![1.0, 1.0], 10.0).unwrap();
        let b = simulate_snapshots(&g, &s, 100_000, 1).unwrap();
        let r = true_covariance(&g, &s).unwrap();
        let rhat = sample_covariance(&b).unwrap();
        let rel = rhat.sub(&r).unwrap().frobenius_norm() / r.frobenius_norm();
        assert!(rel < 0.05, "relative error {rel}");
    }

    #[test]
    fn sample_covariance_is_psd() {
        let g = geom(10);
        let s = SourceScene::new(vec![-20.0, 0.5, 33.0], vec![1.0, 0.5, 2.0], 1.0).unwrap();
        let b = simulate_snapshots(&g, &s, 2000, 8).unwrap();
        let e = hermitian_eig(&sample_covariance(&b).unwrap()).unwrap();
        assert!(*e.eigenvalues.last().unwrap() > -1e-10);
    }

    #[test]
    fn zero_snapshots_rejected() {
        let g = geom(4);
        let s = SourceScene::new(vec![0.0], vec![1.0], 1.0).unwrap();
        assert!(simulate_snapshots(&g, &s, 0, 1).is_err());
    }

    #[test]
    fn binary_round_trip_and_corruption() {
        let g = geom(5);
        let s = SourceScene::new(vec![3.0], vec![1.0], 1.0).unwrap();
        let b = simulate_snapshots(&g, &s, 7, 2).unwrap();
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 7 * 5 * 16);
        assert_eq!(&buf[..4], b"DOAS");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 7);
        // Column-major: second complex value is y_1(1).
        let re = f64::from_le_bytes(buf[32..40].try_into().unwrap());
        assert_eq!(re, b.data()[(1, 0)].re);
        let back = SnapshotBlock::read_from(&buf[..], 0.5).unwrap();
        assert_eq!(back, b);

        assert!(matches!(
            SnapshotBlock::read_from(&buf[..buf.len() - 3], 0.5),
            Err(DoaError::Format(_))
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(SnapshotBlock::read_from(&bad[..], 0.5), Err(DoaError::Format(_))));
    }
}
