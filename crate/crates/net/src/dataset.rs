//! Supervised training sets: every grid-index combination rendered as a
//! noise-exact covariance input with its binary label.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use doa_core::array::{build_input_channels, true_covariance, CovarianceInput, GridSpec, LabelVector, SourceScene, UlaGeometry};
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, NetError, Result};

/// Refuse to enumerate more examples than this in one set.
pub const MAX_EXAMPLES: u64 = 10_000_000;

const MAGIC: &[u8; 4] = b"DOAD";
const VERSION: u32 = 1;

/// How the number of sources varies across a set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "k", rename_all = "lowercase")]
pub enum KPolicy {
    Fixed(usize),
    Mixed(usize),
}

/// What a set was generated from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grid_half_points: usize,
    pub grid_resolution_deg: f64,
    pub n_sensors: usize,
    pub spacing_ratio: f64,
    pub snrs_db: Vec<f64>,
    pub k_policy: KPolicy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub input: CovarianceInput,
    pub label: LabelVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Sets are concatenated when provenance agrees apart from the SNR list.
    pub fn extend(&mut self, other: Dataset) -> Result<()> {
        let (a, b) = (&self.provenance, &other.provenance);
        if a.grid_half_points != b.grid_half_points
            || a.grid_resolution_deg != b.grid_resolution_deg
            || a.n_sensors != b.n_sensors
            || a.spacing_ratio != b.spacing_ratio
            || a.k_policy != b.k_policy
        {
            return domain_err("cannot merge datasets with different grids, geometries or source policies");
        }
        self.provenance.snrs_db.extend_from_slice(&b.snrs_db);
        self.examples.extend(other.examples);
        Ok(())
    }
}

/// `C(n, k)`, or `None` past `u64`.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
        if c > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(c as u64)
}

/// Size of a fixed-`k` set over `grid_len` points and `n_snrs` SNR levels.
pub fn fixed_k_count(grid_len: usize, k: usize, n_snrs: usize) -> Result<u64> {
    binomial(grid_len as u64, k as u64)
        .and_then(|c| c.checked_mul(n_snrs as u64))
        .ok_or_else(|| NetError::Domain("example count overflows".into()))
}

/// Size of a mixed set with `1..=k_max` sources at one SNR.
pub fn mixed_k_count(grid_len: usize, k_max: usize) -> Result<u64> {
    (1..=k_max as u64).try_fold(0u64, |acc, k| {
        binomial(grid_len as u64, k)
            .and_then(|c| acc.checked_add(c))
            .ok_or_else(|| NetError::Domain("example count overflows".into()))
    })
}

/// Calls `f` with every strictly increasing `k`-subset of `0..n`, in
/// lexicographic order.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if k > n {
        return Ok(());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx)?;
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return Ok(());
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn check_k(geom: &UlaGeometry, grid: &GridSpec, k: usize) -> Result<()> {
    if k == 0 || k >= geom.n_sensors() {
        return domain_err(format!(
            "source count must lie in 1..={}, got {k}",
            geom.n_sensors() - 1
        ));
    }
    if k > grid.len() {
        return domain_err(format!("{k} sources do not fit on a {}-point grid", grid.len()));
    }
    Ok(())
}

fn guard(count: u64) -> Result<usize> {
    if count > MAX_EXAMPLES {
        return domain_err(format!("{count} examples exceeds the limit of {MAX_EXAMPLES}"));
    }
    Ok(count as usize)
}

fn render(grid: &GridSpec, geom: &UlaGeometry, indices: &[usize], snr_db: f64) -> Result<Example> {
    let doas: Vec<f64> = indices.iter().map(|&i| grid.angle(i)).collect();
    let scene = SourceScene::with_snr(doas, snr_db)?;
    let input = build_input_channels(&true_covariance(geom, &scene)?)?;
    let mut bits = vec![0u8; grid.len()];
    for &i in indices {
        bits[i] = 1;
    }
    Ok(Example {
        input,
        label: LabelVector::from_bits(bits)?,
    })
}

fn check_snr(snr_db: f64) -> Result<()> {
    if !snr_db.is_finite() {
        return domain_err(format!("SNR must be finite, got {snr_db}"));
    }
    Ok(())
}

/// Every `k`-combination of grid points at every SNR, unit source powers.
/// Ordered by SNR, then lexicographically by grid indices.
pub fn build_fixed_k_dataset(grid: &GridSpec, geom: &UlaGeometry, k: usize, snrs_db: &[f64]) -> Result<Dataset> {
    check_k(geom, grid, k)?;
    if snrs_db.is_empty() {
        return domain_err("at least one SNR is required");
    }
    snrs_db.iter().try_for_each(|&s| check_snr(s))?;
    let count = guard(fixed_k_count(grid.len(), k, snrs_db.len())?)?;
    let mut examples = Vec::with_capacity(count);
    for &snr in snrs_db {
        for_each_combination(grid.len(), k, |idx| {
            examples.push(render(grid, geom, idx, snr)?);
            Ok(())
        })?;
    }
    Ok(Dataset {
        examples,
        provenance: provenance(grid, geom, snrs_db.to_vec(), KPolicy::Fixed(k)),
    })
}

/// Every combination of `1..=k_max` grid points at a single SNR.
pub fn build_mixed_k_dataset(grid: &GridSpec, geom: &UlaGeometry, k_max: usize, snr_db: f64) -> Result<Dataset> {
    check_k(geom, grid, k_max)?;
    check_snr(snr_db)?;
    let count = guard(mixed_k_count(grid.len(), k_max)?)?;
    let mut examples = Vec::with_capacity(count);
    for k in 1..=k_max {
        for_each_combination(grid.len(), k, |idx| {
            examples.push(render(grid, geom, idx, snr_db)?);
            Ok(())
        })?;
    }
    Ok(Dataset {
        examples,
        provenance: provenance(grid, geom, vec![snr_db], KPolicy::Mixed(k_max)),
    })
}

fn provenance(grid: &GridSpec, geom: &UlaGeometry, snrs_db: Vec<f64>, k_policy: KPolicy) -> Provenance {
    Provenance {
        grid_half_points: grid.half_points(),
        grid_resolution_deg: grid.resolution_deg(),
        n_sensors: geom.n_sensors(),
        spacing_ratio: geom.spacing_ratio(),
        snrs_db,
        k_policy,
    }
}

/// Binary layout (little endian): magic `DOAD`, version `u32`, provenance
/// JSON length `u32` and bytes, example count `u64`, then per example the
/// `N*N*3` input values as `f64` followed by `2G+1` label bytes.
pub fn write_dataset<W: Write>(mut w: W, data: &Dataset) -> Result<()> {
    let meta = serde_json::to_vec(&data.provenance).map_err(|e| NetError::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(meta.len() as u32).to_le_bytes())?;
    w.write_all(&meta)?;
    w.write_all(&(data.examples.len() as u64).to_le_bytes())?;
    let n = data.provenance.n_sensors;
    let g = 2 * data.provenance.grid_half_points + 1;
    for ex in &data.examples {
        if ex.input.size() != n || ex.label.len() != g {
            return Err(NetError::Format("example does not match the dataset provenance".into()));
        }
        for v in ex.input.values() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(ex.label.bits())?;
    }
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => NetError::Format(format!("truncated dataset while reading {what}")),
        _ => NetError::Io(e),
    })
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<Dataset> {
    let mut b4 = [0u8; 4];
    read_exact(&mut r, &mut b4, "magic")?;
    if &b4 != MAGIC {
        return Err(NetError::Format("not a dataset file (bad magic)".into()));
    }
    read_exact(&mut r, &mut b4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(NetError::Format(format!("unsupported dataset version {version}")));
    }
    read_exact(&mut r, &mut b4, "metadata length")?;
    let mut meta = vec![0u8; u32::from_le_bytes(b4) as usize];
    read_exact(&mut r, &mut meta, "metadata")?;
    let provenance: Provenance =
        serde_json::from_slice(&meta).map_err(|e| NetError::Format(format!("provenance: {e}")))?;
    let mut b8 = [0u8; 8];
    read_exact(&mut r, &mut b8, "example count")?;
    let count = u64::from_le_bytes(b8);
    guard(count)?;
    let n = provenance.n_sensors;
    let g = 2 * provenance.grid_half_points + 1;
    let mut values = vec![0u8; n * n * 3 * 8];
    let mut examples = Vec::with_capacity(count as usize);
    for _ in 0..count {
        read_exact(&mut r, &mut values, "example input")?;
        let input = values
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut bits = vec![0u8; g];
        read_exact(&mut r, &mut bits, "example label")?;
        examples.push(Example {
            input: CovarianceInput::from_values(n, input)?,
            label: LabelVector::from_bits(bits).map_err(|e| NetError::Format(e.to_string()))?,
        });
    }
    Ok(Dataset { examples, provenance })
}

pub fn save_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), data)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(121, 2), Some(7260));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(200, 100), None);
    }

    #[test]
    fn combinations_are_lexicographic_and_complete() {
        let mut seen = Vec::new();
        for_each_combination(5, 3, |c| {
            seen.push(c.to_vec());
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[0], vec![0, 1, 2]);
        assert_eq!(seen[9], vec![2, 3, 4]);
        assert!(seen.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn counts() {
        assert_eq!(fixed_k_count(121, 2, 1).unwrap(), 7260);
        assert_eq!(fixed_k_count(121, 2, 5).unwrap(), 36300);
        assert_eq!(mixed_k_count(121, 3).unwrap(), 295_361);
        assert_eq!(mixed_k_count(5, 2).unwrap(), 15);
        assert!(fixed_k_count(10_000, 60, 1).is_err());
    }

    #[test]
    fn round_trip() {
        let grid = GridSpec::new(2, 10.0).unwrap();
        let geom = UlaGeometry::half_wavelength(4).unwrap();
        let data = build_mixed_k_dataset(&grid, &geom, 2, 0.0).unwrap();
        assert_eq!(data.len(), 15);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), data);
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_dataset(buf.as_slice()), Err(NetError::Format(_))));
    }
}
