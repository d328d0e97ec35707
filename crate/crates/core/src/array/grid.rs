use crate::error::{domain, Result};

const ON_GRID_TOL_DEG: f64 = 1e-9;

/// Symmetric angular grid `{-G rho, ..., 0, ..., G rho}` with `2G + 1` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    half_points: usize,
    resolution_deg: f64,
}

impl GridSpec {
    /// Grid with `half_points = G` points on each side of broadside.
    pub fn new(half_points: usize, resolution_deg: f64) -> Result<Self> {
        if !(resolution_deg > 0.0) || half_points as f64 * resolution_deg >= 90.0 {
            return domain(format!(
                "grid G={half_points}, rho={resolution_deg} deg must stay inside (-90, 90)"
            ));
        }
        Ok(Self {
            half_points,
            resolution_deg,
        })
    }

    pub fn half_points(&self) -> usize {
        self.half_points
    }

    pub fn resolution_deg(&self) -> f64 {
        self.resolution_deg
    }

    pub fn phi_max_deg(&self) -> f64 {
        self.half_points as f64 * self.resolution_deg
    }

    pub fn len(&self) -> usize {
        2 * self.half_points + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn angle(&self, index: usize) -> f64 {
        (index as f64 - self.half_points as f64) * self.resolution_deg
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.angle(i)).collect()
    }

    /// Index of the grid point within `1e-9` deg of `angle_deg`.
    pub fn index_of(&self, angle_deg: f64) -> Option<usize> {
        let i = self.nearest_index(angle_deg);
        ((self.angle(i) - angle_deg).abs() <= ON_GRID_TOL_DEG).then_some(i)
    }

    /// Closest grid index, clamped to the grid range.
    pub fn nearest_index(&self, angle_deg: f64) -> usize {
        let pos = (angle_deg / self.resolution_deg).round() + self.half_points as f64;
        pos.clamp(0.0, (self.len() - 1) as f64) as usize
    }
}

/// Binary multi-label target over the grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return domain("label entries must be 0 or 1");
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from(b)).collect()
    }
}

/// Sets a one at the grid index of every direction. Off-grid directions are
/// rejected rather than snapped.
pub fn encode_label(grid: &GridSpec, doas_deg: &[f64]) -> Result<LabelVector> {
    let mut label = LabelVector::zeros(grid.len());
    for &a in doas_deg {
        match grid.index_of(a) {
            Some(i) => label.0[i] = 1,
            None => return domain(format!("direction {a} deg is not on the grid")),
        }
    }
    Ok(label)
}

/// Ascending grid angles of the set bits.
pub fn decode_label(grid: &GridSpec, label: &LabelVector) -> Vec<f64> {
    label.ones().map(|i| grid.angle(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper_grid() -> GridSpec {
        GridSpec::new(60, 1.0).unwrap()
    }

    #[test]
    fn grid_points() {
        let g = paper_grid();
        assert_eq!(g.len(), 121);
        let a = g.angles();
        assert_eq!(a[0], -60.0);
        assert_eq!(a[120], 60.0);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(GridSpec::new(90, 1.0).is_err());
    }

    #[test]
    fn encode_examples() {
        let g = paper_grid();
        let z = encode_label(&g, &[-60.0, -59.0]).unwrap();
        assert_eq!(z.len(), 121);
        assert_eq!(&z.bits()[..3], &[1, 1, 0]);
        assert_eq!(z.count_ones(), 2);
        assert_eq!(encode_label(&g, &[]).unwrap(), LabelVector::zeros(121));
        let z = encode_label(&g, &[0.0]).unwrap();
        assert_eq!(z.ones().collect::<Vec<_>>(), vec![60]);
        assert!(encode_label(&g, &[0.5]).is_err());
        assert!(encode_label(&g, &[61.0]).is_err());
    }

    #[test]
    fn decode_examples() {
        let g = paper_grid();
        let mut bits = vec![0; 121];
        bits[0] = 1;
        bits[1] = 1;
        let z = LabelVector::from_bits(bits).unwrap();
        assert_eq!(decode_label(&g, &z), vec![-60.0, -59.0]);
        assert!(decode_label(&g, &LabelVector::zeros(121)).is_empty());
    }

    proptest! {
        #[test]
        fn label_round_trip(bits in proptest::collection::vec(0u8..2, 61)) {
            let g = GridSpec::new(30, 1.0).unwrap();
            let z = LabelVector::from_bits(bits).unwrap();
            let angles = decode_label(&g, &z);
            prop_assert_eq!(encode_label(&g, &angles).unwrap(), z);
        }

        #[test]
        fn subset_round_trip(idx in proptest::collection::btree_set(0usize..121, 0..16)) {
            let g = paper_grid();
            let angles: Vec<f64> = idx.iter().map(|&i| g.angle(i)).collect();
            let z = encode_label(&g, &angles).unwrap();
            prop_assert_eq!(z.count_ones(), idx.len());
            prop_assert_eq!(decode_label(&g, &z), angles);
        }
    }
}
