use std::cmp::Ordering;

use crate::array::GridSpec;

/// Estimated directions in ascending order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EstimateSet {
    angles_deg: Vec<f64>,
}

impl EstimateSet {
    pub fn new(mut angles_deg: Vec<f64>) -> Self {
        angles_deg.sort_by(f64::total_cmp);
        Self { angles_deg }
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.angles_deg
    }
}

/// Picks the `k` largest local maxima of a grid spectrum.
///
/// A point is a local maximum when it is `>=` each existing neighbour and
/// its run of equal values is not bordered by anything higher. Ties
/// go to the smaller angle. Candidates within half a grid step of an
/// already-selected angle are skipped. When there are fewer than `k` local
/// maxima the remaining picks are the largest unselected values.
pub fn pick_peaks(grid: &GridSpec, values: &[f64], k: usize) -> EstimateSet {
    let n = values.len().min(grid.len());
    let by_value_then_index = |a: &usize, b: &usize| {
        values[*b]
            .partial_cmp(&values[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    // A flat run is a maximum only if whatever borders it is strictly lower,
    // so the zero floor of a sparse spectrum does not count.
    let mut maxima = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && values[end + 1] == values[start] {
            end += 1;
        }
        let left = start == 0 || values[start - 1] < values[start];
        let right = end + 1 == n || values[end + 1] < values[start];
        if left && right {
            maxima.extend(start..=end);
        }
        start = end + 1;
    }
    maxima.sort_by(by_value_then_index);

    let min_gap = grid.resolution_deg() / 2.0;
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let take = |candidates: &[usize], chosen: &mut Vec<usize>| {
        for &i in candidates {
            if chosen.len() == k {
                break;
            }
            let a = grid.angle(i);
            if chosen.iter().any(|&c| (grid.angle(c) - a).abs() < min_gap) {
                continue;
            }
            chosen.push(i);
        }
    };
    take(&maxima, &mut chosen);
    if chosen.len() < k {
        let mut rest: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
        rest.sort_by(by_value_then_index);
        take(&rest, &mut chosen);
    }
    EstimateSet::new(chosen.into_iter().map(|i| grid.angle(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(5, 1.0).unwrap()
    }

    #[test]
    fn two_spikes() {
        let mut v = vec![0.1; 11];
        v[2] = 5.0;
        v[8] = 3.0;
        assert_eq!(pick_peaks(&grid(), &v, 2).angles_deg(), &[-3.0, 3.0]);
        assert_eq!(pick_peaks(&grid(), &v, 1).angles_deg(), &[-3.0]);
    }

    #[test]
    fn zero_floor_is_not_a_peak() {
        let mut v = vec![0.0; 11];
        v[6] = 4.0;
        v[7] = 3.0;
        assert_eq!(pick_peaks(&grid(), &v, 2).angles_deg(), &[1.0, 2.0]);
    }

    #[test]
    fn monotone_picks_right_boundary() {
        let v: Vec<f64> = (0..11).map(f64::from).collect();
        assert_eq!(pick_peaks(&grid(), &v, 1).angles_deg(), &[5.0]);
    }

    #[test]
    fn plateau_prefers_smaller_angle() {
        let mut v = vec![0.0; 11];
        v[4] = 2.0;
        v[5] = 2.0;
        v[6] = 2.0;
        assert_eq!(pick_peaks(&grid(), &v, 1).angles_deg(), &[-1.0]);
    }

    #[test]
    fn fills_from_largest_remaining() {
        // Single local maximum; second pick is the next largest value.
        let v = vec![0.0, 1.0, 2.0, 3.0, 9.0, 8.0, 4.0, 2.0, 1.0, 0.5, 0.1];
        assert_eq!(pick_peaks(&grid(), &v, 2).angles_deg(), &[-1.0, 0.0]);
    }

    #[test]
    fn always_k_when_possible() {
        let v = vec![1.0; 11];
        assert_eq!(pick_peaks(&grid(), &v, 3).len(), 3);
        assert_eq!(pick_peaks(&grid(), &v, 3).angles_deg(), &[-5.0, -4.0, -3.0]);
    }
}
