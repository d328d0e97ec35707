//! Named experiment set-ups at full (published array and grid) and desk
//! (reduced array, grid and Monte-Carlo counts) scale.

use doa_core::array::{GridSpec, SourceScene};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Full,
    Desk,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Full => "full",
            Scale::Desk => "desk",
        }
    }

    pub fn n_sensors(self) -> usize {
        match self {
            Scale::Full => 16,
            Scale::Desk => 8,
        }
    }

    pub fn grid(self) -> GridSpec {
        let half = match self {
            Scale::Full => 60,
            Scale::Desk => 30,
        };
        GridSpec::new(half, 1.0).expect("valid grid")
    }

    /// Monte-Carlo trial count for a full-scale count.
    pub fn trials(self, full: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Desk => full / 10,
        }
    }

    /// Noise bounds are tuned for 16 sensors; the residual norm grows with
    /// the square root of the sensor count.
    pub fn eta(self, full: f64) -> f64 {
        match self {
            Scale::Full => full,
            Scale::Desk => full * (8.0f64 / 16.0).sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Music,
    RootMusic,
    L21,
    /// Network with the `K` largest outputs (source count known).
    Cnn,
    /// Network outputs above a confidence level (source count unknown).
    CnnThreshold,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Music, Method::RootMusic, Method::L21, Method::Cnn, Method::CnnThreshold];

    pub fn name(self) -> &'static str {
        match self {
            Method::Music => "music",
            Method::RootMusic => "root-music",
            Method::L21 => "l21-svd",
            Method::Cnn => "cnn",
            Method::CnnThreshold => "cnn-threshold",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn needs_network(self) -> bool {
        matches!(self, Method::Cnn | Method::CnnThreshold)
    }
}

/// How the result tables are laid out for plotting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// One row per operating point: axis value against RMSE per method.
    Sweep,
    /// One row per scene: true directions against each method's estimates.
    Slide,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatingPoint {
    /// Plot-axis value (SNR, snapshot count, separation, source count ...).
    pub x: f64,
    /// Nominal SNR, used to pick noise power and noise bound.
    pub snr_db: f64,
    pub snapshots: usize,
    pub eta: f64,
    /// Confidence level for threshold decoding.
    pub p_bar: Option<f64>,
    pub scenes: Vec<SourceScene>,
    pub trials_per_scene: usize,
}

impl OperatingPoint {
    pub fn trial_count(&self) -> usize {
        self.scenes.len() * self.trials_per_scene
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub scale: Scale,
    pub n_sensors: usize,
    pub grid: GridSpec,
    pub x_label: &'static str,
    pub layout: Layout,
    pub methods: Vec<Method>,
    /// The preset cannot run without a trained network.
    pub requires_network: bool,
    pub points: Vec<OperatingPoint>,
}

/// Inputs that shape a preset beyond its name.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetParams {
    pub scale: Scale,
    pub seed: u64,
    /// Largest source count the network was trained for (mixed presets).
    pub k_max: usize,
    /// Training SNR of the network; mixed presets keep the matching points.
    pub network_snr_db: Option<f64>,
}

impl PresetParams {
    pub fn new(scale: Scale, seed: u64) -> Self {
        Self {
            scale,
            seed,
            k_max: 3,
            network_snr_db: None,
        }
    }
}

pub const PRESET_NAMES: [&str; 10] = [
    "slide-4p7",
    "slide-2p11",
    "snr-sweep",
    "snapshot-sweep",
    "separation-sweep",
    "snr-mismatch",
    "offgrid-k2",
    "mixed-k",
    "mixed-k-slide",
    "mixed-k-random",
];

pub const SNR_SWEEP_DB: [f64; 11] = [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
pub const SNR_SWEEP_ETA: [f64; 11] = [1260.0, 700.0, 400.0, 230.0, 140.0, 100.0, 70.0, 70.0, 60.0, 60.0, 60.0];
pub const SNAPSHOT_SWEEP: [usize; 7] = [100, 200, 500, 1000, 2000, 5000, 10000];
pub const SNAPSHOT_SWEEP_ETA: [f64; 7] = [130.0, 180.0, 270.0, 410.0, 570.0, 910.0, 1280.0];
pub const SEPARATIONS_DEG: [f64; 9] = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0];
/// Fixed directions of the unknown-source-count experiment, first `K` used.
pub const MIXED_DOAS_DEG: [f64; 3] = [7.8, -2.6, 2.6];
/// Confidence levels per source count at -10 dB and 0 dB.
pub const MIXED_P_BAR: [(f64, [f64; 3]); 2] = [(-10.0, [0.90, 0.74, 0.71]), (0.0, [0.90, 0.77, 0.70])];
pub const MIXED_SLIDE_P_BAR: [f64; 3] = [0.88, 0.84, 0.71];

const CLASSICAL: [Method; 3] = [Method::Music, Method::RootMusic, Method::L21];

fn unit_scene(doas: Vec<f64>, snr_db: f64) -> SourceScene {
    SourceScene::with_snr(doas, snr_db).expect("preset scene is valid")
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Scenes `[start + i, start + i + offsets...]` for `i = 0..count`.
fn sliding(start: f64, count: usize, offsets: &[f64], make: impl Fn(Vec<f64>) -> SourceScene) -> Vec<SourceScene> {
    (0..count)
        .map(|i| {
            let first = start + i as f64;
            let mut doas = vec![round6(first)];
            doas.extend(offsets.iter().map(|o| round6(first + o)));
            make(doas)
        })
        .collect()
}

/// `k` directions drawn uniformly in `[lo, hi]` with pairwise separation
/// of at least `min_sep` degrees.
pub fn random_scene_doas(rng: &mut impl Rng, k: usize, lo: f64, hi: f64, min_sep: f64) -> Vec<f64> {
    loop {
        let mut d: Vec<f64> = (0..k).map(|_| round6(rng.random_range(lo..hi))).collect();
        d.sort_by(f64::total_cmp);
        if d.windows(2).all(|w| w[1] - w[0] >= min_sep) {
            return d;
        }
    }
}

fn span(scale: Scale) -> (f64, f64) {
    let phi = scale.grid().phi_max_deg();
    (-(phi - 2.0), phi - 2.0)
}

fn point(x: f64, snr_db: f64, snapshots: usize, eta: f64, scenes: Vec<SourceScene>, trials_per_scene: usize) -> OperatingPoint {
    OperatingPoint {
        x,
        snr_db,
        snapshots,
        eta,
        p_bar: None,
        scenes,
        trials_per_scene,
    }
}

/// Builds a preset by name.
pub fn build_preset(name: &str, params: &PresetParams) -> Result<ExperimentPreset> {
    let scale = params.scale;
    let desk = scale == Scale::Desk;
    let base = |name, description, x_label, layout, points| ExperimentPreset {
        name,
        description,
        scale,
        n_sensors: scale.n_sensors(),
        grid: scale.grid(),
        x_label,
        layout,
        methods: CLASSICAL.to_vec(),
        requires_network: false,
        points,
    };
    let preset = match name {
        "slide-4p7" => {
            let (start, count) = if desk { (-30.0, 56) } else { (-60.0, 116) };
            let scenes = sliding(start, count, &[4.7], |d| unit_scene(d, -10.0));
            base(
                "slide-4p7",
                "two sources 4.7 deg apart sliding across the field of view, -10 dB, T = 2000",
                "first_doa_deg",
                Layout::Slide,
                vec![point(-10.0, -10.0, 2000, scale.eta(550.0), scenes, 1)],
            )
        }
        "slide-2p11" => {
            let (start, count) = if desk { (-29.5, 58) } else { (-59.5, 118) };
            let scenes = sliding(start, count, &[2.11], |d| unit_scene(d, 0.0));
            base(
                "slide-2p11",
                "two sources 2.11 deg apart sliding across the field of view, 0 dB, T = 200",
                "first_doa_deg",
                Layout::Slide,
                vec![point(0.0, 0.0, 200, scale.eta(60.0), scenes, 1)],
            )
        }
        "snr-sweep" => {
            let points = SNR_SWEEP_DB
                .iter()
                .zip(SNR_SWEEP_ETA)
                .map(|(&snr, eta)| {
                    point(snr, snr, 1000, scale.eta(eta), vec![unit_scene(vec![10.11, 13.3], snr)], scale.trials(1000))
                })
                .collect();
            base(
                "snr-sweep",
                "sources at 10.11 and 13.3 deg, T = 1000, SNR from -20 to 30 dB",
                "snr_db",
                Layout::Sweep,
                points,
            )
        }
        "snapshot-sweep" => {
            let points = SNAPSHOT_SWEEP
                .iter()
                .zip(SNAPSHOT_SWEEP_ETA)
                .map(|(&t, eta)| {
                    point(t as f64, -10.0, t, scale.eta(eta), vec![unit_scene(vec![-13.18, -9.58], -10.0)], scale.trials(1000))
                })
                .collect();
            base(
                "snapshot-sweep",
                "sources at -13.18 and -9.58 deg, -10 dB, T from 100 to 10000",
                "snapshots",
                Layout::Sweep,
                points,
            )
        }
        "separation-sweep" => {
            let points = SEPARATIONS_DEG
                .iter()
                .map(|&sep| {
                    let scene = unit_scene(vec![-13.8, round6(-13.8 + sep)], -10.0);
                    point(sep, -10.0, 500, scale.eta(290.0), vec![scene], scale.trials(1000))
                })
                .collect();
            base(
                "separation-sweep",
                "first source at -13.8 deg, second at increasing separation, -10 dB, T = 500",
                "separation_deg",
                Layout::Sweep,
                points,
            )
        }
        "snr-mismatch" => {
            let perturbed = |noise: f64| move |d: Vec<f64>| SourceScene::new(d, vec![0.7, 1.25], noise).expect("valid scene");
            let (s1, c1, s2, c2) = if desk { (-29.5, 58, -29.43, 56) } else { (-59.5, 118, -59.43, 116) };
            let a = sliding(s1, c1, &[2.11], perturbed(1.0));
            let b = sliding(s2, c2, &[4.0], perturbed(10.0));
            let actual = |s: &SourceScene| s.snr_db().expect("positive noise");
            base(
                "snr-mismatch",
                "unequal source powers (0.7, 1.25) with noise bounds tuned for the nominal 0 dB and -10 dB",
                "actual_snr_db",
                Layout::Slide,
                vec![
                    point(actual(&a[0]), 0.0, 200, scale.eta(60.0), a, 1),
                    point(actual(&b[0]), -10.0, 1000, scale.eta(400.0), b, 1),
                ],
            )
        }
        "offgrid-k2" => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let (lo, hi) = span(scale);
            let scenes = (0..scale.trials(1000))
                .map(|_| unit_scene(random_scene_doas(&mut rng, 2, lo, hi, 4.0), -10.0))
                .collect();
            ExperimentPreset {
                methods: vec![Method::Music, Method::RootMusic, Method::Cnn],
                ..base(
                    "offgrid-k2",
                    "two sources at random off-grid directions at least 4 deg apart, -10 dB, T = 2000",
                    "snr_db",
                    Layout::Sweep,
                    vec![point(-10.0, -10.0, 2000, scale.eta(550.0), scenes, 1)],
                )
            }
        }
        "mixed-k" | "mixed-k-slide" => {
            let slide = name == "mixed-k-slide";
            let mut points = Vec::new();
            for (snr, levels) in MIXED_P_BAR {
                if params.network_snr_db.is_some_and(|s| s != snr) {
                    continue;
                }
                let t = if snr <= -10.0 { 3000 } else { 1000 };
                for k in 1..=params.k_max.min(3) {
                    let (scenes, trials) = if slide {
                        let count = if desk { 60 - 10 * (k - 1) } else { 120 - 10 * (k - 1) };
                        let start = if desk { -29.8 } else { -59.8 };
                        let offsets: Vec<f64> = (1..k).map(|i| 10.0 * i as f64).collect();
                        (sliding(start, count, &offsets, |d| unit_scene(d, snr)), 1)
                    } else {
                        (vec![unit_scene(MIXED_DOAS_DEG[..k].to_vec(), snr)], scale.trials(10_000))
                    };
                    let mut p = point(k as f64, snr, t, 0.0, scenes, trials);
                    p.p_bar = Some(if slide { MIXED_SLIDE_P_BAR[k - 1] } else { levels[k - 1] });
                    points.push(p);
                }
            }
            ExperimentPreset {
                methods: vec![Method::Cnn, Method::CnnThreshold],
                requires_network: true,
                ..base(
                    if slide { "mixed-k-slide" } else { "mixed-k" },
                    if slide {
                        "one to three sources 10 deg apart sliding across the field of view, source count unknown"
                    } else {
                        "one to three sources at fixed off-grid directions, source count unknown"
                    },
                    "k",
                    if slide { Layout::Slide } else { Layout::Sweep },
                    points,
                )
            }
        }
        "mixed-k-random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let (lo, hi) = span(scale);
            let snr = params.network_snr_db.unwrap_or(0.0);
            let scenes = (0..scale.trials(5000))
                .map(|_| {
                    let k = rng.random_range(1..=params.k_max);
                    unit_scene(random_scene_doas(&mut rng, k, lo, hi, 5.0), snr)
                })
                .collect();
            ExperimentPreset {
                methods: vec![Method::Cnn, Method::CnnThreshold],
                requires_network: true,
                ..base(
                    "mixed-k-random",
                    "random source count and off-grid directions at least 5 deg apart, T = 1000",
                    "snr_db",
                    Layout::Sweep,
                    vec![point(snr, snr, 1000, 0.0, scenes, 1)],
                )
            }
        }
        other => {
            return Err(BenchError::UnknownPreset {
                name: other.to_string(),
                available: PRESET_NAMES.join(", "),
            })
        }
    };
    Ok(preset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_named_preset_builds_within_its_grid() {
        for scale in [Scale::Full, Scale::Desk] {
            for name in PRESET_NAMES {
                let p = build_preset(name, &PresetParams::new(scale, 1)).unwrap();
                assert_eq!(p.name, name);
                assert!(!p.points.is_empty());
                let phi = p.grid.phi_max_deg();
                for pt in &p.points {
                    assert!(pt.trial_count() > 0);
                    for s in &pt.scenes {
                        assert!(s.doas_deg().iter().all(|d| d.abs() <= phi), "{name} {:?}", s.doas_deg());
                    }
                }
            }
        }
    }

    #[test]
    fn published_scene_counts() {
        let full = PresetParams::new(Scale::Full, 0);
        assert_eq!(build_preset("slide-4p7", &full).unwrap().points[0].scenes.len(), 116);
        assert_eq!(build_preset("slide-2p11", &full).unwrap().points[0].scenes.len(), 118);
        let sweep = build_preset("snr-sweep", &full).unwrap();
        assert_eq!(sweep.points.len(), 11);
        assert_eq!(sweep.points[0].trial_count(), 1000);
        assert_eq!(build_preset("snr-sweep", &PresetParams::new(Scale::Desk, 0)).unwrap().points[0].trial_count(), 100);
    }

    #[test]
    fn mismatch_scenes_have_the_published_actual_snr() {
        let p = build_preset("snr-mismatch", &PresetParams::new(Scale::Full, 0)).unwrap();
        assert!((p.points[0].x + 1.549).abs() < 1e-3);
        assert!((p.points[1].x + 11.549).abs() < 1e-3);
    }

    #[test]
    fn unknown_preset_lists_alternatives() {
        let e = build_preset("nope", &PresetParams::new(Scale::Desk, 0)).unwrap_err();
        assert!(e.to_string().contains("snr-sweep"));
    }

    #[test]
    fn random_presets_depend_only_on_seed() {
        let a = build_preset("offgrid-k2", &PresetParams::new(Scale::Desk, 5)).unwrap();
        let b = build_preset("offgrid-k2", &PresetParams::new(Scale::Desk, 5)).unwrap();
        let c = build_preset("offgrid-k2", &PresetParams::new(Scale::Desk, 6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
