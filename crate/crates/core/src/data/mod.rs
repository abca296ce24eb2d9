//! Connectivity-matrix data model: preprocessing from ROI time series to
//! thresholded adjacency matrices, a synthetic dataset generator, and the
//! on-disk dataset layout (CSV matrices plus a JSON manifest).

mod io;
mod preprocess;
mod synth;

pub use io::{
    load_dataset, load_matrix_values, read_manifest, save_dataset, save_matrix_values,
    write_manifest, Manifest, ManifestEntry, Split,
};
pub use preprocess::{
    build_connectivity, fisher_z, pearson_corr, scale_and_threshold, truncate_rois,
    CORRELATION_CLAMP,
};
pub use synth::generate_synthetic_dataset;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ClassLabel;
use crate::tensor::Tensor;

// ---------------------------------------------------------------------------
// Core types
// ---------------------------------------------------------------------------

/// BOLD-like time series, one row per ROI.
#[derive(Clone, Debug)]
pub struct TimeSeriesPanel {
    n_rois: usize,
    n_timepoints: usize,
    values: Vec<f64>,
}

impl TimeSeriesPanel {
    pub fn new(n_rois: usize, n_timepoints: usize, values: Vec<f64>) -> Result<Self> {
        if n_timepoints < 3 {
            return Err(Error::DegenerateInput(format!(
                "correlation needs at least 3 timepoints, got {n_timepoints}"
            )));
        }
        if values.len() != n_rois * n_timepoints {
            return Err(Error::Shape(format!(
                "panel of {n_rois} ROIs x {n_timepoints} timepoints needs {} values, got {}",
                n_rois * n_timepoints,
                values.len()
            )));
        }
        Ok(TimeSeriesPanel {
            n_rois,
            n_timepoints,
            values,
        })
    }

    pub fn n_rois(&self) -> usize {
        self.n_rois
    }

    pub fn n_timepoints(&self) -> usize {
        self.n_timepoints
    }

    pub fn roi(&self, index: usize) -> &[f64] {
        &self.values[index * self.n_timepoints..(index + 1) * self.n_timepoints]
    }
}

/// Symmetric matrix of Fisher-z correlations with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectivityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ConnectivityMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Shape(format!(
                "{n}x{n} matrix needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (values[i * n + j] - values[j * n + i]).abs() > 1e-9 {
                    return Err(Error::Shape(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(ConnectivityMatrix { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Preprocessed, labeled adjacency matrix: symmetric, entries in [0, 1],
/// everything above the preprocessing percentile exactly 1.0.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyMatrix {
    n: usize,
    values: Vec<f64>,
    label: ClassLabel,
    id: String,
}

impl AdjacencyMatrix {
    pub fn new(n: usize, values: Vec<f64>, label: ClassLabel, id: String) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Shape(format!(
                "{n}x{n} matrix needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Config(format!(
                "adjacency entries must lie in [0, 1], found {bad} in '{id}'"
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::Shape(format!(
                        "adjacency matrix '{id}' is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(AdjacencyMatrix {
            n,
            values,
            label,
            id,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> ClassLabel {
        self.label
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mean_intensity(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Single-channel input tensor for the network.
    pub fn to_tensor(&self) -> Tensor {
        let data: Vec<f32> = self.values.iter().map(|&v| v as f32).collect();
        Tensor::new(vec![self.n, self.n, 1], data).expect("square matrix maps to tensor")
    }
}

/// Train/test split with disjoint ids.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub train: Vec<AdjacencyMatrix>,
    pub test: Vec<AdjacencyMatrix>,
}

impl Dataset {
    pub fn new(train: Vec<AdjacencyMatrix>, test: Vec<AdjacencyMatrix>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for m in train.iter().chain(&test) {
            if !seen.insert(m.id().to_string()) {
                return Err(Error::Config(format!("duplicate matrix id '{}'", m.id())));
            }
        }
        Ok(Dataset { train, test })
    }
}

/// Parameters of the synthetic stand-in generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_rois: usize,
    pub n_per_class_train: usize,
    pub n_per_class_test: usize,
    /// Planted communities per class template.
    pub community_count: usize,
    /// 0 = statistically identical classes, 1 = fully disjoint block patterns.
    pub separability: f64,
    /// Standard deviation of per-subject Gaussian noise added to the template.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_rois: 105,
            n_per_class_train: 15,
            n_per_class_test: 15,
            community_count: 4,
            separability: 0.6,
            noise_sigma: 0.12,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rois < 2 {
            return Err(Error::Config("n_rois must be at least 2".into()));
        }
        if self.n_per_class_train == 0 {
            return Err(Error::Config("n_per_class_train must be positive".into()));
        }
        if self.community_count == 0 || self.community_count > self.n_rois {
            return Err(Error::Config(format!(
                "community_count must lie in [1, {}]",
                self.n_rois
            )));
        }
        if !(0.0..=1.0).contains(&self.separability) {
            return Err(Error::Config(format!(
                "separability must lie in [0, 1], got {}",
                self.separability
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::Config(format!(
                "noise_sigma must be a non-negative real, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}
