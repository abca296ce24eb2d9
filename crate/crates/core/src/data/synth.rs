//! Synthetic connectome generator: planted community templates per class,
//! per-subject Gaussian noise, then the same scale-and-threshold step the
//! clinical pipeline uses. Stands in for the private patient data.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::network::ClassLabel;
use crate::rng::{domain, stream};

use super::{scale_and_threshold, AdjacencyMatrix, Dataset, Split, SynthConfig};

/// Elevated within-community connectivity in template units; cross-community
/// pairs sit at zero. Chosen together with the default `noise_sigma` so that
/// thresholded matrices keep their mean intensity near 0.5.
const COMMUNITY_ELEVATION: f64 = 1.0;

/// Community assignment for each ROI: a seeded shuffle split into
/// `communities` nearly equal blocks.
fn partition(n_rois: usize, communities: usize, seed: u64, class_stream: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_rois).collect();
    let mut rng = stream(seed, domain::SYNTH_PARTITION, class_stream, 0);
    // Fisher-Yates with the counter-keyed stream.
    for i in (1..n_rois).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut assignment = vec![0usize; n_rois];
    for (rank, &roi) in order.iter().enumerate() {
        assignment[roi] = rank * communities / n_rois;
    }
    assignment
}

fn template_from_partition(assignment: &[usize]) -> Vec<f64> {
    let n = assignment.len();
    let mut t = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && assignment[i] == assignment[j] {
                t[i * n + j] = COMMUNITY_ELEVATION;
            }
        }
    }
    t
}

fn subject_matrix(
    template: &[f64],
    n: usize,
    noise_sigma: f64,
    seed: u64,
    subject_stream: u64,
    subject_index: u64,
    label: ClassLabel,
    id: String,
) -> Result<AdjacencyMatrix> {
    let mut values = template.to_vec();
    if noise_sigma > 0.0 {
        let mut rng = stream(seed, domain::SYNTH_NOISE, subject_stream, subject_index);
        let normal = Normal::new(0.0, noise_sigma).expect("validated sigma");
        for i in 0..n {
            for j in (i + 1)..n {
                let e = normal.sample(&mut rng);
                values[i * n + j] += e;
                values[j * n + i] += e;
            }
        }
    }
    for i in 0..n {
        values[i * n + i] = 0.0;
    }
    let thresholded = scale_and_threshold(&values)?;
    AdjacencyMatrix::new(n, thresholded, label, id)
}

/// Generates the full train/test dataset described by `cfg`.
///
/// Class 0 uses one planted partition; class 1 blends that template with an
/// independently drawn one, weighted by `separability`. Every subject is
/// generated from its own counter-keyed noise stream, so the dataset is
/// bit-identical for a given config regardless of generation order.
pub fn generate_synthetic_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let n = cfg.n_rois;

    let base = template_from_partition(&partition(n, cfg.community_count, cfg.seed, 0));
    let alt = template_from_partition(&partition(n, cfg.community_count, cfg.seed, 1));
    let blended: Vec<f64> = base
        .iter()
        .zip(&alt)
        .map(|(&b, &a)| (1.0 - cfg.separability) * b + cfg.separability * a)
        .collect();
    let templates = [&base, &blended];

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (split, count, out) in [
        (Split::Train, cfg.n_per_class_train, &mut train),
        (Split::Test, cfg.n_per_class_test, &mut test),
    ] {
        for label in [ClassLabel::Lgg, ClassLabel::Hgg] {
            let template = templates[label.index()];
            // Stream id encodes (class, split) so subjects never share noise.
            let subject_stream = label.index() as u64 * 2 + split.index() as u64;
            for k in 0..count {
                let id = format!("{split}-{}-{k:02}", label.to_string().to_lowercase());
                out.push(subject_matrix(
                    template,
                    n,
                    cfg.noise_sigma,
                    cfg.seed,
                    subject_stream,
                    k as u64,
                    label,
                    id,
                )?);
            }
        }
    }
    Dataset::new(train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_produce_paper_scale_split() {
        let ds = generate_synthetic_dataset(&SynthConfig::default()).unwrap();
        assert_eq!(ds.train.len(), 30);
        assert_eq!(ds.test.len(), 30);
        for m in ds.train.iter().chain(&ds.test) {
            assert_eq!(m.n(), 105);
        }
        let lgg = ds.train.iter().filter(|m| m.label() == ClassLabel::Lgg).count();
        assert_eq!(lgg, 15);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let cfg = SynthConfig {
            n_rois: 24,
            n_per_class_train: 3,
            n_per_class_test: 2,
            ..SynthConfig::default()
        };
        let a = generate_synthetic_dataset(&cfg).unwrap();
        let b = generate_synthetic_dataset(&cfg).unwrap();
        for (x, y) in a.train.iter().zip(&b.train) {
            assert_eq!(x.values(), y.values());
        }
        let other = generate_synthetic_dataset(&SynthConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.train[0].values(), other.train[0].values());
    }

    #[test]
    fn full_separability_without_noise_is_deterministic_per_class() {
        let cfg = SynthConfig {
            n_rois: 30,
            n_per_class_train: 3,
            n_per_class_test: 1,
            separability: 1.0,
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        let ds = generate_synthetic_dataset(&cfg).unwrap();
        let lgg: Vec<_> = ds.train.iter().filter(|m| m.label() == ClassLabel::Lgg).collect();
        let hgg: Vec<_> = ds.train.iter().filter(|m| m.label() == ClassLabel::Hgg).collect();
        assert_eq!(lgg[0].values(), lgg[1].values());
        assert_eq!(lgg[1].values(), lgg[2].values());
        assert_eq!(hgg[0].values(), hgg[1].values());
        assert_ne!(lgg[0].values(), hgg[0].values());
    }

    #[test]
    fn zero_separability_is_indistinguishable_under_label_permutation() {
        let cfg = SynthConfig {
            n_rois: 32,
            n_per_class_train: 10,
            n_per_class_test: 0,
            separability: 0.0,
            ..SynthConfig::default()
        };
        let ds = generate_synthetic_dataset(&cfg).unwrap();
        let stat = |labels: &[usize]| -> f64 {
            // Frobenius norm of the difference of class means.
            let n2 = ds.train[0].values().len();
            let mut mean0 = vec![0.0f64; n2];
            let mut mean1 = vec![0.0f64; n2];
            let (mut c0, mut c1) = (0.0, 0.0);
            for (m, &l) in ds.train.iter().zip(labels) {
                let (dst, c) = if l == 0 {
                    (&mut mean0, &mut c0)
                } else {
                    (&mut mean1, &mut c1)
                };
                *c += 1.0;
                for (d, v) in dst.iter_mut().zip(m.values()) {
                    *d += v;
                }
            }
            mean0
                .iter()
                .zip(&mean1)
                .map(|(a, b)| (a / c0 - b / c1).powi(2))
                .sum::<f64>()
                .sqrt()
        };

        let observed_labels: Vec<usize> =
            ds.train.iter().map(|m| m.label().index()).collect();
        let observed = stat(&observed_labels);

        // Label-permutation oracle with a frozen stream.
        let mut rng = stream(99, 0xC0FFEE, 0, 0);
        let rounds = 500;
        let mut at_least_as_extreme = 0usize;
        let mut labels = observed_labels.clone();
        for _ in 0..rounds {
            for i in (1..labels.len()).rev() {
                let j = rng.random_range(0..=i);
                labels.swap(i, j);
            }
            if stat(&labels) >= observed {
                at_least_as_extreme += 1;
            }
        }
        let p = (at_least_as_extreme + 1) as f64 / (rounds + 1) as f64;
        assert!(p > 0.05, "permutation test distinguished identical classes, p = {p}");
    }

    #[test]
    fn mean_intensity_sits_near_one_half() {
        let ds = generate_synthetic_dataset(&SynthConfig::default()).unwrap();
        for label in [ClassLabel::Lgg, ClassLabel::Hgg] {
            let class: Vec<_> = ds
                .train
                .iter()
                .chain(&ds.test)
                .filter(|m| m.label() == label)
                .collect();
            let mean: f64 =
                class.iter().map(|m| m.mean_intensity()).sum::<f64>() / class.len() as f64;
            assert!(
                (0.40..=0.55).contains(&mean),
                "{label} mean intensity {mean} outside [0.40, 0.55]"
            );
        }
    }

    #[test]
    fn rescaling_generated_matrices_changes_nothing() {
        let cfg = SynthConfig {
            n_rois: 40,
            n_per_class_train: 2,
            n_per_class_test: 1,
            ..SynthConfig::default()
        };
        let ds = generate_synthetic_dataset(&cfg).unwrap();
        for m in ds.train.iter().chain(&ds.test) {
            let again = scale_and_threshold(m.values()).unwrap();
            assert_eq!(&again, m.values(), "second application altered '{}'", m.id());
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = SynthConfig {
            separability: 1.5,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic_dataset(&bad).is_err());
        let bad = SynthConfig {
            community_count: 0,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic_dataset(&bad).is_err());
    }
}
