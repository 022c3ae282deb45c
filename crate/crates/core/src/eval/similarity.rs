use serde::Serialize;

use crate::corpus::N_CLASSES;
use crate::features::{dense_mean, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassSimilarity {
    pub class: usize,
    pub n_augmented: usize,
    /// Mean cosine of augmented vectors to their own class centroid.
    pub same_mean: f64,
    /// Largest mean cosine to another class's centroid.
    pub other_max_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityReport {
    pub classes: Vec<ClassSimilarity>,
    pub diagnostics: Vec<String>,
}

impl SimilarityReport {
    /// Means over classes with at least one augmented vector.
    pub fn averages(&self) -> Option<(f64, f64)> {
        let used: Vec<&ClassSimilarity> = self.classes.iter().filter(|c| c.n_augmented > 0).collect();
        if used.is_empty() {
            return None;
        }
        let n = used.len() as f64;
        Some((
            used.iter().map(|c| c.same_mean).sum::<f64>() / n,
            used.iter().map(|c| c.other_max_mean).sum::<f64>() / n,
        ))
    }
}

fn cosine_dense(v: &SparseVector, c: &[f64], c_norm: f64) -> f64 {
    let vn = v.norm();
    if vn == 0.0 || c_norm == 0.0 {
        return 0.0;
    }
    v.iter().map(|(i, w)| w * c[i]).sum::<f64>() / (vn * c_norm)
}

/// Compares augmented vectors with the centroids of the original vectors of
/// each class. Inputs are `(class, vector)` pairs.
pub fn centroid_similarity(
    augmented: &[(usize, SparseVector)],
    originals: &[(usize, SparseVector)],
) -> SimilarityReport {
    let dims = originals.first().or(augmented.first()).map(|(_, v)| v.dims()).unwrap_or(0);
    let mut diagnostics = Vec::new();
    let centroids: Vec<Option<(Vec<f64>, f64)>> = (0..N_CLASSES)
        .map(|k| {
            let members: Vec<&SparseVector> = originals.iter().filter(|(c, _)| *c == k).map(|(_, v)| v).collect();
            if members.is_empty() {
                diagnostics.push(format!("class {k} has no original vectors; excluded"));
                return None;
            }
            let c = dense_mean(dims, members);
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            Some((c, norm))
        })
        .collect();

    let mut classes = Vec::new();
    for (k, own) in centroids.iter().enumerate() {
        let Some((own_c, own_n)) = own else { continue };
        let vs: Vec<&SparseVector> = augmented.iter().filter(|(c, _)| *c == k).map(|(_, v)| v).collect();
        let mean_to = |c: &[f64], n: f64| {
            if vs.is_empty() {
                0.0
            } else {
                vs.iter().map(|v| cosine_dense(v, c, n)).sum::<f64>() / vs.len() as f64
            }
        };
        let other_max_mean = centroids
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .filter_map(|(_, o)| o.as_ref().map(|(c, n)| mean_to(c, *n)))
            .fold(f64::NEG_INFINITY, f64::max);
        classes.push(ClassSimilarity {
            class: k,
            n_augmented: vs.len(),
            same_mean: mean_to(own_c, *own_n),
            other_max_mean: if other_max_mean.is_finite() { other_max_mean } else { 0.0 },
        });
    }
    SimilarityReport { classes, diagnostics }
}
