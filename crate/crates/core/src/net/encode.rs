use serde::{Deserialize, Serialize};

use super::Mlp;
use crate::env::Task;
use crate::{Error, Result};

const GAIN_FLOOR: f64 = 1e-30;

/// Normalized inputs are clipped to `[-Z_CLIP, Z_CLIP]`.
pub const Z_CLIP: f64 = 4.0;

pub fn gain_db(g: f64) -> f64 {
    10.0 * g.max(GAIN_FLOOR).log10()
}

/// Un-normalized features for one UE: `[gain_dB x M, F, D, W x M]`.
pub fn raw_features(gains: &[f64], task: &Task, avg_alloc: &[f64]) -> Vec<f64> {
    debug_assert_eq!(gains.len(), avg_alloc.len());
    let mut x = Vec::with_capacity(2 * gains.len() + 2);
    x.extend(gains.iter().map(|&g| gain_db(g)));
    x.push(task.required_cycles);
    x.push(task.data_bits);
    x.extend_from_slice(avg_alloc);
    x
}

/// Per-feature z-score statistics. Zero-variance features are only centred.
/// Scores are clipped to [`Z_CLIP`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn fit<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let Some(first) = rows.first() else {
            return Err(Error::InvalidArgument("cannot fit normalization on zero rows".into()));
        };
        let dim = first.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("feature rows differ in length".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            mean.iter_mut().zip(*r).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(*r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let std = var
            .into_iter()
            .zip(&mean)
            .map(|(v, m)| {
                let sd = v.sqrt();
                // variance indistinguishable from rounding noise counts as zero
                if sd > 1e-12 * m.abs().max(1e-300) { sd } else { 1.0 }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| ((x - m) / s).clamp(-Z_CLIP, Z_CLIP)).collect()
    }

    /// Switch `net` from these statistics to `next` without changing its outputs for inputs
    /// that are inside the clip range under both.
    ///
    /// The first layer absorbs the affine change: `W' = W * diag(next.std / std)` and
    /// `b' = b + W * ((next.mean - mean) / std)`.
    pub fn transfer(&self, next: &NormStats, net: &mut Mlp) -> Result<()> {
        if next.dim() != self.dim() || net.input_dim() != self.dim() {
            return Err(Error::Shape("normalization dimension mismatch".into()));
        }
        let first = &mut net.layers_mut()[0];
        for o in 0..first.outputs {
            let row = &mut first.weights[o * first.inputs..(o + 1) * first.inputs];
            let mut shift = 0.0;
            for k in 0..row.len() {
                shift += row[k] * (next.mean[k] - self.mean[k]) / self.std[k];
                row[k] *= next.std[k] / self.std[k];
            }
            first.bias[o] += shift;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_for;
    use rand::Rng;

    #[test]
    fn fit_and_apply_standardize() {
        let rows = [vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 4.0], vec![5.0, 5.0, 9.0]];
        let s = NormStats::fit(rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(s.mean[0], 3.0);
        assert_eq!(s.std[1], 1.0);
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r)).collect();
        for k in [0, 2] {
            let m: f64 = z.iter().map(|r| r[k]).sum::<f64>() / 3.0;
            let v: f64 = z.iter().map(|r| r[k] * r[k]).sum::<f64>() / 3.0;
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        }
        assert!(z.iter().all(|r| r[1] == 0.0));
        assert_eq!(s.apply(&[1e6, 5.0, -1e6]), vec![Z_CLIP, 0.0, -Z_CLIP]);
    }

    #[test]
    fn features_layout() {
        let task = Task { required_cycles: 1e9, data_bits: 2e5, weight: 1.0 };
        let x = raw_features(&[1e-3, 1.0], &task, &[7.0, 8.0]);
        assert_eq!(x, vec![-30.0, 0.0, 1e9, 2e5, 7.0, 8.0]);
        assert_eq!(gain_db(0.0), -300.0);
    }

    #[test]
    fn transfer_preserves_outputs() {
        let mut rng = rng_for(4, 0);
        let mut net = Mlp::new(2, &[8], 4);
        let old = NormStats { mean: vec![1.0, -2.0, 3.0, 0.5, 10.0, -1.0], std: vec![2.0, 0.5, 1.0, 3.0, 4.0, 1.0] };
        let new = NormStats { mean: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], std: vec![1.5, 2.5, 0.1, 1.0, 7.0, 2.0] };
        let raws: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                (0..6)
                    .map(|k| {
                        let lo = (old.mean[k] - 3.0 * old.std[k]).max(new.mean[k] - 3.0 * new.std[k]);
                        let hi = (old.mean[k] + 3.0 * old.std[k]).min(new.mean[k] + 3.0 * new.std[k]);
                        rng.gen_range(lo..hi)
                    })
                    .collect()
            })
            .collect();
        let before: Vec<_> = raws.iter().map(|r| net.forward(&old.apply(r))).collect();
        old.transfer(&new, &mut net).unwrap();
        for (r, b) in raws.iter().zip(&before) {
            let a = net.forward(&new.apply(r));
            for (p, q) in a.assoc_probs.iter().zip(&b.assoc_probs) {
                assert!((p - q).abs() < 1e-9);
            }
            assert!((a.fraction - b.fraction).abs() < 1e-9);
        }
    }
}
