use serde::{Deserialize, Serialize};

use crate::Real;

const MIN_STD: f64 = 1e-12;

/// Per-column z-scores for features and the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Standardizer<T: Real> {
    pub feature_mean: Vec<T>,
    pub feature_std: Vec<T>,
    pub target_mean: T,
    pub target_std: T,
}

fn mean_std<T: Real>(values: impl Iterator<Item = T> + Clone) -> (T, T) {
    let n = T::from_count(values.clone().count().max(1));
    let mean = values.clone().sum::<T>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var.sqrt().max(T::lit(MIN_STD)))
}

impl<T: Real> Standardizer<T> {
    /// Population mean and standard deviation (clamped at 1e-12) of each column.
    pub fn fit(features: &[Vec<T>], targets: &[T]) -> Self {
        let dim = features.first().map_or(0, |f| f.len());
        let (feature_mean, feature_std) = (0..dim).map(|j| mean_std(features.iter().map(move |f| f[j]))).unzip();
        let (target_mean, target_std) = mean_std(targets.iter().copied());
        Self { feature_mean, feature_std, target_mean, target_std }
    }

    pub fn features(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.feature_mean).zip(&self.feature_std).map(|((v, m), s)| (*v - *m) / *s).collect()
    }

    pub fn target(&self, y: T) -> T {
        (y - self.target_mean) / self.target_std
    }

    pub fn inverse_target(&self, z: T) -> T {
        z * self.target_std + self.target_mean
    }

    pub fn inverse_features(&self, z: &[T]) -> Vec<T> {
        z.iter().zip(&self.feature_mean).zip(&self.feature_std).map(|((v, m), s)| *v * *s + *m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardized_columns_have_unit_scale() {
        let xs: Vec<Vec<f64>> = (0..37).map(|i| vec![i as f64 * 3.1 + 100.0, (i as f64).sin() * 1e-3, 5.0]).collect();
        let ys: Vec<f64> = (0..37).map(|i| 1e4 + i as f64).collect();
        let s = Standardizer::fit(&xs, &ys);
        let z: Vec<Vec<f64>> = xs.iter().map(|x| s.features(x)).collect();
        for j in 0..2 {
            let (m, sd) = mean_std(z.iter().map(|r| r[j]));
            assert!(m.abs() < 1e-10);
            assert!((sd - 1.0).abs() < 1e-10);
        }
        // constant column: clamped scale, zero output
        assert_eq!(s.feature_std[2], MIN_STD);
        assert!(z.iter().all(|r| r[2] == 0.0));
        for (x, y) in xs.iter().zip(&ys) {
            let back = s.inverse_features(&s.features(x));
            for (a, b) in back.iter().zip(x) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            assert!((s.inverse_target(s.target(*y)) - y).abs() <= 1e-12 * y.abs());
        }
    }
}
