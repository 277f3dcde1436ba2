use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_len: usize,
    pub stride: usize,
}

impl WindowConfig {
    /// Half-overlapping windows.
    pub fn new(window_len: usize) -> Self {
        Self {
            window_len,
            stride: (window_len / 2).max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 {
            return Err(Error::param(format!(
                "window length must be at least 2, got {}",
                self.window_len
            )));
        }
        if self.stride == 0 {
            return Err(Error::param("window stride must be at least 1"));
        }
        Ok(())
    }

    pub fn n_windows(&self, t: usize) -> usize {
        if t < self.window_len {
            0
        } else {
            (t - self.window_len) / self.stride + 1
        }
    }
}

/// Per-window mean and sample standard deviation (divisor `L - 1`) of every
/// column of a `T x d` series, as rows `(mu_1..mu_d, sigma_1..sigma_d)`.
pub fn window_features(series: ArrayView2<'_, f64>, cfg: WindowConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let (t, d) = series.dim();
    if t < cfg.window_len {
        return Err(Error::param(format!(
            "series has {t} samples, fewer than the window length {}",
            cfg.window_len
        )));
    }
    crate::dataset::check_finite(series)?;
    let len = cfg.window_len as f64;
    let n = cfg.n_windows(t);
    let mut out = Array2::zeros((n, 2 * d));
    for w in 0..n {
        let start = w * cfg.stride;
        let win = series.slice(s![start..start + cfg.window_len, ..]);
        for j in 0..d {
            let col = win.column(j);
            let mu = col.sum() / len;
            let ss: f64 = col.iter().map(|x| (x - mu) * (x - mu)).sum();
            out[[w, j]] = mu;
            out[[w, d + j]] = (ss / (len - 1.0)).sqrt();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hand_case() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let f = window_features(x.view(), WindowConfig { window_len: 2, stride: 2 }).unwrap();
        let r = 0.5f64.sqrt();
        assert_eq!(f, array![[1.5, r], [3.5, r]]);
    }

    #[test]
    fn constant_series_has_zero_spread() {
        let x = Array2::from_elem((10, 3), 7.25);
        let f = window_features(x.view(), WindowConfig { window_len: 4, stride: 3 }).unwrap();
        assert_eq!(f.nrows(), 3);
        assert!(f.slice(s![.., ..3]).iter().all(|&v| v == 7.25));
        assert!(f.slice(s![.., 3..]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn window_count_and_guards() {
        let cfg = WindowConfig { window_len: 60, stride: 30 };
        assert_eq!(cfg.n_windows(600), 19);
        assert_eq!(cfg.n_windows(59), 0);
        let x = Array2::<f64>::zeros((59, 2));
        assert!(window_features(x.view(), cfg).is_err());
        assert!(WindowConfig { window_len: 1, stride: 1 }.validate().is_err());
        assert!(WindowConfig { window_len: 3, stride: 0 }.validate().is_err());
        assert_eq!(WindowConfig::new(60).stride, 30);
    }
}
