//! Scale constants: `g`, the centering sequence `m_ℓ`, its linear
//! interpolation `m̂`, the decomposition depth `T` and the `r_n` sequence.

use crate::potential::G;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScaleError {
    #[error("scale arguments out of range: {0}")]
    Range(String),
}

/// Snap tolerance for floors and ceilings of logarithms such as `log e^{-1}`.
const SNAP: f64 = 1e-9;

fn floor_snap(x: f64) -> f64 {
    (x + SNAP).floor()
}

fn ceil_snap(x: f64) -> f64 {
    (x - SNAP).ceil()
}

/// `log⁺ x = max(log x, 0)`, with `log⁺ 0 = 0`.
pub fn log_plus(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else {
        x.ln()
    }
}

/// `m_ℓ = 2√g ℓ − (3/4)√g log⁺ ℓ`.
pub fn m_scale(l: f64) -> f64 {
    let sg = G.sqrt();
    2.0 * sg * l - 0.75 * sg * log_plus(l)
}

/// `m̂_ℓ = ((ℓ − k) m_n + (n − ℓ) m_k)/(n − k)` for `k <= ℓ <= n`.
pub fn mhat(n: f64, l: f64, k: f64) -> Result<f64, ScaleError> {
    if !(k <= l && l <= n) || n <= k {
        return Err(ScaleError::Range(format!("need k <= l <= n and k < n, got (n,l,k) = ({n},{l},{k})")));
    }
    Ok(((l - k) * m_scale(n) + (n - l) * m_scale(k)) / (n - k))
}

/// `∧_{T,k} = min(k, T − k)`.
pub fn wedge_t(t: f64, k: f64) -> f64 {
    k.min(t - k)
}

/// `∧_{n,l,k} = min(n − l, l − k)`.
pub fn wedge_nlk(n: f64, l: f64, k: f64) -> f64 {
    (n - l).min(l - k)
}

/// `T_{n−k} = ⌊n − k⌋ + ⌊log ε⌋ − ⌈log(ζ + 1/ε)⌉`.
pub fn t_count(n: f64, k: f64, eps: f64, zeta: f64) -> Result<i64, ScaleError> {
    if !(eps > 0.0 && eps < 1.0) || zeta < 0.0 || n < k {
        return Err(ScaleError::Range(format!("t_count({n}, {k}, {eps}, {zeta})")));
    }
    Ok((floor_snap(n - k) + floor_snap(eps.ln()) - ceil_snap((zeta + 1.0 / eps).ln())) as i64)
}

/// `⌊log ε⌋` with the same snapping as [`t_count`].
pub fn floor_log(x: f64) -> i64 {
    floor_snap(x.ln()) as i64
}

/// `⌈log x⌉` with the same snapping as [`t_count`].
pub fn ceil_log(x: f64) -> i64 {
    ceil_snap(x.ln()) as i64
}

/// Default `r_n = max(1, ⌊log(n + 1)⌋)`.
pub fn r_sequence(n: f64) -> i64 {
    (floor_snap((n + 1.0).ln()) as i64).max(1)
}

/// Residual `m̂(n,ℓ,k) − m(ℓ)` and the band
/// `[−2√g, (3/2)√g log⁺∧_{n,ℓ,k} + (3/2)√g]`.
pub fn mhat_band(n: f64, l: f64, k: f64) -> Result<(f64, f64, f64), ScaleError> {
    let sg = G.sqrt();
    let r = mhat(n, l, k)? - m_scale(l);
    Ok((r, -2.0 * sg, 1.5 * sg * log_plus(wedge_nlk(n, l, k)) + 1.5 * sg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_values() {
        assert_eq!(m_scale(0.0), 0.0);
        assert!((m_scale(1.0) - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!((m_scale(1.0) - 1.59577).abs() < 1e-5);
        let mut prev = m_scale(1.0);
        for i in 3..200 {
            let v = m_scale(i as f64 * 0.5);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn t_count_example() {
        assert_eq!(t_count(10.0, 0.0, (-1.0f64).exp(), 0.0).unwrap(), 8);
        assert!(t_count(1.0, 2.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn r_sequence_examples() {
        assert_eq!(r_sequence(0.0), 1);
        assert_eq!(r_sequence(3f64.exp() - 1.0), 3);
        let mut prev = 0;
        for n in 0..=100 {
            let r = r_sequence(n as f64);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn band_on_grid() {
        for n in 1..=30 {
            for k in 0..n {
                for l in k..=n {
                    let (r, lo, hi) = mhat_band(n as f64, l as f64, k as f64).unwrap();
                    assert!(r >= lo && r <= hi, "({n},{l},{k}): {r} not in [{lo},{hi}]");
                }
            }
        }
    }
}
