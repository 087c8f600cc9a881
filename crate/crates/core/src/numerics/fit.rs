use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through `(log m, log t_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least-squares line `y = slope x + intercept`, with R².
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit("need at least two matched points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all abscissae are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok((slope, intercept, r_squared))
}

/// Fits `t_m ≈ e^{intercept} m^{exponent}`.
pub fn fit_power_law(terms: &[(f64, f64)]) -> Result<PowerFit> {
    if terms.len() < 4 {
        return Err(Error::DegenerateFit("need at least four terms"));
    }
    if terms.iter().any(|&(m, t)| !(m > 0.0) || !(t > 0.0) || !t.is_finite()) {
        return Err(Error::DegenerateFit("indices and terms must be positive and finite"));
    }
    let xs: Vec<f64> = terms.iter().map(|(m, _)| m.ln()).collect();
    let ys: Vec<f64> = terms.iter().map(|(_, t)| t.ln()).collect();
    let (exponent, intercept, r_squared) = fit_line(&xs, &ys)?;
    Ok(PowerFit {
        exponent,
        intercept,
        r_squared,
        n_points: terms.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_square() {
        let terms: Vec<_> = (8..=64).map(|m| (m as f64, (m as f64).powi(-2))).collect();
        let fit = fit_power_law(&terms).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-6);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_sequence() {
        let terms: Vec<_> = (1..=10).map(|m| (m as f64, 5.0)).collect();
        let fit = fit_power_law(&terms).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
        assert!((fit.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn scaled_power_law() {
        let terms: Vec<_> = (8..=64).map(|m| (m as f64, 3.0 * (m as f64).powf(-1.5))).collect();
        let fit = fit_power_law(&terms).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-6);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        let same: Vec<_> = (0..5).map(|_| (4.0, 1.0)).collect();
        assert!(fit_power_law(&same).is_err());
        let with_zero = vec![(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)];
        assert!(fit_power_law(&with_zero).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }
}
