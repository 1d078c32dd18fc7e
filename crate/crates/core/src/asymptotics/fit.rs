use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Fits `y = C x^slope` by ordinary least squares in log-log space.
/// Points with non-positive coordinates are skipped.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { got: n });
    }
    let nf = n as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        points_used: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(1.5)))
            .collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.points_used, 4);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(Error::InsufficientPoints { got: 2 })
        ));
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0), (0.0, 3.0)]).is_err());
    }

    #[test]
    fn noisy_fit_has_r_squared_below_one() {
        let pts = [(1.0, 1.0), (10.0, 30.0), (100.0, 50.0), (1000.0, 2000.0)];
        let fit = fit_power_law(&pts).unwrap();
        assert!(fit.r_squared < 1.0 && fit.r_squared > 0.0);
    }
}
