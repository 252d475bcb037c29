use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Peak,
    Dip,
}

impl std::str::FromStr for Extremum {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "peak" => Ok(Extremum::Peak),
            "dip" => Ok(Extremum::Dip),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("curve needs at least 5 finite points with strictly increasing abscissa")]
    BadCurve,
    #[error("no extremum of the requested kind above the baseline")]
    NoExtremum,
    #[error("extremum is not unique")]
    NotUnique,
    #[error("extremum lies on the grid boundary")]
    AtBoundary,
    #[error("half maximum is not crossed on the {side} side within the grid")]
    HalfMaxOutside { side: &'static str },
}

/// Result of a half-maximum fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linewidth {
    pub fwhm: f64,
    pub center: f64,
    pub extremum: f64,
    pub baseline: f64,
    pub left: f64,
    pub right: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Full width at half maximum of the global peak (or dip).
///
/// The baseline is the median of the outer 10% of points (5% from each
/// end). Crossings are interpolated linearly between samples.
pub fn fit_linewidth(curve: &[(f64, f64)], kind: Extremum) -> Result<Linewidth, FitError> {
    let n = curve.len();
    if n < 5
        || curve.iter().any(|(x, y)| !x.is_finite() || !y.is_finite())
        || curve.windows(2).any(|w| !(w[0].0 < w[1].0))
    {
        return Err(FitError::BadCurve);
    }
    // work with a peak in every case
    let sign = match kind {
        Extremum::Peak => 1.0,
        Extremum::Dip => -1.0,
    };
    let y: Vec<f64> = curve.iter().map(|p| sign * p.1).collect();
    let x: Vec<f64> = curve.iter().map(|p| p.0).collect();

    let edge = ((0.05 * n as f64).ceil() as usize).max(1);
    let outer: Vec<f64> = y[..edge].iter().chain(&y[n - edge..]).copied().collect();
    let baseline = median(outer);

    let top = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let at: Vec<usize> = (0..n).filter(|&k| y[k] == top).collect();
    if !(top > baseline) {
        return Err(FitError::NoExtremum);
    }
    if at.len() > 1 {
        return Err(FitError::NotUnique);
    }
    let k = at[0];
    if k == 0 || k == n - 1 {
        return Err(FitError::AtBoundary);
    }
    let half = baseline + 0.5 * (top - baseline);
    let cross = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);

    let left = (0..k)
        .rev()
        .find(|&j| y[j] <= half)
        .map(|j| cross(j, j + 1))
        .ok_or(FitError::HalfMaxOutside { side: "left" })?;
    let right = (k + 1..n)
        .find(|&j| y[j] <= half)
        .map(|j| cross(j - 1, j))
        .ok_or(FitError::HalfMaxOutside { side: "right" })?;
    Ok(Linewidth {
        fwhm: right - left,
        center: x[k],
        extremum: sign * top,
        baseline: sign * baseline,
        left,
        right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz(n: usize, span: f64, fwhm: f64, amp: f64, offset: f64) -> Vec<(f64, f64)> {
        let hw = fwhm / 2.0;
        (0..n)
            .map(|k| {
                let x = -span + 2.0 * span * k as f64 / (n - 1) as f64;
                (x, offset + amp * hw * hw / (x * x + hw * hw))
            })
            .collect()
    }

    #[test]
    fn lorentzian_width() {
        let c = lorentz(2001, 20.0, 1.0, 1.0, 0.0);
        let w = fit_linewidth(&c, Extremum::Peak).unwrap();
        assert!((w.fwhm - 1.0).abs() < 1e-3, "{}", w.fwhm);
        let c: Vec<_> = lorentz(2001, 20.0, 1.0, -0.7, 0.3);
        let w = fit_linewidth(&c, Extremum::Dip).unwrap();
        assert!((w.fwhm - 1.0).abs() < 1e-3);
        assert!((w.extremum + 0.4).abs() < 1e-12);
    }

    #[test]
    fn failure_modes() {
        let flat: Vec<_> = (0..50).map(|k| (k as f64, 1.0)).collect();
        assert_eq!(fit_linewidth(&flat, Extremum::Peak), Err(FitError::NoExtremum));
        let ramp: Vec<_> = (0..50).map(|k| (k as f64, k as f64)).collect();
        assert_eq!(fit_linewidth(&ramp, Extremum::Peak), Err(FitError::AtBoundary));
        let mut twin: Vec<_> = (0..50).map(|k| (k as f64, 0.0)).collect();
        twin[20].1 = 1.0;
        twin[30].1 = 1.0;
        assert_eq!(fit_linewidth(&twin, Extremum::Peak), Err(FitError::NotUnique));
        // high shoulder on the left never falls to half maximum
        let step: Vec<_> = (0..40)
            .map(|k| (k as f64, if k == 10 { 1.0 } else if k < 20 { 0.9 } else { 0.0 }))
            .collect();
        assert_eq!(
            fit_linewidth(&step, Extremum::Peak),
            Err(FitError::HalfMaxOutside { side: "left" })
        );
        let unsorted = vec![(1.0, 0.0), (0.0, 1.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)];
        assert_eq!(fit_linewidth(&unsorted, Extremum::Peak), Err(FitError::BadCurve));
    }
}
