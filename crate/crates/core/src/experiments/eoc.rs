use std::io::Write;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EocRow {
    pub param: f64,
    pub error: f64,
    /// Order between the previous row and this one; `None` on the first row
    /// and wherever an error entry is not positive.
    pub eoc: Option<f64>,
}

/// Errors against a discretization parameter, with experimental orders.
#[derive(Debug, Clone, PartialEq)]
pub struct EocTable {
    pub rows: Vec<EocRow>,
    /// Least-squares slope of `ln error` against `ln param` over all rows
    /// with positive error.
    pub slope: f64,
    /// Same fit without the last row, when at least two rows remain.
    pub slope_without_last: Option<f64>,
    /// Rows skipped because their error was not positive.
    pub skipped: Vec<usize>,
}

impl EocTable {
    pub fn eocs(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.eoc).collect()
    }

    /// CSV `param,error,eoc`; the first row has an empty `eoc` cell.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "param,error,eoc")?;
        for r in &self.rows {
            let eoc = r.eoc.map(|v| format!("{v:.16e}")).unwrap_or_default();
            writeln!(out, "{:.16e},{:.16e},{eoc}", r.param, r.error)?;
        }
        Ok(())
    }
}

/// `EOC_i = ln(e_i / e_{i+1}) / ln(p_i / p_{i+1})` for strictly decreasing
/// parameters.
pub fn compute_eoc(params: &[f64], errors: &[f64]) -> Result<EocTable> {
    if params.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            found: errors.len(),
        });
    }
    if params.len() < 2 {
        return Err(Error::InvalidArgument("need at least two rows".into()));
    }
    if params.iter().any(|p| !(*p > 0.0)) || params.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "parameters must be positive and strictly decreasing".into(),
        ));
    }
    let skipped: Vec<usize> = (0..errors.len()).filter(|&i| !(errors[i] > 0.0)).collect();
    let rows = (0..params.len())
        .map(|i| {
            let eoc = (i > 0 && errors[i - 1] > 0.0 && errors[i] > 0.0)
                .then(|| (errors[i - 1] / errors[i]).ln() / (params[i - 1] / params[i]).ln());
            EocRow {
                param: params[i],
                error: errors[i],
                eoc,
            }
        })
        .collect();
    let slope = fit_slope(params, errors).unwrap_or(f64::NAN);
    let slope_without_last = (params.len() >= 3)
        .then(|| fit_slope(&params[..params.len() - 1], &errors[..errors.len() - 1]))
        .flatten();
    Ok(EocTable {
        rows,
        slope,
        slope_without_last,
        skipped,
    })
}

/// Least-squares slope of `ln e` against `ln p` over entries with `e > 0`.
pub fn fit_slope(params: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = params
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(p, e)| (p.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
