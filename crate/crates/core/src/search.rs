//! Golden-section minimisation on an interval.

use crate::error::{Error, Result};

pub const DEFAULT_TOL_X: f64 = 1e-4;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub gamma: f64,
    pub value: f64,
    pub evaluations: usize,
    /// Bracket after every reduction, starting with the input interval.
    pub brackets: Vec<(f64, f64)>,
    /// Every `(x, f(x))` probe in evaluation order.
    pub probes: Vec<(f64, f64)>,
}

/// Upper bound on the evaluations [`golden_section`] makes.
pub fn max_evaluations(lo: f64, hi: f64, tol_x: f64) -> usize {
    (((hi - lo) / tol_x).ln() / (1.0 / INV_PHI).ln()).ceil().max(0.0) as usize + 2
}

/// Shrinks `[lo, hi]` until it is at most `tol_x` wide.
///
/// The best interior probe is returned rather than the final midpoint, which
/// would cost one more evaluation. Every bracket end that was itself probed
/// has a value no smaller than the result.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol_x: f64) -> Result<SearchResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidBracket(lo, hi));
    }
    if !(tol_x > 0.0) {
        return Err(Error::InvalidParameter(format!("tol_x {tol_x} must be positive")));
    }
    let mut probes = Vec::new();
    let mut eval = |x: f64, probes: &mut Vec<(f64, f64)>| -> Result<f64> {
        let y = f(x)?;
        probes.push((x, y));
        Ok(y)
    };
    let (mut a, mut b) = (lo, hi);
    let mut brackets = vec![(a, b)];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c, &mut probes)?;
    let mut fd = eval(d, &mut probes)?;
    loop {
        if fc <= fd {
            b = d;
            (d, fd) = (c, fc);
            brackets.push((a, b));
            if b - a <= tol_x {
                break;
            }
            c = b - INV_PHI * (b - a);
            fc = eval(c, &mut probes)?;
        } else {
            a = c;
            (c, fc) = (d, fd);
            brackets.push((a, b));
            if b - a <= tol_x {
                break;
            }
            d = a + INV_PHI * (b - a);
            fd = eval(d, &mut probes)?;
        }
    }
    let (gamma, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok(SearchResult {
        gamma,
        value,
        evaluations: probes.len(),
        brackets,
        probes,
    })
}
