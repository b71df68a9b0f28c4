//! Small scalar helpers shared across modules.

/// Pairwise (cascade) summation. Deterministic for a given input order.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `|x|^(p-1) x`, with an integer fast path.
#[inline]
pub(crate) fn signed_pow(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() < 64.0 {
        let k = p as i32;
        if k % 2 == 1 {
            x.powi(k)
        } else {
            x.abs().powi(k - 1) * x
        }
    } else {
        x.abs().powf(p - 1.0) * x
    }
}

/// `x^e` for a strictly positive base.
#[inline]
pub(crate) fn ppow(x: f64, e: f64) -> f64 {
    debug_assert!(x > 0.0, "positive base required, got {x}");
    (e * x.ln()).exp()
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = pairwise_sum(xs) / nf;
    let my = pairwise_sum(ys) / nf;
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let syy: Vec<f64> = ys.iter().map(|y| (y - my) * (y - my)).collect();
    let (sxx, sxy, syy) = (pairwise_sum(&sxx), pairwise_sum(&sxy), pairwise_sum(&syy));
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= f64::MIN_POSITIVE {
        1.0
    } else {
        let ss_res: Vec<f64> = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let e = y - intercept - slope * x;
                e * e
            })
            .collect();
        1.0 - pairwise_sum(&ss_res) / syy
    };
    Some(LineFit { slope, intercept, r2 })
}
