use crate::error::Result;

const MAX_DEPTH: u32 = 40;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub(crate) fn simpson(f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a)?, f(m)?, f(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Smallest `x` in `[a, b]` with `g(x) ≥ 0` for nondecreasing `g`, to width `tol`.
pub(crate) fn bisect(g: &mut dyn FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    while b - a > tol {
        let m = 0.5 * (a + b);
        if g(m)? >= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_smooth_and_kinked() {
        let v = simpson(&mut |x| Ok(x.sin()), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let v = simpson(&mut |x| Ok((x - 0.3).abs()), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(&mut |x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }
}
