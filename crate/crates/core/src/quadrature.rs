//! Numerical integration over finite and infinite ranges.
//!
//! Panels use the double-exponential rule from the `quadrature` crate and
//! are bisected until each meets its share of the tolerance. Infinite
//! ranges go through `x = c + s·tan t`, which turns Lorentzian tails into a
//! smooth, bounded integrand.

use num_complex::Complex64 as C64;

const MAX_DEPTH: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: u64,
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Integral {
    let o = quadrature::integrate(f, a, b, tol);
    let here = Integral {
        value: o.integral,
        error: o.error_estimate,
        evaluations: o.num_function_evaluations as u64,
    };
    if o.error_estimate <= tol || depth == 0 {
        return here;
    }
    let m = 0.5 * (a + b);
    let l = panel(f, a, m, 0.5 * tol, depth - 1);
    let r = panel(f, m, b, 0.5 * tol, depth - 1);
    Integral {
        value: l.value + r.value,
        error: l.error + r.error,
        evaluations: here.evaluations + l.evaluations + r.evaluations,
    }
}

/// `∫_a^b f` over a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Integral {
    panel(&f, a, b, abs_tol, MAX_DEPTH)
}

/// `∫_lo^hi f` where either bound may be infinite. `center` and `scale`
/// set the tan substitution (put `center` among the features, `scale` near
/// their width); `breakpoints` split the range at known peaks.
pub fn integrate_mapped<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    center: f64,
    scale: f64,
    breakpoints: &[f64],
    abs_tol: f64,
) -> Integral {
    assert!(scale > 0.0, "scale must be positive");
    let to_t = |x: f64| ((x - center) / scale).atan();
    let g = |t: f64| {
        let c = t.cos();
        f(center + scale * t.tan()) * scale / (c * c)
    };
    let mut cuts: Vec<f64> = vec![to_t(lo)];
    cuts.extend(breakpoints.iter().filter(|&&x| x > lo && x < hi).map(|&x| to_t(x)));
    cuts.push(to_t(hi));
    cuts.sort_by(f64::total_cmp);
    let share = abs_tol / (cuts.len() - 1) as f64;
    let mut total = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in cuts.windows(2) {
        let p = panel(&g, w[0], w[1], share, MAX_DEPTH);
        total.value += p.value;
        total.error += p.error;
        total.evaluations += p.evaluations;
    }
    total
}

/// Complex-valued version of [`integrate_mapped`] over the whole real line.
pub fn integrate_real_line_complex<F: Fn(f64) -> C64>(
    f: F,
    center: f64,
    scale: f64,
    breakpoints: &[f64],
    abs_tol: f64,
) -> (C64, f64) {
    let re = integrate_mapped(|x| f(x).re, f64::NEG_INFINITY, f64::INFINITY, center, scale, breakpoints, abs_tol);
    let im = integrate_mapped(|x| f(x).im, f64::NEG_INFINITY, f64::INFINITY, center, scale, breakpoints, abs_tol);
    (C64::new(re.value, im.value), re.error + im.error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial() {
        let r = integrate(|x| x * x, 0.0, 3.0, 1e-12);
        assert!((r.value - 9.0).abs() < 1e-12);
    }

    #[test]
    fn lorentzian_whole_line() {
        for &w in &[1e-2, 1.0, 3.0] {
            let r = integrate_mapped(
                |x| w / ((x - 1000.0).powi(2) + w * w),
                f64::NEG_INFINITY,
                f64::INFINITY,
                1000.0,
                1.0,
                &[],
                1e-12,
            );
            assert!((r.value - PI).abs() < 1e-9, "w={w}: {}", r.value);
        }
    }

    #[test]
    fn half_line_with_two_peaks() {
        let f = |x: f64| 1.0 / ((x - 1000.0).powi(2) + 1.0) + 3.0 / ((x - 1010.0).powi(2) + 9.0);
        let r = integrate_mapped(f, 0.0, f64::INFINITY, 1005.0, 5.0, &[1000.0, 1010.0], 1e-12);
        let exact = PI + 1000f64.atan() + (1010.0f64 / 3.0).atan();
        assert!((r.value - exact).abs() < 1e-9, "{} vs {exact}", r.value);
    }

    #[test]
    fn complex_resolvent_product() {
        // i∫ 1/((x−a+i)(b−x−a+i)) dx/2π with a=0 → 1/(b−2a+2i)
        let b = 3.0;
        let f = |x: f64| {
            let g1 = 1.0 / C64::new(x, 1.0);
            let g2 = 1.0 / C64::new(b - x, 1.0);
            C64::new(0.0, 1.0) * g1 * g2 / (2.0 * PI)
        };
        let (v, _) = integrate_real_line_complex(f, 1.5, 2.0, &[0.0, b], 1e-12);
        let want = 1.0 / C64::new(b, 2.0);
        assert!((v - want).norm() < 1e-9, "{v} vs {want}");
    }
}
