//! Adaptive Gauss-Kronrod (7, 15) quadrature for small fixed-size vector
//! integrands.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Abscissae of one 15-point panel on `[a, b]`, ascending.
pub(crate) fn panel_nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [0.0; 15];
    for j in 0..7 {
        x[j] = c - h * XGK[j];
        x[14 - j] = c + h * XGK[j];
    }
    x[7] = c;
    x
}

/// Kronrod estimate and |Kronrod - Gauss| per component, given integrand
/// values at `panel_nodes(a, b)`.
pub(crate) fn panel_rule<const N: usize>(
    a: f64,
    b: f64,
    f: &[[f64; N]; 15],
) -> ([f64; N], [f64; N]) {
    let h = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut err = [0.0; N];
    for d in 0..N {
        let mut sk = WGK[7] * f[7][d];
        let mut sg = WG[3] * f[7][d];
        for j in 0..7 {
            let pair = f[j][d] + f[14 - j][d];
            sk += WGK[j] * pair;
            if j % 2 == 1 {
                sg += WG[j / 2] * pair;
            }
        }
        k[d] = sk * h;
        err[d] = ((sk - sg) * h).abs();
    }
    (k, err)
}

struct Panel<const N: usize> {
    lo: f64,
    hi: f64,
    est: [f64; N],
    err: [f64; N],
}

/// Globally adaptive integration on `[a, b]`: the panel with the largest
/// error is bisected until every component satisfies
/// `err <= max(abs_tol, rel_tol * |integral|)` or `max_panels` is reached.
/// Returns the integral and its error estimate.
pub fn integrate<const N: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> ([f64; N], [f64; N])
where
    F: FnMut(f64) -> [f64; N],
{
    let mut eval = |lo: f64, hi: f64| {
        let xs = panel_nodes(lo, hi);
        let mut vals = [[0.0; N]; 15];
        for (v, &x) in vals.iter_mut().zip(xs.iter()) {
            *v = f(x);
        }
        let (est, err) = panel_rule(lo, hi, &vals);
        Panel { lo, hi, est, err }
    };
    let mut panels = vec![eval(a, b)];
    loop {
        let mut total = [0.0; N];
        let mut total_err = [0.0; N];
        for p in &panels {
            for d in 0..N {
                total[d] += p.est[d];
                total_err[d] += p.err[d];
            }
        }
        let tol: Vec<f64> = (0..N).map(|d| abs_tol.max(rel_tol * total[d].abs())).collect();
        let done = (0..N).all(|d| total_err[d] <= tol[d]);
        if done || panels.len() >= max_panels {
            return (total, total_err);
        }
        let worst = panels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let score = (0..N).map(|d| p.err[d] / tol[d]).fold(0.0, f64::max);
                (i, score)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if !(mid > p.lo && mid < p.hi) {
            // cannot split further in floating point
            panels.push(p);
            let mut total = [0.0; N];
            let mut total_err = [0.0; N];
            for p in &panels {
                for d in 0..N {
                    total[d] += p.est[d];
                    total_err[d] += p.err[d];
                }
            }
            return (total, total_err);
        }
        panels.push(eval(p.lo, mid));
        panels.push(eval(mid, p.hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(|x| [x.powi(5), 1.0], 0.0, 2.0, 1e-14, 1e-14, 200);
        assert!((v[0] - 64.0 / 6.0).abs() < 1e-12);
        assert!((v[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kink_is_resolved() {
        let (v, _) = integrate(|x| [(x - 0.3).abs()], 0.0, 1.0, 1e-13, 1e-13, 500);
        assert!((v[0] - (0.045 + 0.245)).abs() < 1e-11);
    }
}
