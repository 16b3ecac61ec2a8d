//! Adaptive Gauss-Kronrod quadrature.
//!
//! A 7/15-point Gauss-Kronrod rule with bisection of the interval carrying
//! the largest error estimate. Semi-infinite ranges go through the rational
//! substitution `x = a + t/(1-t)`, which is well behaved for integrands
//! decaying at least like a power law with exponent below -1.

use crate::error::{Error, Result};

// QUADPACK dqk15 abscissae/weights, positive half of [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        // Absolute floor 1e-12, relative 1e-6.
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-6,
            max_subdivisions: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadOptions {
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
}

/// One Gauss-Kronrod 7/15 pass over [a, b]; returns (value, error estimate).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    let mut samples = [0.0f64; 15];
    samples[7] = fc;

    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        samples[j] = f1;
        samples[14 - j] = f2;
        let fsum = f1 + f2;
        kronrod += WGK[j] * fsum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for (j, &s) in samples.iter().enumerate().take(7) {
        res_asc += WGK[j] * ((s - mean).abs() + (samples[14 - j] - mean).abs());
    }

    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0f64.min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Adaptive integral of `f` over the finite interval [a, b].
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::parameter("integrate: bounds must be finite"));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_err: 0.0,
            evaluations: 0,
            subdivisions: 0,
        });
    }

    struct Seg {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (v0, e0) = gk15(&f, a, b);
    let mut segs = vec![Seg {
        a,
        b,
        value: v0,
        err: e0,
    }];
    let mut evals = 15;
    let mut subdivisions = 0;

    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= tol {
            return Ok(QuadResult {
                value: total,
                abs_err: err,
                evaluations: evals,
                subdivisions,
            });
        }
        if subdivisions >= opts.max_subdivisions {
            return Err(Error::numerical(format!(
                "quadrature did not converge: err={err:.3e} > tol={tol:.3e} after {subdivisions} subdivisions ({evals} evaluations)"
            )));
        }
        // split the interval with the largest error estimate
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Seg { a, b, .. } = segs.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return Err(Error::numerical(
                "quadrature interval collapsed below machine precision".to_string(),
            ));
        }
        let (v1, e1) = gk15(&f, a, mid);
        let (v2, e2) = gk15(&f, mid, b);
        evals += 30;
        subdivisions += 1;
        segs.push(Seg {
            a,
            b: mid,
            value: v1,
            err: e1,
        });
        segs.push(Seg {
            a: mid,
            b,
            value: v2,
            err: e2,
        });
    }
}

/// Integral over [pts[0], pts[last]] split at interior breakpoints, so kinks
/// (piecewise definitions, sqrt endpoints) never sit inside a panel.
pub fn integrate_segments(
    f: impl Fn(f64) -> f64 + Copy,
    pts: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if pts.len() < 2 {
        return Err(Error::parameter("integrate_segments: need >= 2 breakpoints"));
    }
    let mut value = 0.0;
    let mut abs_err = 0.0;
    let mut evaluations = 0;
    let mut subdivisions = 0;
    for w in pts.windows(2) {
        let r = integrate(f, w[0], w[1], opts)?;
        value += r.value;
        abs_err += r.abs_err;
        evaluations += r.evaluations;
        subdivisions += r.subdivisions;
    }
    Ok(QuadResult {
        value,
        abs_err,
        evaluations,
        subdivisions,
    })
}

/// Integral of `f` over [a, inf) via `x = a + t/(1-t)`.
pub fn integrate_to_inf(
    f: impl Fn(f64) -> f64,
    a: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let g = move |t: f64| {
        let u = 1.0 - t;
        let x = a + t / u;
        f(x) / (u * u)
    };
    integrate(g, 0.0, 1.0, opts)
}

/// 2-D integral of a radially symmetric function over the plane:
/// `2*pi * int f(r) r dr` on [0, inf), split at the given radii.
pub fn integrate_radial_plane(
    f: impl Fn(f64) -> f64 + Copy,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    let weighted = move |r: f64| f(r) * r;
    let mut pts: Vec<f64> = vec![0.0];
    pts.extend(breakpoints.iter().copied().filter(|&r| r > 0.0));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut finite = integrate_segments(weighted, &pts, opts)?;
    let tail = integrate_to_inf(weighted, *pts.last().unwrap(), opts)?;
    finite.value = std::f64::consts::TAU * (finite.value + tail.value);
    finite.abs_err = std::f64::consts::TAU * (finite.abs_err + tail.abs_err);
    finite.evaluations += tail.evaluations;
    finite.subdivisions += tail.subdivisions;
    Ok(finite)
}
