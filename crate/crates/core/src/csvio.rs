//! CSV and flat key-value serialization. All numeric output is decimal
//! with 9 significant digits and locale-independent.

use crate::asymptotics::AsymptoticResult;
use crate::mac::TransmitterSet;
use crate::outage::OutageEstimate;
use crate::pointprocess::{Model, PointPattern};

/// 9-significant-digit formatting; plain decimal in a wide magnitude
/// range, scientific outside it.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

fn axis_header(dim: usize) -> &'static str {
    match dim {
        1 => "x",
        2 => "x,y",
        _ => "x,y,z",
    }
}

/// Pattern coordinates: header row `x,y[,z]`, one point per line.
pub fn pattern_csv(p: &PointPattern) -> String {
    let dim = p.window.dim;
    let mut out = String::with_capacity(24 * p.len() + 8);
    out.push_str(axis_header(dim));
    out.push('\n');
    for pt in &p.points {
        for (i, v) in pt.iter().take(dim).enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_g9(*v));
        }
        out.push('\n');
    }
    out
}

fn model_fields(model: &Model) -> Vec<(&'static str, String)> {
    match *model {
        Model::Ppp { intensity } => vec![
            ("model", "ppp".to_string()),
            ("intensity", fmt_g9(intensity)),
        ],
        Model::MaternII {
            parent_intensity,
            hardcore_radius,
        } => vec![
            ("model", "matern2".to_string()),
            ("parent_intensity", fmt_g9(parent_intensity)),
            ("hardcore_radius", fmt_g9(hardcore_radius)),
        ],
        Model::Thomas { spec } => vec![
            ("model", "thomas".to_string()),
            ("mu", fmt_g9(spec.mu)),
            ("c", fmt_g9(spec.c)),
            ("sigma", fmt_g9(spec.sigma)),
        ],
        Model::Lattice { spacing, rotated } => vec![
            ("model", "lattice".to_string()),
            ("spacing", fmt_g9(spacing)),
            ("rotated", rotated.to_string()),
        ],
        Model::DerivedByMac { base_intensity } => vec![
            ("model", "derived-by-mac".to_string()),
            ("base_intensity", fmt_g9(base_intensity)),
        ],
    }
}

/// Sidecar metadata record: flat `key = value` lines.
pub fn pattern_metadata(p: &PointPattern) -> String {
    let mut lines = model_fields(&p.model);
    lines.push(("intensity_nominal", fmt_g9(p.intensity)));
    lines.push(("seed", p.seed.to_string()));
    lines.push(("points", p.len().to_string()));
    lines.push(("dim", p.window.dim.to_string()));
    let sides = p.window.sides[..p.window.dim]
        .iter()
        .map(|s| fmt_g9(*s))
        .collect::<Vec<_>>()
        .join(",");
    lines.push(("window", sides));
    lines.push((
        "wrap",
        match p.window.wrap {
            crate::geom::Wrap::Toroidal => "toroidal".to_string(),
            crate::geom::Wrap::GuardBand { band } => format!("guard-band:{}", fmt_g9(band)),
        },
    ));
    lines.push(("rng", crate::rng::RNG_SCHEME.to_string()));
    let mut out = String::new();
    for (k, v) in lines {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    }
    out
}

/// Joint export of a base pattern and the transmitters selected from it:
/// same rows as the base pattern plus an `active` 0/1 column.
pub fn pattern_with_active_csv(base: &PointPattern, ts: &TransmitterSet) -> String {
    let dim = base.window.dim;
    let mut out = String::with_capacity(26 * base.len() + 16);
    out.push_str(axis_header(dim));
    out.push_str(",active\n");
    let mut k = 0usize;
    for pt in &base.points {
        let active = k < ts.pattern.points.len() && ts.pattern.points[k] == *pt;
        if active {
            k += 1;
        }
        for (i, v) in pt.iter().take(dim).enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_g9(*v));
        }
        out.push_str(if active { ",1\n" } else { ",0\n" });
    }
    out
}

pub const ESTIMATE_HEADER: &str = "eta,p_success,std_err,n_reps,estimator,scheme,alpha,theta,seed";

pub fn estimate_row(
    est: &OutageEstimate,
    scheme: &str,
    alpha: f64,
    theta: f64,
    seed: u64,
) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        fmt_g9(est.eta),
        fmt_g9(est.p_success),
        fmt_g9(est.std_err),
        est.n_reps,
        est.estimator.tag(),
        scheme,
        fmt_g9(alpha),
        fmt_g9(theta),
        seed
    )
}

pub const ASYMPTOTIC_HEADER: &str = "scheme,gamma,kappa,provenance,alpha,theta";

pub fn asymptotic_row(r: &AsymptoticResult, alpha: f64, theta: f64) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.scheme,
        fmt_g9(r.gamma),
        fmt_g9(r.kappa),
        r.provenance.tag(),
        fmt_g9(alpha),
        fmt_g9(theta)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Window;
    use crate::mac::aloha;
    use crate::pointprocess::gen_ppp;

    #[test]
    fn fmt_has_nine_significant_digits() {
        assert_eq!(fmt_g9(0.0), "0");
        assert_eq!(fmt_g9(1.0), "1.00000000");
        assert_eq!(fmt_g9(6.978864199638878), "6.97886420");
        assert_eq!(fmt_g9(0.0001234567891), "0.000123456789");
        assert_eq!(fmt_g9(-12345.6789), "-12345.6789");
        assert_eq!(fmt_g9(1.5e12), "1.50000000e12");
        assert_eq!(fmt_g9(2.5e-7), "2.50000000e-7");
        assert_eq!(fmt_g9(f64::NAN), "nan");
    }

    #[test]
    fn pattern_round_trip_shape() {
        let w = Window::square(10.0).unwrap();
        let p = gen_ppp(0.5, &w, 3).unwrap();
        let csv = pattern_csv(&p);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x,y");
        assert_eq!(csv.lines().count(), p.len() + 1);
        let meta = pattern_metadata(&p);
        assert!(meta.contains("model = ppp"));
        assert!(meta.contains("seed = 3"));
    }

    #[test]
    fn active_column_marks_the_subset() {
        let w = Window::square(15.0).unwrap();
        let p = gen_ppp(0.5, &w, 4).unwrap();
        let ts = aloha(&p, 0.4, 9).unwrap();
        let csv = pattern_with_active_csv(&p, &ts);
        let actives = csv.lines().filter(|l| l.ends_with(",1")).count();
        assert_eq!(actives, ts.len());
        assert_eq!(csv.lines().count(), p.len() + 1);
    }
}
