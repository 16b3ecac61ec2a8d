//! Experiment orchestration: eta sweeps with automatic window sizing,
//! scaling-exponent regression, taxonomy classification, and the figure
//! dataset writers.

use crate::asymptotics::{
    conjecture_envelope, eta_max, gamma_csma_matern, gamma_kappa_for, tdma_bounds,
    AsymptoticResult,
};
use crate::csvio::{self, fmt_g9};
use crate::error::{Error, Result};
use crate::geom::Window;
use crate::mac::{
    aloha, aloha_ppp_direct, check_conditions, cluster_mac_direct, csma_matern, solve_csma_radius,
    tdma_lattice, unreasonable_tdma, ConditionReport, MacScheme, TransmitterSet,
};
use crate::outage::{
    estimate_success, EstimateConfig, EstimatorMode, LinkSpec, OutageEstimate, PalmPolicy,
    PathLossModel,
};
use crate::pointprocess::{gen_lattice, gen_matern2, gen_ppp, matern_intensity, ClusterSpec, Model};
use crate::rng::derive_seed;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Default replications per sweep point (conditional estimator).
pub const DEFAULT_REPS: u64 = 100_000;
/// Window side per unit of interaction scale.
pub const WINDOW_SCALE: f64 = 20.0;

// seed-derivation tags
const TAG_PATTERN: u64 = 0x70A7;
const TAG_MAC: u64 = 0x3AC0;
const TAG_EST: u64 = 0xE577;

/// A MAC discipline parameterized by eta at sweep time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MacFamily {
    Aloha,
    Csma,
    Tdma,
    Cluster { b: f64 },
    UnreasonableTdma,
}

impl MacFamily {
    pub fn label(&self) -> String {
        match self {
            MacFamily::Aloha => "aloha".to_string(),
            MacFamily::Csma => "csma".to_string(),
            MacFamily::Tdma => "tdma".to_string(),
            MacFamily::Cluster { b } => format!("cluster-b{b}"),
            MacFamily::UnreasonableTdma => "unreasonable-tdma".to_string(),
        }
    }

    /// Concrete scheme at a given eta. TDMA families require eta = m^-d.
    pub fn scheme_for(&self, eta: f64, dim: usize) -> Result<MacScheme> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::parameter(format!("eta must be in (0,1], got {eta}")));
        }
        let scheme = match *self {
            MacFamily::Aloha => MacScheme::Aloha { p: eta },
            MacFamily::Csma => MacScheme::CsmaMatern { target_eta: eta },
            MacFamily::Tdma => {
                let m = eta.powf(-1.0 / dim as f64);
                let mr = m.round();
                if (m - mr).abs() > 1e-9 || mr < 1.0 {
                    return Err(Error::parameter(format!(
                        "tdma: eta {eta} is not m^-{dim} for integer m"
                    )));
                }
                MacScheme::TdmaLattice { m: mr as u32, d: dim }
            }
            MacFamily::Cluster { b } => MacScheme::ClusterMac { b, eta },
            MacFamily::UnreasonableTdma => {
                let m = eta.powf(-0.5);
                let mr = m.round();
                if (m - mr).abs() > 1e-9 || mr < 1.0 {
                    return Err(Error::parameter(format!(
                        "unreasonable tdma: eta {eta} is not m^-2 for integer m"
                    )));
                }
                MacScheme::UnreasonableTdma { m: mr as u32 }
            }
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

/// Largest interaction scale at a sweep point: the model's own structure
/// scale, the scheduled exclusion scale, and the generic eta^{-1/2}.
pub fn interaction_scale(model: &Model, mac: &MacFamily, eta: f64) -> Result<f64> {
    let generic = eta.powf(-0.5);
    let model_scale = match *model {
        Model::Ppp { .. } => 0.0,
        Model::MaternII { hardcore_radius, .. } => hardcore_radius,
        Model::Thomas { spec } => spec.sigma,
        Model::Lattice { spacing, .. } => spacing,
        Model::DerivedByMac { .. } => 0.0,
    };
    let mac_scale = match (*mac, *model) {
        (MacFamily::Csma, Model::Ppp { intensity }) => solve_csma_radius(intensity, eta * intensity)?,
        (MacFamily::Tdma, Model::Lattice { spacing, .. }) => {
            let d = 2; // refined by suggested_window for other dims
            let _ = d;
            spacing * eta.powf(-0.5)
        }
        _ => 0.0,
    };
    Ok(generic.max(model_scale).max(mac_scale))
}

/// Window per the sizing rule: side >= WINDOW_SCALE x the interaction
/// scale, rounded up to whatever divisibility the lattice schemes need.
pub fn suggested_window(model: &Model, mac: &MacFamily, eta: f64, dim: usize) -> Result<Window> {
    let mut side = WINDOW_SCALE * interaction_scale(model, mac, eta)?;
    if let Model::Lattice { spacing, .. } = *model {
        // lattice windows must tile: round up to the scheduling block
        let block = match *mac {
            MacFamily::Tdma => {
                let m = eta.powf(-1.0 / dim as f64).round();
                spacing * m
            }
            MacFamily::UnreasonableTdma => {
                let m = eta.powf(-0.5).round();
                spacing * m * m
            }
            _ => spacing,
        };
        side = (side / block).ceil().max(1.0) * block;
        // d-dim TDMA spacing grows like eta^{-1/d}
        if matches!(*mac, MacFamily::Tdma) {
            let m = eta.powf(-1.0 / dim as f64).round();
            let need = WINDOW_SCALE * spacing * m;
            side = side.max((need / block).ceil() * block);
        }
    }
    let sides = [side; 3];
    Window::new(dim, &sides[..dim], crate::geom::Wrap::Toroidal)
}

/// Sweep configuration; `window` overrides the sizing rule (with a warning
/// when smaller than the rule suggests).
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub model: Model,
    pub mac: MacFamily,
    pub pathloss: PathLossModel,
    pub link: LinkSpec,
    pub eta_grid: Vec<f64>,
    pub n_reps: u64,
    pub seed: u64,
    pub mode: EstimatorMode,
    pub palm: Option<PalmPolicy>,
    pub window: Option<Window>,
    pub dim: usize,
}

impl SweepConfig {
    pub fn new(model: Model, mac: MacFamily, pathloss: PathLossModel, link: LinkSpec) -> Self {
        SweepConfig {
            model,
            mac,
            pathloss,
            link,
            eta_grid: Vec::new(),
            n_reps: DEFAULT_REPS,
            seed: 1,
            mode: EstimatorMode::Conditional,
            palm: None,
            window: None,
            dim: 2,
        }
    }

    fn resolved_palm(&self) -> PalmPolicy {
        if let Some(p) = self.palm {
            return p;
        }
        match (&self.model, &self.mac) {
            // PPP + ALOHA stays Poisson: condition at a fixed location
            (Model::Ppp { .. }, MacFamily::Aloha) => PalmPolicy::FixedCenter,
            // deterministic lattices: every active point is equivalent
            (Model::Lattice { .. }, MacFamily::Tdma)
            | (Model::Lattice { .. }, MacFamily::UnreasonableTdma) => PalmPolicy::NearestCenter,
            _ => PalmPolicy::AllPoints,
        }
    }
}

/// Sweep output: one estimate per eta (decreasing), plus the analytic
/// asymptote when one exists for the scheme/model pair.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub scheme: String,
    pub model: Model,
    pub pathloss: PathLossModel,
    pub theta: f64,
    pub seed: u64,
    pub points: Vec<OutageEstimate>,
    pub analytic: Option<AsymptoticResult>,
}

/// Build the per-replication transmitter generator for one sweep point.
fn make_generator<'a>(
    cfg: &'a SweepConfig,
    eta: f64,
    window: Window,
    point_seed: u64,
) -> Result<Box<dyn Fn(u64) -> Result<TransmitterSet> + Sync + 'a>> {
    let scheme = cfg.mac.scheme_for(eta, cfg.dim)?;
    let model = cfg.model;
    let pat_seed = derive_seed(point_seed, &[TAG_PATTERN]);
    let mac_seed = derive_seed(point_seed, &[TAG_MAC]);
    let gen: Box<dyn Fn(u64) -> Result<TransmitterSet> + Sync> = match (model, scheme) {
        (Model::Ppp { intensity }, MacScheme::Aloha { p }) => Box::new(move |rep| {
            // Poisson thinning fusion: same measure, one draw per kept point
            aloha_ppp_direct(intensity, p, &window, derive_seed(pat_seed, &[rep]))
        }),
        (Model::Ppp { intensity }, MacScheme::CsmaMatern { target_eta }) => Box::new(move |rep| {
            let pat = gen_ppp(intensity, &window, derive_seed(pat_seed, &[rep]))?;
            csma_matern(&pat, target_eta, derive_seed(mac_seed, &[rep]))
        }),
        (
            Model::MaternII {
                parent_intensity,
                hardcore_radius,
            },
            MacScheme::Aloha { p },
        ) => Box::new(move |rep| {
            let pat = gen_matern2(
                parent_intensity,
                hardcore_radius,
                &window,
                derive_seed(pat_seed, &[rep]),
            )?;
            aloha(&pat, p, derive_seed(mac_seed, &[rep]))
        }),
        (Model::Thomas { spec }, MacScheme::Aloha { p }) => Box::new(move |rep| {
            // ALOHA on a cluster process == the b = 1 cluster MAC; the fused
            // generator keeps the cost proportional to the active count
            cluster_mac_direct(&spec, 1.0, p, &window, derive_seed(pat_seed, &[rep]))
        }),
        (Model::Thomas { spec }, MacScheme::ClusterMac { b, eta }) => Box::new(move |rep| {
            cluster_mac_direct(&spec, b, eta, &window, derive_seed(pat_seed, &[rep]))
        }),
        (Model::Lattice { spacing, rotated: false }, MacScheme::TdmaLattice { m, .. }) => {
            Box::new(move |rep| {
                let pat = gen_lattice(
                    window.dim,
                    spacing,
                    &window,
                    derive_seed(pat_seed, &[rep]),
                    false,
                )?;
                tdma_lattice(&pat, m, derive_seed(mac_seed, &[rep]))
            })
        }
        (Model::Lattice { spacing, rotated: false }, MacScheme::UnreasonableTdma { m }) => {
            Box::new(move |rep| {
                let pat = gen_lattice(2, spacing, &window, derive_seed(pat_seed, &[rep]), false)?;
                unreasonable_tdma(&pat, m, derive_seed(mac_seed, &[rep]))
            })
        }
        (Model::Lattice { spacing, rotated: false }, MacScheme::Aloha { p }) => {
            Box::new(move |rep| {
                let pat = gen_lattice(
                    window.dim,
                    spacing,
                    &window,
                    derive_seed(pat_seed, &[rep]),
                    false,
                )?;
                aloha(&pat, p, derive_seed(mac_seed, &[rep]))
            })
        }
        _ => {
            return Err(Error::not_implemented(format!(
                "no generator for {:?} under {}",
                model,
                scheme.label()
            )))
        }
    };
    Ok(gen)
}

/// Run the sweep: one estimate per grid point with per-point derived
/// seeds; replications parallelize inside each point.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.eta_grid.is_empty() {
        return Err(Error::parameter("sweep: empty eta grid".to_string()));
    }
    let mut grid = cfg.eta_grid.clone();
    for &e in &grid {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::parameter(format!("sweep: eta {e} outside (0,1]")));
        }
    }
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    cfg.pathloss.validate(cfg.dim)?;

    let palm = cfg.resolved_palm();
    let mut points = Vec::with_capacity(grid.len());
    for (i, &eta) in grid.iter().enumerate() {
        let auto = suggested_window(&cfg.model, &cfg.mac, eta, cfg.dim)?;
        let window = match cfg.window {
            Some(w) => {
                if w.min_side() < auto.min_side() {
                    log::warn!(
                        "sweep: window side {:.1} below the sizing rule's {:.1} at eta={eta}",
                        w.min_side(),
                        auto.min_side()
                    );
                }
                w
            }
            None => auto,
        };
        let point_seed = derive_seed(cfg.seed, &[TAG_EST, i as u64, eta.to_bits()]);
        let generator = make_generator(cfg, eta, window, point_seed)?;
        let est_cfg = EstimateConfig {
            n_reps: cfg.n_reps,
            seed: point_seed,
            mode: cfg.mode,
            palm,
        };
        let est = estimate_success(generator.as_ref(), eta, &cfg.link, &cfg.pathloss, &est_cfg)?;
        points.push(est);
    }

    let analytic = match cfg.mac.scheme_for(grid[0], cfg.dim) {
        Ok(scheme) => {
            match gamma_kappa_for(&scheme, &cfg.model, cfg.link.theta, &cfg.pathloss) {
                Ok(a) => Some(a),
                Err(Error::NotImplemented(_)) => None,
                Err(e) => return Err(e),
            }
        }
        Err(_) => None,
    };

    Ok(SweepResult {
        scheme: cfg.mac.label(),
        model: cfg.model,
        pathloss: cfg.pathloss,
        theta: cfg.link.theta,
        seed: cfg.seed,
        points,
        analytic,
    })
}

// ---------------------------------------------------------------------------
// fitting

#[derive(Debug, Clone, Copy)]
pub struct FitWindow {
    pub eta_min: f64,
    pub eta_max: f64,
}

/// Shape of the regression model for `fit_kappa_gamma`.
///
/// The asymptote is log(gap) = log gamma + kappa log eta; at finite eta the
/// leading deviation is a factor (1 + c eta), and ignoring it biases the
/// fitted gamma well beyond its statistical error. `Linear` adds the c eta
/// regressor (needs >= 5 points); `None` is the plain power law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Curvature {
    #[default]
    None,
    Linear,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub kappa: f64,
    pub gamma: f64,
    pub kappa_ci95: f64,
    /// multiplicative 95% band on gamma: gamma in [gamma/f, gamma*f]
    pub gamma_ci_factor: f64,
    pub p0: f64,
    pub n_points: usize,
}

/// Weighted log-log regression of (p0 - P) on eta: the slope estimates
/// kappa, the intercept log gamma. Points must satisfy p0 - P > 3 SE.
pub fn fit_kappa_gamma(
    sweep: &SweepResult,
    window: Option<FitWindow>,
    p0: Option<f64>,
    curvature: Curvature,
) -> Result<FitResult> {
    let p0 = p0.unwrap_or(1.0);
    let window = match window {
        Some(w) => w,
        None => {
            // default: eta <= min(eta_max, 0.1) when an asymptote is known
            let hi = match &sweep.analytic {
                Some(a) if a.gamma.is_finite() && a.gamma > 0.0 => {
                    eta_max(a.gamma, a.kappa)?.min(0.1)
                }
                _ => 0.1,
            };
            FitWindow {
                eta_min: 0.0,
                eta_max: hi,
            }
        }
    };

    let mut etas = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for pt in &sweep.points {
        if pt.eta < window.eta_min || pt.eta > window.eta_max {
            continue;
        }
        let gap = p0 - pt.p_success;
        if !(gap > 3.0 * pt.std_err && gap > 0.0) {
            continue;
        }
        etas.push(pt.eta);
        ys.push(gap.ln());
        // Var(ln gap) = (se/gap)^2
        ws.push(if pt.std_err == 0.0 {
            f64::INFINITY
        } else {
            (gap / pt.std_err).powi(2)
        });
    }
    let n = etas.len();
    let use_curvature = curvature == Curvature::Linear && n >= 5;
    if n < 4 {
        return Err(Error::Estimation(format!(
            "fit_kappa_gamma: only {n} usable points in [{:.3e}, {:.3e}] (need >= 4; raise n_reps or widen the window)",
            window.eta_min,
            window.eta_max
        )));
    }
    // if any point lacks a standard error, fall back to an unweighted fit
    if ws.iter().any(|w| !w.is_finite()) {
        for w in ws.iter_mut() {
            *w = 1.0;
        }
    }
    cap_weight_ratio(&mut ws);

    // design: [1, ln eta] or [1, ln eta, eta]
    let p = if use_curvature { 3 } else { 2 };
    let row = |eta: f64| -> [f64; 3] { [1.0, eta.ln(), eta] };
    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for ((&eta, &y), &w) in etas.iter().zip(&ys).zip(&ws) {
        let r = row(eta);
        for i in 0..p {
            for j in 0..p {
                xtx[i][j] += w * r[i] * r[j];
            }
            xty[i] += w * r[i] * y;
        }
    }
    let inv = invert(&xtx, p)
        .ok_or_else(|| Error::estimation("fit_kappa_gamma: degenerate design".to_string()))?;
    let mut coef = [0.0f64; 3];
    for i in 0..p {
        for j in 0..p {
            coef[i] += inv[i][j] * xty[j];
        }
    }

    // chi-square inflation guards against residual model misfit
    let mut chi2 = 0.0;
    for ((&eta, &y), &w) in etas.iter().zip(&ys).zip(&ws) {
        let r = row(eta);
        let fit: f64 = (0..p).map(|i| coef[i] * r[i]).sum();
        chi2 += w * (y - fit) * (y - fit);
    }
    let dof = (n - p).max(1) as f64;
    let inflate = (chi2 / dof).max(1.0).sqrt();
    let se_intercept = inv[0][0].sqrt() * inflate;
    let se_slope = inv[1][1].sqrt() * inflate;

    Ok(FitResult {
        kappa: coef[1],
        gamma: coef[0].exp(),
        kappa_ci95: 1.96 * se_slope,
        gamma_ci_factor: (1.96 * se_intercept).exp(),
        p0,
        n_points: n,
    })
}

// invert the leading p x p block (p <= 3) by Gauss-Jordan
fn invert(a: &[[f64; 3]; 3], p: usize) -> Option<[[f64; 3]; 3]> {
    let mut m = [[0.0f64; 6]; 3];
    for i in 0..p {
        for j in 0..p {
            m[i][j] = a[i][j];
        }
        m[i][p + i] = 1.0;
    }
    for col in 0..p {
        let mut piv = col;
        for r in (col + 1)..p {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        let d = m[col][col];
        for j in 0..2 * p {
            m[col][j] /= d;
        }
        for r in 0..p {
            if r != col {
                let f = m[r][col];
                for j in 0..2 * p {
                    m[r][j] -= f * m[col][j];
                }
            }
        }
    }
    let mut out = [[0.0f64; 3]; 3];
    for i in 0..p {
        for j in 0..p {
            out[i][j] = m[i][p + j];
        }
    }
    Some(out)
}

// One near-deterministic point (standard error orders of magnitude below
// the rest, e.g. a symmetric lattice value) must not be allowed to carry
// the whole design; cap the weight spread at 1e4 x the median.
fn cap_weight_ratio(ws: &mut [f64]) {
    let mut sorted: Vec<f64> = ws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = sorted[sorted.len() / 2];
    if med > 0.0 {
        for w in ws.iter_mut() {
            *w = w.min(1e4 * med);
        }
    }
}

/// Weighted linear fit P = a + b eta over the k smallest-eta points:
/// returns ((a, se_a), (b, se_b)).
pub fn linear_extrapolation(
    points: &[OutageEstimate],
    k: usize,
) -> Result<((f64, f64), (f64, f64))> {
    let mut pts: Vec<&OutageEstimate> = points.iter().collect();
    pts.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let pts = &pts[..k.min(pts.len())];
    if pts.len() < 3 {
        return Err(Error::estimation("linear_extrapolation: need >= 3 points".to_string()));
    }
    let mut w: Vec<f64> = pts
        .iter()
        .map(|p| {
            if p.std_err > 0.0 {
                1.0 / (p.std_err * p.std_err)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    if w.iter().any(|v| !v.is_finite()) {
        for v in w.iter_mut() {
            *v = 1.0;
        }
    }
    cap_weight_ratio(&mut w);
    let sw: f64 = w.iter().sum();
    let sx: f64 = pts.iter().zip(&w).map(|(p, w)| w * p.eta).sum();
    let sy: f64 = pts.iter().zip(&w).map(|(p, w)| w * p.p_success).sum();
    let sxx: f64 = pts.iter().zip(&w).map(|(p, w)| w * p.eta * p.eta).sum();
    let sxy: f64 = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * p.eta * p.p_success)
        .sum();
    let det = sw * sxx - sx * sx;
    if det <= 0.0 {
        return Err(Error::estimation("linear_extrapolation: degenerate design".to_string()));
    }
    let b = (sw * sxy - sx * sy) / det;
    let a = (sy - b * sx) / sw;
    let mut chi2 = 0.0;
    for (p, w) in pts.iter().zip(&w) {
        let r = p.p_success - a - b * p.eta;
        chi2 += w * r * r;
    }
    let inflate = (chi2 / (pts.len() as f64 - 2.0)).max(1.0).sqrt();
    let se_a = (sxx / det).sqrt() * inflate;
    let se_b = (sw / det).sqrt() * inflate;
    Ok(((a, se_a), (b, se_b)))
}

// ---------------------------------------------------------------------------
// taxonomy

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaxonomyClass {
    R1,
    R2,
    R3,
    U1,
    U2,
    U3,
    Unclassified,
}

impl TaxonomyClass {
    pub fn tag(&self) -> &'static str {
        match self {
            TaxonomyClass::R1 => "R1",
            TaxonomyClass::R2 => "R2",
            TaxonomyClass::R3 => "R3",
            TaxonomyClass::U1 => "U1",
            TaxonomyClass::U2 => "U2",
            TaxonomyClass::U3 => "U3",
            TaxonomyClass::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaxonomyLabel {
    pub class: TaxonomyClass,
    pub p0: f64,
    pub p0_se: f64,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub diagnostics: String,
}

// classification bands on the fitted log-log slope of 1 - P against eta
// over the smallest grid points:
//   slope + ci < 0            -> U3 (success probability falls as eta -> 0)
//   slope in [0, U2_MAX)      -> U2 (outage saturates: P0 < 1)
//   slope in [U2_MAX, R1 lo)  -> U1 (sub-linear decay, P0 = 1)
//   R1 band / R3 band / between -> R1 / R3 / R2
const U2_MAX: f64 = 0.2;
const R1_BAND: (f64, f64) = (0.8, 1.2);
const R3_REL_BAND: f64 = 0.15;
const P0_SIGMA: f64 = 5.0;
const CLASSIFY_POINTS: usize = 5;

/// Label a sweep according to the (P0, kappa, sign of gamma) taxonomy.
/// Ambiguous fits come back `Unclassified` with diagnostics, never a guess.
pub fn classify(sweep: &SweepResult, conditions: Option<&ConditionReport>) -> Result<TaxonomyLabel> {
    if sweep.points.len() < 4 {
        return Err(Error::estimation("classify: need >= 4 sweep points".to_string()));
    }
    let alpha = sweep.pathloss.alpha();

    // The taxonomy resolves percent-level curve features. Floor the
    // standard errors at 1e-3 of the outage so noise-free curves (exact
    // lattice values) do not explode the misfit inflation and mask the
    // class behind an unusable confidence interval.
    let mut sweep = sweep.clone();
    for pt in &mut sweep.points {
        let floor = 1e-3 * (1.0 - pt.p_success).abs();
        pt.std_err = pt.std_err.max(floor).max(1e-9);
    }
    let sweep = &sweep;

    let ((p0_hat, p0_se), (slope, _slope_se)) = linear_extrapolation(&sweep.points, 4)?;

    // asymptotic exponent from the smallest grid points (the taxonomy is a
    // statement about eta -> 0)
    let mut etas: Vec<f64> = sweep.points.iter().map(|p| p.eta).collect();
    etas.sort_by(f64::total_cmp);
    let window = FitWindow {
        eta_min: 0.0,
        eta_max: etas[CLASSIFY_POINTS.min(etas.len()) - 1] * (1.0 + 1e-12),
    };
    // primary U3 statistic: the success probability rises with eta near
    // zero (equivalently falls toward eta -> 0), with P0 clearly below 1
    if slope > 3.0 * _slope_se && p0_hat < 1.0 - P0_SIGMA * p0_se {
        return Ok(TaxonomyLabel {
            class: TaxonomyClass::U3,
            p0: p0_hat,
            p0_se,
            kappa: None,
            gamma: Some(-slope),
            diagnostics: format!(
                "near-zero slope of P is +{slope:.3} ({:.1} se); P0 {p0_hat:.4}",
                slope / _slope_se
            ),
        });
    }

    let fit = fit_kappa_gamma(sweep, Some(window), Some(1.0), Curvature::None)?;
    let k = fit.kappa;

    if k + fit.kappa_ci95 < 0.0 {
        // outage grows as eta shrinks: negative contention
        return Ok(TaxonomyLabel {
            class: TaxonomyClass::U3,
            p0: p0_hat,
            p0_se,
            kappa: Some(k),
            gamma: Some(slope.min(0.0)),
            diagnostics: format!(
                "log-log slope {k:.3} (+/-{:.3}) below zero; P0 {p0_hat:.4}",
                fit.kappa_ci95
            ),
        });
    }
    if fit.kappa_ci95 > 0.5 {
        return Ok(TaxonomyLabel {
            class: TaxonomyClass::Unclassified,
            p0: p0_hat,
            p0_se,
            kappa: Some(k),
            gamma: Some(fit.gamma),
            diagnostics: format!("kappa CI too wide: {k:.3} +/- {:.3}", fit.kappa_ci95),
        });
    }
    if k < U2_MAX {
        // outage saturates: P0 below 1, non-negative contention
        return if p0_hat < 1.0 - P0_SIGMA * p0_se {
            Ok(TaxonomyLabel {
                class: TaxonomyClass::U2,
                p0: p0_hat,
                p0_se,
                kappa: Some(k),
                gamma: Some((-slope).max(0.0)),
                diagnostics: format!(
                    "flat outage (slope {k:.3}); P0 {p0_hat:.4} below 1 by {:.1} se",
                    (1.0 - p0_hat) / p0_se
                ),
            })
        } else {
            Ok(TaxonomyLabel {
                class: TaxonomyClass::Unclassified,
                p0: p0_hat,
                p0_se,
                kappa: Some(k),
                gamma: None,
                diagnostics: format!(
                    "flat outage but P0 {p0_hat:.4} not separated from 1 ({:.1} se)",
                    (1.0 - p0_hat) / p0_se
                ),
            })
        };
    }

    let unreasonable = conditions.map(|c| !c.reasonable()).unwrap_or(false);
    let r3_center = 0.5 * alpha;
    let class = if k < R1_BAND.0 {
        TaxonomyClass::U1
    } else if unreasonable {
        TaxonomyClass::Unclassified
    } else if k <= R1_BAND.1 {
        TaxonomyClass::R1
    } else if (k - r3_center).abs() <= R3_REL_BAND * r3_center {
        TaxonomyClass::R3
    } else if k < r3_center {
        TaxonomyClass::R2
    } else {
        TaxonomyClass::Unclassified
    };
    Ok(TaxonomyLabel {
        class,
        p0: p0_hat,
        p0_se,
        kappa: Some(k),
        gamma: Some(fit.gamma),
        diagnostics: format!(
            "kappa {k:.3} +/- {:.3}, gamma {:.4}, conditions {}",
            fit.kappa_ci95,
            fit.gamma,
            conditions
                .map(|c| if c.reasonable() { "hold" } else { "violated" })
                .unwrap_or("unchecked")
        ),
    })
}

// ---------------------------------------------------------------------------
// figures

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Swap5,
    Swap6,
    LinkR,
    Demo2,
}

impl FigureId {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "3" => FigureId::Fig3,
            "4" => FigureId::Fig4,
            "5" => FigureId::Fig5,
            "6" => FigureId::Fig6,
            "7" => FigureId::Fig7,
            "8" => FigureId::Fig8,
            "swap5" => FigureId::Swap5,
            "swap6" => FigureId::Swap6,
            "linkR" | "linkr" => FigureId::LinkR,
            "2-demo" => FigureId::Demo2,
            _ => {
                return Err(Error::usage(format!(
                    "unknown figure id {s:?} (known: 3 4 5 6 7 8 swap5 swap6 linkR 2-demo)"
                )))
            }
        })
    }

    pub fn dir_name(&self) -> &'static str {
        match self {
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
            FigureId::Swap5 => "swap5",
            FigureId::Swap6 => "swap6",
            FigureId::LinkR => "linkR",
            FigureId::Demo2 => "fig2-demo",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FigureSummary {
    pub id: FigureId,
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

struct FigureWriter {
    dir: PathBuf,
    manifest: Vec<(String, String)>,
    files: Vec<PathBuf>,
}

impl FigureWriter {
    fn new(outdir: &Path, id: FigureId) -> Result<Self> {
        let dir = outdir.join(id.dir_name());
        std::fs::create_dir_all(&dir)
            .map_err(|e| Error::usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(FigureWriter {
            dir,
            manifest: Vec::new(),
            files: Vec::new(),
        })
    }

    fn put(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.manifest.push((key.into(), value.into()));
    }

    fn write_file(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = std::fs::File::create(&path)
            .map_err(|e| Error::usage(format!("cannot write {}: {e}", path.display())))?;
        f.write_all(contents.as_bytes())
            .map_err(|e| Error::usage(format!("write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn write_sweep_curve(&mut self, name: &str, sweep: &SweepResult) -> Result<()> {
        let mut s = String::from(csvio::ESTIMATE_HEADER);
        s.push('\n');
        for pt in &sweep.points {
            s.push_str(&csvio::estimate_row(
                pt,
                &sweep.scheme,
                sweep.pathloss.alpha(),
                sweep.theta,
                sweep.seed,
            ));
            s.push('\n');
        }
        self.write_file(name, &s)
    }

    fn write_xy(&mut self, name: &str, header: &str, rows: &[(f64, f64)]) -> Result<()> {
        let mut s = String::from(header);
        s.push('\n');
        for (x, y) in rows {
            s.push_str(&fmt_g9(*x));
            s.push(',');
            s.push_str(&fmt_g9(*y));
            s.push('\n');
        }
        self.write_file(name, &s)
    }

    fn finish(mut self) -> Result<Vec<PathBuf>> {
        let mut s = String::new();
        for (k, v) in &self.manifest {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        let path = self.dir.join("manifest.txt");
        std::fs::write(&path, s)
            .map_err(|e| Error::usage(format!("write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(self.files)
    }
}

// figures keep going when a reduced --reps budget starves a fit
fn fit_or_note(
    sweep: &SweepResult,
    window: Option<FitWindow>,
    curvature: Curvature,
) -> std::result::Result<FitResult, String> {
    fit_kappa_gamma(sweep, window, Some(1.0), curvature)
        .map_err(|e| format!("fit infeasible at this budget ({e})"))
}

fn asymptote_curve(gamma: f64, kappa: f64, etas: &[f64]) -> Vec<(f64, f64)> {
    etas
        .iter()
        .map(|&e| (e, (1.0 - gamma * e.powf(kappa)).max(0.0)))
        .collect()
}

/// Reproduce one figure dataset: CSV per curve plus a flat manifest.
/// `reps_override` replaces the per-figure default replication counts.
pub fn reproduce_figure(
    id: FigureId,
    outdir: &Path,
    seed: u64,
    reps_override: Option<u64>,
) -> Result<FigureSummary> {
    match id {
        FigureId::Fig3 => fig3(outdir, seed, reps_override),
        FigureId::Fig4 => fig4(outdir, seed, reps_override, false),
        FigureId::Swap6 => fig4(outdir, seed, reps_override, true),
        FigureId::Fig5 => fig5(outdir, seed, reps_override),
        FigureId::Fig6 => fig6(outdir, seed, reps_override),
        FigureId::Fig7 => fig7(outdir, seed, reps_override),
        FigureId::Fig8 => fig8(outdir, seed),
        FigureId::Swap5 => swap5(outdir, seed, reps_override),
        FigureId::LinkR => link_r(outdir, seed, reps_override),
        FigureId::Demo2 => demo2(outdir, seed, reps_override),
    }
}

const THETA: f64 = 2.0;
const ALPHA: f64 = 4.0;

fn standard_link() -> LinkSpec {
    LinkSpec::new(THETA).expect("theta > 0")
}

fn singular() -> PathLossModel {
    PathLossModel::Singular { alpha: ALPHA }
}

/// Hard-core + ALOHA at fixed retained intensity 0.194 for a ladder of
/// inhibition radii (parent intensity solved per radius).
fn fig3(outdir: &Path, seed: u64, reps: Option<u64>) -> Result<FigureSummary> {
    let mut w = FigureWriter::new(outdir, FigureId::Fig3)?;
    let lambda = 0.194;
    let radii = [0.0, 0.44, 0.7, 1.0];
    let grid = vec![0.3, 0.22, 0.15, 0.1, 0.068, 0.046, 0.031, 0.021, 0.015];
    let reps = reps.unwrap_or(50_000);
    w.put("figure", "hard-core ALOHA, lambda = 0.194");
    w.put("alpha", fmt_g9(ALPHA));
    w.put("theta", fmt_g9(THETA));
    w.put("seed", seed.to_string());
    w.put("reps", reps.to_string());
    w.put("rng", crate::rng::RNG_SCHEME);

    let mut lines = Vec::new();
    for (k, &h) in radii.iter().enumerate() {
        let lambda_p = solve_parent_intensity(lambda, h)?;
        let model = if h == 0.0 {
            Model::Ppp { intensity: lambda }
        } else {
            Model::MaternII {
                parent_intensity: lambda_p,
                hardcore_radius: h,
            }
        };
        let mut cfg = SweepConfig::new(model, MacFamily::Aloha, singular(), standard_link());
        cfg.eta_grid = grid.clone();
        cfg.n_reps = reps;
        cfg.seed = derive_seed(seed, &[3, k as u64]);
        let sw = sweep(&cfg)?;
        w.write_sweep_curve(&format!("curve-{k}.csv"), &sw)?;
        let analytic = sw.analytic.as_ref().expect("aloha gamma available");
        w.write_xy(
            &format!("asymptote-{k}.csv"),
            "eta,p_asymptotic",
            &asymptote_curve(analytic.gamma, 1.0, &grid),
        )?;
        w.put(format!("curve_{k}_h"), fmt_g9(h));
        w.put(format!("curve_{k}_parent_intensity"), fmt_g9(lambda_p));
        w.put(format!("curve_{k}_gamma_analytic"), fmt_g9(analytic.gamma));
        match fit_or_note(&sw, None, Curvature::Linear) {
            Ok(fit) => {
                w.put(format!("curve_{k}_gamma_fit"), fmt_g9(fit.gamma));
                w.put(format!("curve_{k}_kappa_fit"), fmt_g9(fit.kappa));
                lines.push(format!(
                    "h={h}: kappa_hat={:.3} (+/-{:.3}), gamma_hat={:.4}, gamma_quadrature={:.4}",
                    fit.kappa, fit.kappa_ci95, fit.gamma, analytic.gamma
                ));
            }
            Err(note) => lines.push(format!("h={h}: {note}")),
        }
    }
    Ok(FigureSummary {
        id: FigureId::Fig3,
        lines,
        files: w.finish()?,
    })
}

/// Solve the parent intensity that leaves `target` after type-II thinning
/// at radius h (identity for h = 0).
pub fn solve_parent_intensity(target: f64, h: f64) -> Result<f64> {
    if h == 0.0 {
        return Ok(target);
    }
    let mut lo = target;
    let mut hi = target;
    while matern_intensity(hi, h) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::parameter(format!(
                "no parent intensity reaches {target} at h={h} (cap 1/(pi h^2) = {})",
                1.0 / (std::f64::consts::PI * h * h)
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if matern_intensity(mid, h) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// CSMA on a PPP of intensity 0.3 (optionally with transmitter and
/// receiver swapped): quadratic outage regime.
fn fig4(outdir: &Path, seed: u64, reps: Option<u64>, swapped: bool) -> Result<FigureSummary> {
    let id = if swapped { FigureId::Swap6 } else { FigureId::Fig4 };
    let mut w = FigureWriter::new(outdir, id)?;
    let lambda = 0.3;
    let grid = vec![0.3, 0.22, 0.15, 0.11, 0.085, 0.065, 0.05];
    let reps = reps.unwrap_or(100_000);
    let link = if swapped { standard_link().swapped() } else { standard_link() };
    let mut cfg = SweepConfig::new(
        Model::Ppp { intensity: lambda },
        MacFamily::Csma,
        singular(),
        link,
    );
    cfg.eta_grid = grid.clone();
    cfg.n_reps = reps;
    cfg.seed = derive_seed(seed, &[4, swapped as u64]);
    // the raw (indicator) estimator over one random link per realization
    // is the plain Monte Carlo experiment; its standard error is the
    // figure's native resolution
    cfg.mode = EstimatorMode::Raw;
    cfg.palm = Some(PalmPolicy::RandomPoint);
    let sw = sweep(&cfg)?;
    w.write_sweep_curve("curve-0.csv", &sw)?;
    let gamma = gamma_csma_matern(lambda, THETA, ALPHA)?;
    w.write_xy(
        "asymptote-0.csv",
        "eta,p_asymptotic",
        &asymptote_curve(gamma, 2.0, &grid),
    )?;
    w.put("figure", if swapped { "CSMA on PPP(0.3), swapped link" } else { "CSMA on PPP(0.3)" });
    w.put("alpha", fmt_g9(ALPHA));
    w.put("theta", fmt_g9(THETA));
    w.put("seed", seed.to_string());
    w.put("reps", reps.to_string());
    w.put("estimator", "raw");
    w.put("gamma_corollary", fmt_g9(gamma));
    w.put("rng", crate::rng::RNG_SCHEME);
    let lines = match fit_or_note(
        &sw,
        Some(FitWindow {
            eta_min: 0.049,
            eta_max: 0.151,
        }),
        Curvature::None,
    ) {
        Ok(fit) => {
            w.put("kappa_fit", fmt_g9(fit.kappa));
            w.put("gamma_fit", fmt_g9(fit.gamma));
            vec![format!(
                "csma{}: kappa_hat={:.3} (+/-{:.3}), gamma_corollary={:.4}, eta_max={:.4}",
                if swapped { " (swapped)" } else { "" },
                fit.kappa,
                fit.kappa_ci95,
                gamma,
                eta_max(gamma, 2.0)?
            )]
        }
        Err(note) => vec![format!(
            "csma{}: gamma_corollary={gamma:.4}; {note}",
            if swapped { " (swapped)" } else { "" }
        )],
    };
    Ok(FigureSummary {
        id,
        lines,
        files: w.finish()?,
    })
}

/// Cluster ALOHA ladder at fixed intensity 0.48 (plus the PPP reference).
fn fig5(outdir: &Path, seed: u64, reps: Option<u64>) -> Result<FigureSummary> {
    let mut w = FigureWriter::new(outdir, FigureId::Fig5)?;
    let lambda = 0.48;
    let sigma = 0.45;
    let cs = [1.0, 2.0, 4.0, 8.0];
    let grid = vec![0.2, 0.14, 0.1, 0.07, 0.05, 0.035, 0.025, 0.017, 0.012, 0.008];
    let reps = reps.unwrap_or(40_000);
    w.put("figure", "cluster ALOHA at intensity 0.48");
    w.put("alpha", fmt_g9(ALPHA));
    w.put("theta", fmt_g9(THETA));
    w.put("sigma", fmt_g9(sigma));
    w.put("seed", seed.to_string());
    w.put("reps", reps.to_string());
    w.put("rng", crate::rng::RNG_SCHEME);

    let mut lines = Vec::new();
    for (k, &c) in cs.iter().enumerate() {
        let spec = ClusterSpec::new(lambda / c, c, sigma)?;
        let mut cfg = SweepConfig::new(
            Model::Thomas { spec },
            MacFamily::Aloha,
            singular(),
            standard_link(),
        );
        cfg.eta_grid = grid.clone();
        cfg.n_reps = reps;
        cfg.seed = derive_seed(seed, &[5, k as u64]);
        let sw = sweep(&cfg)?;
        w.write_sweep_curve(&format!("curve-{k}.csv"), &sw)?;
        let analytic = sw.analytic.as_ref().expect("thomas aloha gamma");
        w.write_xy(
            &format!("asymptote-{k}.csv"),
            "eta,p_asymptotic",
            &asymptote_curve(analytic.gamma, 1.0, &grid),
        )?;
        w.put(format!("curve_{k}_mu"), fmt_g9(lambda / c));
        w.put(format!("curve_{k}_c"), fmt_g9(c));
        w.put(format!("curve_{k}_gamma_quadrature"), fmt_g9(analytic.gamma));
        match fit_or_note(&sw, None, Curvature::Linear) {
            Ok(fit) => {
                w.put(format!("curve_{k}_gamma_fit"), fmt_g9(fit.gamma));
                w.put(format!("curve_{k}_kappa_fit"), fmt_g9(fit.kappa));
                lines.push(format!(
                    "mu={:.3} c={c}: kappa_hat={:.3}, gamma_hat={:.3}, gamma_quadrature={:.3}",
                    lambda / c,
                    fit.kappa,
                    fit.gamma,
                    analytic.gamma
                ));
            }
            Err(note) => lines.push(format!("mu={:.3} c={c}: {note}", lambda / c)),
        }
    }
    // PPP reference of the same intensity
    let mut cfg = SweepConfig::new(
        Model::Ppp { intensity: lambda },
        MacFamily::Aloha,
        singular(),
        standard_link(),
    );
    cfg.eta_grid = grid.clone();
    cfg.n_reps = reps;
    cfg.seed = derive_seed(seed, &[5, 99]);
    let sw = sweep(&cfg)?;
    w.write_sweep_curve("curve-ppp.csv", &sw)?;
    lines.push(format!(
        "ppp reference: gamma_quadrature={:.3}",
        sw.analytic.as_ref().unwrap().gamma
    ));
    Ok(FigureSummary {
        id: FigureId::Fig5,
        lines,
        files: w.finish()?,
    })
}

/// Parent thinning (b = 0): the success probability saturates below 1.
fn fig6(outdir: &Path, seed: u64, reps: Option<u64>) -> Result<FigureSummary> {
    let mut w = FigureWriter::new(outdir, FigureId::Fig6)?;
    let spec = ClusterSpec::new(0.1, 4.0, 3.6)?;
    let grid = vec![0.3, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002];
    let reps = reps.unwrap_or(30_000);
    let mut cfg = SweepConfig::new(
        Model::Thomas { spec },
        MacFamily::Cluster { b: 0.0 },
        singular(),
        standard_link(),
    );
    cfg.eta_grid = grid.clone();
    cfg.n_reps = reps;
    cfg.seed = derive_seed(seed, &[6]);
    let sw = sweep(&cfg)?;
    w.write_sweep_curve("curve-0.csv", &sw)?;
    let analytic = sw.analytic.as_ref().expect("cluster b=0 descriptor");
    let closed: Vec<(f64, f64)> = grid
        .iter()
        .map(|&e| {
            crate::outage::cluster_success_closed(&spec, 0.0, e, THETA, &singular(), 1e-7)
                .map(|cf| (e, cf.p))
        })
        .collect::<Result<_>>()?;
    w.write_xy("closed-form-0.csv", "eta,p_closed_form", &closed)?;
    let ((p0_hat, p0_se), _) = linear_extrapolation(&sw.points, 4)?;
    w.put("figure", "parent thinning (b = 0) on Thomas(0.1, 4, 3.6)");
    w.put("p0_closed_form", fmt_g9(analytic.p0));
    w.put("p0_extrapolated", fmt_g9(p0_hat));
    w.put("p0_se", fmt_g9(p0_se));
    w.put("seed", seed.to_string());
    w.put("reps", reps.to_string());
    let lines = vec![format!(
        "parent thinning: P0_hat={p0_hat:.4} (+/-{p0_se:.4}), closed form P0={:.4} -- saturates below 1",
        analytic.p0
    )];
    Ok(FigureSummary {
        id: FigureId::Fig6,
        lines,
        files: w.finish()?,
    })
}

/// Cluster MAC with b = 0.5 (sub-linear exponent) plus the b = 1 ALOHA
/// reduction on the same process.
fn fig7(outdir: &Path, seed: u64, reps: Option<u64>) -> Result<FigureSummary> {
    let mut w = FigureWriter::new(outdir, FigureId::Fig7)?;
    let spec = ClusterSpec::new(0.1, 4.0, 3.6)?;
    let reps = reps.unwrap_or(100_000);

    // context points for the curve shape plus a very-small-eta fit window
    let grid_b05 = vec![
        0.03, 0.01, 3e-3, 1e-3, 3e-4, 6e-5, 3.5e-5, 2e-5, 1.2e-5, 7e-6, 4e-6,
    ];
    let fit_window = FitWindow {
        eta_min: 3.9e-6,
        eta_max: 6.1e-5,
    };
    let mut cfg = SweepConfig::new(
        Model::Thomas { spec },
        MacFamily::Cluster { b: 0.5 },
        singular(),
        standard_link(),
    );
    cfg.eta_grid = grid_b05.clone();
    cfg.n_reps = reps;
    cfg.seed = derive_seed(seed, &[7, 0]);
    let sw = sweep(&cfg)?;
    w.write_sweep_curve("curve-b05.csv", &sw)?;
    let analytic = sw.analytic.as_ref().expect("cluster b=0.5");
    let fit = fit_or_note(&sw, Some(fit_window), Curvature::None);
    w.write_xy(
        "asymptote-b05.csv",
        "eta,p_asymptotic",
        &grid_b05
            .iter()
            .map(|&e| (e, (1.0 - analytic.gamma * e.sqrt()).max(0.0)))
            .collect::<Vec<_>>(),
    )?;

    // b = 1 reduces to ALOHA: linear regime
    let grid_b1 = vec![0.05, 0.035, 0.024, 0.017, 0.012, 0.008];
    let mut cfg1 = SweepConfig::new(
        Model::Thomas { spec },
        MacFamily::Cluster { b: 1.0 },
        singular(),
        standard_link(),
    );
    cfg1.eta_grid = grid_b1;
    cfg1.n_reps = reps / 2;
    cfg1.seed = derive_seed(seed, &[7, 1]);
    let sw1 = sweep(&cfg1)?;
    w.write_sweep_curve("curve-b1.csv", &sw1)?;
    let fit1 = fit_or_note(&sw1, None, Curvature::Linear);

    w.put("figure", "cluster MAC on Thomas(0.1, 4, 3.6)");
    w.put("b05_gamma_numeric", fmt_g9(analytic.gamma));
    w.put("b05_fit_window", format!("{:.1e}..{:.1e}", fit_window.eta_min, fit_window.eta_max));
    w.put("seed", seed.to_string());
    w.put("reps", reps.to_string());
    let mut lines = Vec::new();
    match &fit {
        Ok(f) => {
            w.put("b05_kappa_fit", fmt_g9(f.kappa));
            w.put("b05_gamma_fit", fmt_g9(f.gamma));
            lines.push(format!(
                "b=0.5: kappa_hat={:.3} (+/-{:.3}), gamma_numeric={:.4}",
                f.kappa, f.kappa_ci95, analytic.gamma
            ));
        }
        Err(note) => lines.push(format!("b=0.5: gamma_numeric={:.4}; {note}", analytic.gamma)),
    }
    match &fit1 {
        Ok(f) => {
            w.put("b1_kappa_fit", fmt_g9(f.kappa));
            lines.push(format!("b=1 reduction: kappa_hat={:.3} (+/-{:.3})", f.kappa, f.kappa_ci95));
        }
        Err(note) => lines.push(format!("b=1 reduction: {note}")),
    }
    Ok(FigureSummary {
        id: FigureId::Fig7,
        lines,
        files: w.finish()?,
    })
}

/// Lattice TDMA bounds and exact curves in d = 1, 2, 3 (analytic).
fn fig8(outdir: &Path, seed: u64) -> Result<FigureSummary> {
    let mut w = FigureWriter::new(outdir, FigureId::Fig8)?;
    w.put("figure", "m^d-phase TDMA bounds, alpha = 4, theta = 2");
    w.put("seed", seed.to_string());
    let mut lines = Vec::new();
    for d in 1..=3usize {
        let ms: Vec<u32> = (1..=10).collect();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut exact = Vec::new();
        for &m in &ms {
            let b = tdma_bounds(d, m, THETA, ALPHA)?;
            lower.push((b.eta, b.lower));
            upper.push((b.eta, b.upper));
            exact.push((b.eta, b.exact));
        }
        w.write_xy(&format!("lower-d{d}.csv"), "eta,p_lower", &lower)?;
        w.write_xy(&format!("upper-d{d}.csv"), "eta,p_upper", &upper)?;
        w.write_xy(&format!("exact-d{d}.csv"), "eta,p_exact", &exact)?;
        let z = crate::asymptotics::epstein_zeta(d, ALPHA)?;
        w.put(format!("epstein_z_d{d}"), fmt_g9(z));
        w.put(format!("gamma_d{d}"), fmt_g9(z * THETA));
        lines.push(format!("d={d}: gamma = Z({d},4) theta = {:.4}, kappa = {}", z * THETA, ALPHA / d as f64));
    }
    Ok(FigureSummary {
        id: FigureId::Fig8,
        lines,
        files: w.finish()?,
    })
}

/// Hard-core ALOHA with the typical transmitter and receiver swapped.
fn swap5(outdir: &Path, seed: u64, reps: Option<u64>) -> Result<FigureSummary> {
    let mut w = FigureWriter::new(outdir, FigureId::Swap5)?;
    let h = 1.5;
    let lambda_p = 0.3;
    let grid = vec![0.25, 0.15, 0.1, 0.065, 0.04, 0.025];
    let reps = reps.unwrap_or(40_000);
    let mut cfg = SweepConfig::new(
        Model::MaternII {
            parent_intensity: lambda_p,
            hardcore_radius: h,
        },
        MacFamily::Aloha,
        singular(),
        standard_link().swapped(),
    );
    cfg.eta_grid = grid;
    cfg.n_reps = reps;
    cfg.seed = derive_seed(seed, &[50]);
    let sw = sweep(&cfg)?;
    w.write_sweep_curve("curve-0.csv", &sw)?;
    w.put("figure", "hard-core ALOHA, swapped link, h = 1.5");
    w.put("lambda", fmt_g9(matern_intensity(lambda_p, h)));
    w.put("seed", seed.to_string());
    w.put("reps", reps.to_string());
    let lines = match fit_or_note(
        &sw,
        Some(FitWindow { eta_min: 0.02, eta_max: 0.11 }),
        Curvature::Linear,
    ) {
        Ok(fit) => {
            w.put("kappa_fit", fmt_g9(fit.kappa));
            w.put("gamma_fit", fmt_g9(fit.gamma));
            vec![format!(
                "swapped hard-core aloha: kappa_hat={:.3} (+/-{:.3}) -- outage stays linear",
                fit.kappa, fit.kappa_ci95
            )]
        }
        Err(note) => vec![format!("swapped hard-core aloha: {note}")],
    };
    Ok(FigureSummary {
        id: FigureId::Swap5,
        lines,
        files: w.finish()?,
    })
}

/// Success probability against the link distance R for CSMA at fixed eta,
/// plus the gamma(R)/gamma(1) ratio measured with the eta grid rescaled so
/// every R sits at the same depth of the asymptotic regime.
fn link_r(outdir: &Path, seed: u64, reps: Option<u64>) -> Result<FigureSummary> {
    let mut w = FigureWriter::new(outdir, FigureId::LinkR)?;
    let lambda = 1.0;
    let eta0 = 0.052;
    let reps = reps.unwrap_or(30_000);
    let gamma1 = gamma_csma_matern(lambda, THETA, ALPHA)?;

    // fixed-eta curve over R
    let rs_curve: Vec<f64> = (0..9).map(|i| 1.0 + 0.25 * i as f64).collect();
    let mut fixed = Vec::new();
    for (k, &r) in rs_curve.iter().enumerate() {
        let link = standard_link().with_distance(r)?;
        let mut cfg = SweepConfig::new(
            Model::Ppp { intensity: lambda },
            MacFamily::Csma,
            singular(),
            link,
        );
        cfg.eta_grid = vec![eta0];
        cfg.n_reps = reps;
        cfg.seed = derive_seed(seed, &[60, k as u64]);
        let sw = sweep(&cfg)?;
        fixed.push((r, sw.points[0].p_success));
    }
    w.write_xy("success-vs-R.csv", "link_distance,p_success", &fixed)?;
    w.write_xy(
        "asymptote-vs-R.csv",
        "link_distance,p_asymptotic",
        &rs_curve
            .iter()
            .map(|&r| (r, (1.0 - gamma1 * r.powi(4) * eta0 * eta0).max(0.0)))
            .collect::<Vec<_>>(),
    )?;

    // gamma ratio: eta(R) = eta0 / R^2 keeps gamma(R) eta^2 constant, so the
    // finite-eta bias cancels in the ratio
    let rs_fit = [1.0, 1.5, 2.0, 2.5, 3.0];
    let mut rows = Vec::new();
    let mut max_rel = 0.0f64;
    let mut gamma_1_hat = 0.0;
    for (k, &r) in rs_fit.iter().enumerate() {
        let eta = eta0 / (r * r);
        let link = standard_link().with_distance(r)?;
        let mut cfg = SweepConfig::new(
            Model::Ppp { intensity: lambda },
            MacFamily::Csma,
            singular(),
            link,
        );
        cfg.eta_grid = vec![eta];
        cfg.n_reps = reps;
        cfg.seed = derive_seed(seed, &[61, k as u64]);
        let sw = sweep(&cfg)?;
        let g_hat = (1.0 - sw.points[0].p_success) / (eta * eta);
        if k == 0 {
            gamma_1_hat = g_hat;
        }
        let ratio = g_hat / gamma_1_hat;
        let rel = (ratio / r.powi(4) - 1.0).abs();
        max_rel = max_rel.max(rel);
        rows.push((r, ratio));
    }
    let mut s = String::from("link_distance,gamma_ratio,r4\n");
    for (r, ratio) in &rows {
        s.push_str(&format!("{},{},{}\n", fmt_g9(*r), fmt_g9(*ratio), fmt_g9(r.powi(4))));
    }
    w.write_file("gamma-ratio.csv", &s)?;

    w.put("figure", "CSMA success vs link distance");
    w.put("eta_fixed", fmt_g9(eta0));
    w.put("eta_scaled", "eta0 / R^2 for the ratio estimate");
    w.put("gamma_1_corollary", fmt_g9(gamma1));
    w.put("h_at_eta0", fmt_g9(solve_csma_radius(lambda, eta0 * lambda)?));
    w.put("max_ratio_rel_error", fmt_g9(max_rel));
    w.put("seed", seed.to_string());
    w.put("reps", reps.to_string());
    let lines = vec![format!(
        "gamma(R)/gamma(1) tracks R^4 with max relative error {:.3} over R in [1,3]",
        max_rel
    )];
    Ok(FigureSummary {
        id: FigureId::LinkR,
        lines,
        files: w.finish()?,
    })
}

/// Run-structured TDMA whose success probability worsens as eta shrinks.
fn demo2(outdir: &Path, seed: u64, reps: Option<u64>) -> Result<FigureSummary> {
    let mut w = FigureWriter::new(outdir, FigureId::Demo2)?;
    let ms = [2u32, 3, 4, 5, 6];
    let grid: Vec<f64> = ms.iter().map(|&m| (m as f64).powi(-2)).collect();
    let reps = reps.unwrap_or(20_000);
    let mut cfg = SweepConfig::new(
        Model::Lattice { spacing: 1.0, rotated: false },
        MacFamily::UnreasonableTdma,
        singular(),
        standard_link(),
    );
    cfg.eta_grid = grid;
    cfg.n_reps = reps;
    cfg.seed = derive_seed(seed, &[20]);
    let sw = sweep(&cfg)?;
    w.write_sweep_curve("curve-0.csv", &sw)?;
    let label = classify(&sw, None)?;
    w.put("figure", "unreasonable TDMA demo");
    w.put("class", label.class.tag());
    w.put("p0_extrapolated", fmt_g9(label.p0));
    w.put("seed", seed.to_string());
    w.put("reps", reps.to_string());
    let lines = vec![format!(
        "unreasonable tdma: class {} ({}); success probability decreases toward eta -> 0",
        label.class.tag(),
        label.diagnostics
    )];
    Ok(FigureSummary {
        id: FigureId::Demo2,
        lines,
        files: w.finish()?,
    })
}

/// Envelope check used by tests and the CLI classify path: every sweep
/// point must satisfy lower - 3 SE <= P <= upper + 3 SE.
pub fn envelope_violations(sweep: &SweepResult, gamma: f64, kappa: f64) -> Result<Vec<f64>> {
    let mut bad = Vec::new();
    for pt in &sweep.points {
        let (lo, hi) = conjecture_envelope(gamma, kappa, pt.eta)?;
        if pt.p_success < lo - 3.0 * pt.std_err || pt.p_success > hi + 3.0 * pt.std_err {
            bad.push(pt.eta);
        }
    }
    Ok(bad)
}

/// Condition check for a configured model/MAC family over an eta grid
/// (wires `check_conditions` to the sweep generators).
pub fn conditions_for(
    cfg: &SweepConfig,
    eta_grid: &[f64],
    reps: u64,
) -> Result<ConditionReport> {
    let generator = |eta: f64, rep: u64| -> Result<TransmitterSet> {
        let window = suggested_window(&cfg.model, &cfg.mac, eta, cfg.dim)?;
        let point_seed = derive_seed(cfg.seed, &[0xC0ED, eta.to_bits()]);
        let g = make_generator(cfg, eta, window, point_seed)?;
        g(rep)
    };
    check_conditions(generator, eta_grid, reps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_for_families() {
        assert!(matches!(
            MacFamily::Aloha.scheme_for(0.3, 2).unwrap(),
            MacScheme::Aloha { p } if (p - 0.3).abs() < 1e-15
        ));
        assert!(matches!(
            MacFamily::Tdma.scheme_for(1.0 / 9.0, 2).unwrap(),
            MacScheme::TdmaLattice { m: 3, d: 2 }
        ));
        assert!(MacFamily::Tdma.scheme_for(0.3, 2).is_err());
        assert!(MacFamily::Aloha.scheme_for(0.0, 2).is_err());
    }

    #[test]
    fn window_rule_scales() {
        let w = suggested_window(&Model::Ppp { intensity: 1.0 }, &MacFamily::Aloha, 0.01, 2).unwrap();
        assert!((w.sides[0] - 200.0).abs() < 1e-9);
        // matern h dominates at large eta
        let w = suggested_window(
            &Model::MaternII {
                parent_intensity: 0.3,
                hardcore_radius: 3.0,
            },
            &MacFamily::Aloha,
            0.5,
            2,
        )
        .unwrap();
        assert!((w.sides[0] - 60.0).abs() < 1e-9);
        // tdma windows tile the scheduling block
        let w = suggested_window(
            &Model::Lattice { spacing: 1.0, rotated: false },
            &MacFamily::Tdma,
            1.0 / 9.0,
            2,
        )
        .unwrap();
        assert!((w.sides[0] / 3.0).fract().abs() < 1e-12);
        assert!(w.sides[0] >= 60.0);
    }

    #[test]
    fn fit_recovers_known_power_law() {
        // synthetic sweep from the exact PPP closed form
        let gamma = 6.978_864_2;
        let grid = [0.02, 0.013, 0.009, 0.006, 0.004, 0.0025];
        let points: Vec<OutageEstimate> = grid
            .iter()
            .map(|&eta| OutageEstimate {
                eta,
                p_success: (-gamma * eta).exp(),
                std_err: 1e-6,
                n_reps: 1,
                estimator: EstimatorMode::Conditional,
                rejected: 0,
            })
            .collect();
        let sw = SweepResult {
            scheme: "aloha".to_string(),
            model: Model::Ppp { intensity: 1.0 },
            pathloss: PathLossModel::Singular { alpha: 4.0 },
            theta: 2.0,
            seed: 0,
            points,
            analytic: None,
        };
        let fit = fit_kappa_gamma(&sw, Some(FitWindow { eta_min: 0.0, eta_max: 0.03 }), Some(1.0), Curvature::Linear)
            .unwrap();
        assert!((fit.kappa - 1.0).abs() < 0.05, "kappa {}", fit.kappa);
        assert!((fit.gamma - gamma).abs() / gamma < 0.05, "gamma {}", fit.gamma);
    }

    #[test]
    fn fit_kappa_two_for_quadratic_law() {
        let gamma = 1.956;
        let grid = [0.15, 0.11, 0.085, 0.065, 0.05];
        let points: Vec<OutageEstimate> = grid
            .iter()
            .map(|&eta| OutageEstimate {
                eta,
                p_success: 1.0 - gamma * eta * eta,
                std_err: 1e-7,
                n_reps: 1,
                estimator: EstimatorMode::Conditional,
                rejected: 0,
            })
            .collect();
        let sw = SweepResult {
            scheme: "csma".to_string(),
            model: Model::Ppp { intensity: 0.3 },
            pathloss: PathLossModel::Singular { alpha: 4.0 },
            theta: 2.0,
            seed: 0,
            points,
            analytic: None,
        };
        let fit =
            fit_kappa_gamma(&sw, Some(FitWindow { eta_min: 0.0, eta_max: 0.2 }), Some(1.0), Curvature::None).unwrap();
        assert!((fit.kappa - 2.0).abs() < 1e-6);
        assert!((fit.gamma - gamma).abs() < 1e-4);
    }

    #[test]
    fn fit_needs_enough_signal() {
        let points: Vec<OutageEstimate> = [0.01, 0.008, 0.006, 0.004]
            .iter()
            .map(|&eta| OutageEstimate {
                eta,
                p_success: 1.0 - 1e-6,
                std_err: 1e-3,
                n_reps: 10,
                estimator: EstimatorMode::Conditional,
                rejected: 0,
            })
            .collect();
        let sw = SweepResult {
            scheme: "aloha".to_string(),
            model: Model::Ppp { intensity: 1.0 },
            pathloss: PathLossModel::Singular { alpha: 4.0 },
            theta: 2.0,
            seed: 0,
            points,
            analytic: None,
        };
        let err = fit_kappa_gamma(&sw, None, Some(1.0), Curvature::None).unwrap_err();
        assert!(matches!(err, Error::Estimation(_)));
    }

    #[test]
    fn figure_id_parsing() {
        assert_eq!(FigureId::parse("4").unwrap(), FigureId::Fig4);
        assert_eq!(FigureId::parse("2-demo").unwrap(), FigureId::Demo2);
        assert_eq!(FigureId::parse("linkR").unwrap(), FigureId::LinkR);
        assert!(FigureId::parse("9").is_err());
    }

    #[test]
    fn small_sweep_end_to_end() {
        // tiny budget: exercises sweep wiring, analytic attachment, fitting
        let mut cfg = SweepConfig::new(
            Model::Ppp { intensity: 1.0 },
            MacFamily::Aloha,
            PathLossModel::Singular { alpha: 4.0 },
            LinkSpec::new(2.0).unwrap(),
        );
        cfg.eta_grid = vec![0.2, 0.1, 0.05];
        cfg.n_reps = 400;
        cfg.seed = 11;
        let sw = sweep(&cfg).unwrap();
        assert_eq!(sw.points.len(), 3);
        assert!(sw.points[0].eta > sw.points[2].eta);
        let a = sw.analytic.as_ref().unwrap();
        assert!((a.gamma - 6.9789).abs() < 1e-3);
        for (pt, &eta) in sw.points.iter().zip(&[0.2, 0.1, 0.05]) {
            let exact = crate::outage::success_ppp_aloha_closed(1.0, eta, 2.0, 4.0).unwrap();
            assert!(
                (pt.p_success - exact).abs() < 5.0 * pt.std_err.max(1e-3),
                "eta={eta}: {} vs {exact} (se {})",
                pt.p_success,
                pt.std_err
            );
        }
        // determinism of the whole sweep
        let sw2 = sweep(&cfg).unwrap();
        assert_eq!(sw.points[0].p_success.to_bits(), sw2.points[0].p_success.to_bits());
    }
}
