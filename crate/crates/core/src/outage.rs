//! Success probability of the typical link: exact conditional evaluation
//! (fading integrated analytically), raw Monte Carlo for validation, and
//! the closed forms available for Poisson and Poisson-cluster networks.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mac::TransmitterSet;
use crate::num::kahan::Kahan;
use crate::num::quad::{self, QuadOptions};
use crate::num::special::i0_scaled;
use crate::pointprocess::ClusterSpec;
use crate::rng::{derive_seed, rng_stream};
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

/// Power-law attenuation, exponent alpha.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLossModel {
    /// r^-alpha (singular at the origin)
    Singular { alpha: f64 },
    /// (1 + r^alpha)^-1
    BoundedSum { alpha: f64 },
    /// min(1, r^-alpha)
    BoundedMin { alpha: f64 },
}

impl PathLossModel {
    pub fn alpha(&self) -> f64 {
        match *self {
            PathLossModel::Singular { alpha }
            | PathLossModel::BoundedSum { alpha }
            | PathLossModel::BoundedMin { alpha } => alpha,
        }
    }

    /// alpha > dim is required for a.s. finite interference.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let a = self.alpha();
        if !(a > dim as f64) {
            return Err(Error::parameter(format!(
                "path loss: alpha must exceed the dimension ({dim}), got {a}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn ell(&self, r: f64) -> f64 {
        match *self {
            PathLossModel::Singular { alpha } => r.powf(-alpha),
            PathLossModel::BoundedSum { alpha } => 1.0 / (1.0 + r.powf(alpha)),
            PathLossModel::BoundedMin { alpha } => {
                if r <= 1.0 {
                    1.0
                } else {
                    r.powf(-alpha)
                }
            }
        }
    }

    /// Distance at which the path gain is 1 (default link distance).
    pub fn unit_gain_distance(&self) -> f64 {
        match self {
            PathLossModel::Singular { .. } => 1.0,
            _ => 0.0,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, PathLossModel::Singular { .. })
    }
}

/// Which end of the link sits at the typical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// The typical point is the receiver (default).
    ReceiverTypical,
    /// Swapped: the typical point is the transmitter; its receiver sits at
    /// the link distance in a uniformly random direction.
    TransmitterTypical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    /// noise power W
    pub w: f64,
    /// transmit power P
    pub p: f64,
}

/// Threshold, link geometry and optional noise for the probed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub theta: f64,
    /// None selects `pathloss.unit_gain_distance()`.
    pub link_distance: Option<f64>,
    pub orientation: Orientation,
    pub noise: Option<Noise>,
}

impl LinkSpec {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::parameter(format!("link: theta must be > 0, got {theta}")));
        }
        Ok(LinkSpec {
            theta,
            link_distance: None,
            orientation: Orientation::ReceiverTypical,
            noise: None,
        })
    }

    pub fn with_distance(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::parameter(format!("link: distance must be > 0, got {r}")));
        }
        self.link_distance = Some(r);
        Ok(self)
    }

    pub fn swapped(mut self) -> Self {
        self.orientation = Orientation::TransmitterTypical;
        self
    }

    pub fn with_noise(mut self, w: f64, p: f64) -> Result<Self> {
        if !(w >= 0.0 && p > 0.0) {
            return Err(Error::parameter("link: need W >= 0 and P > 0".to_string()));
        }
        self.noise = Some(Noise { w, p });
        Ok(self)
    }

    pub fn resolved_distance(&self, pathloss: &PathLossModel) -> f64 {
        self.link_distance.unwrap_or_else(|| pathloss.unit_gain_distance())
    }

    /// theta / ell(R): a general link distance only rescales the threshold.
    pub fn effective_theta(&self, pathloss: &PathLossModel) -> f64 {
        match self.link_distance {
            None => self.theta,
            Some(r) => self.theta / pathloss.ell(r),
        }
    }

    /// Multiplicative noise term exp(-theta W / (P ell(R))); 1 without noise.
    pub fn noise_factor(&self, pathloss: &PathLossModel) -> f64 {
        match self.noise {
            None => 1.0,
            Some(Noise { w, p }) => (-self.effective_theta(pathloss) * w / p).exp(),
        }
    }
}

/// Interferer-fading hook: Delta(x) = 1 - L_h(theta ell(x)). Only the
/// exponential law ships; anything else plugs in here.
pub trait InterfererFading {
    /// 1 - E[exp(-s h)] for the fading variable h.
    fn one_minus_laplace(&self, s: f64) -> f64;
}

/// Unit-mean exponential fading: 1 - 1/(1+s) = s/(1+s).
pub struct ExponentialFading;

impl InterfererFading for ExponentialFading {
    #[inline]
    fn one_minus_laplace(&self, s: f64) -> f64 {
        s / (1.0 + s)
    }
}

/// Per-interferer outage weight Delta(x) = 1/(1 + theta^-1 ell(x)^-1).
/// At x = 0 under the singular law the limit is 1.
pub fn delta(x: f64, pathloss: &PathLossModel, theta: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::parameter(format!("delta: separation must be >= 0, got {x}")));
    }
    if x == 0.0 && pathloss.is_singular() {
        return Ok(1.0);
    }
    Ok(delta_unchecked(x, pathloss, theta))
}

#[inline]
fn delta_unchecked(x: f64, pathloss: &PathLossModel, theta: f64) -> f64 {
    let s = theta * pathloss.ell(x);
    s / (1.0 + s)
}

/// Delta under a general fading law (the extension hook).
pub fn delta_general(
    x: f64,
    pathloss: &PathLossModel,
    theta: f64,
    fading: &impl InterfererFading,
) -> f64 {
    fading.one_minus_laplace(theta * pathloss.ell(x))
}

/// Total interference power at `receiver` given per-transmitter fading
/// coefficients (wrap-aware distances).
pub fn interference(
    transmitters: &[Point],
    receiver: &Point,
    window: &crate::geom::Window,
    pathloss: &PathLossModel,
    fading: &[f64],
) -> Result<f64> {
    if transmitters.len() != fading.len() {
        return Err(Error::usage("interference: one fading draw per transmitter".to_string()));
    }
    let mut acc = Kahan::new();
    for (x, &h) in transmitters.iter().zip(fading) {
        let d2 = window.distance_sq(x, receiver);
        if d2 == 0.0 && pathloss.is_singular() {
            return Err(Error::estimation(
                "interference: transmitter coincides with the receiver under the singular law"
                    .to_string(),
            ));
        }
        acc.add(h * pathloss.ell(d2.sqrt()));
    }
    Ok(acc.total())
}

/// Conditional success factor product over interferers, all fading
/// integrated out: prod 1/(1 + theta_eff ell(d)). `skip` marks the typical
/// point itself.
fn conditional_product(
    points: &[Point],
    receiver: &Point,
    skip: Option<usize>,
    window: &crate::geom::Window,
    pathloss: &PathLossModel,
    theta_eff: f64,
) -> Option<f64> {
    let mut log_acc = Kahan::new();
    for (j, x) in points.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        let d2 = window.distance_sq(x, receiver);
        if d2 == 0.0 && pathloss.is_singular() {
            return None; // coincident point: caller redraws
        }
        log_acc.add((theta_eff * pathloss.ell(d2.sqrt())).ln_1p());
    }
    Some((-log_acc.total()).exp())
}

/// How the typical point is chosen when conditioning on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PalmPolicy {
    /// Slivnyak shortcut for Poisson transmitter sets: condition at the
    /// window center without removing anything. Exact for PPP + ALOHA only.
    FixedCenter,
    /// The transmitter-set point nearest the window center, removed.
    /// Exact for the lattice; carries a cell-size bias for clustered sets
    /// (measured at ~9% of the outage for hard-core patterns), so it is
    /// never the default for random sets.
    NearestCenter,
    /// Every point takes a turn as the typical point (minus-sampling over
    /// the whole torus window); the ratio estimator this induces is
    /// unbiased for any motion-invariant set, so it is the default.
    #[default]
    AllPoints,
    /// One uniformly chosen point per realization, weighted by the point
    /// count in the ratio: unbiased like `AllPoints` but with one link
    /// evaluated per realization (the standard error of a plain one-link
    /// Monte Carlo experiment).
    RandomPoint,
}

/// One-realization conditional success probability of the typical link
/// (typical point = nearest the window center, removed). Returns the
/// noise-scaled product; an empty set means no interference, i.e. 1.
pub fn success_conditional(
    ts: &TransmitterSet,
    link: &LinkSpec,
    pathloss: &PathLossModel,
    seed: u64,
) -> Result<f64> {
    pathloss.validate(ts.pattern.window.dim)?;
    let theta_eff = link.effective_theta(pathloss);
    let noise = link.noise_factor(pathloss);
    let pts = &ts.pattern.points;
    if pts.is_empty() {
        return Ok(noise);
    }
    let w = ts.pattern.window;
    let center = w.center();
    let typical = (0..pts.len())
        .min_by(|&i, &j| {
            w.distance_sq(&pts[i], &center)
                .total_cmp(&w.distance_sq(&pts[j], &center))
        })
        .unwrap();
    let rx = receiver_position(&pts[typical], link, pathloss, &w, &mut rng_stream(seed, 0));
    conditional_product(pts, &rx, Some(typical), &w, pathloss, theta_eff)
        .map(|p| p * noise)
        .ok_or_else(|| {
            Error::estimation("success_conditional: coincident transmitter".to_string())
        })
}

fn receiver_position<R: Rng>(
    typical: &Point,
    link: &LinkSpec,
    pathloss: &PathLossModel,
    window: &crate::geom::Window,
    rng: &mut R,
) -> Point {
    match link.orientation {
        Orientation::ReceiverTypical => *typical,
        Orientation::TransmitterTypical => {
            let r = link.resolved_distance(pathloss);
            let mut p = *typical;
            match window.dim {
                1 => {
                    let sign = if rng.gen::<f64>() < 0.5 { -1.0 } else { 1.0 };
                    p[0] += sign * r;
                }
                _ => {
                    let phi = rng.gen::<f64>() * TAU;
                    p[0] += r * phi.cos();
                    p[1] += r * phi.sin();
                }
            }
            window.wrap_point(&p)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    /// Fading integrated analytically (Rao-Blackwellized).
    Conditional,
    /// Indicator of S >= theta (I + W/P) with sampled fading.
    Raw,
}

impl EstimatorMode {
    pub fn tag(&self) -> &'static str {
        match self {
            EstimatorMode::Conditional => "conditional",
            EstimatorMode::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateConfig {
    pub n_reps: u64,
    pub seed: u64,
    pub mode: EstimatorMode,
    pub palm: PalmPolicy,
}

impl EstimateConfig {
    pub fn new(n_reps: u64, seed: u64) -> Self {
        EstimateConfig {
            n_reps,
            seed,
            mode: EstimatorMode::Conditional,
            palm: PalmPolicy::AllPoints,
        }
    }
    pub fn raw(mut self) -> Self {
        self.mode = EstimatorMode::Raw;
        self
    }
    pub fn palm(mut self, palm: PalmPolicy) -> Self {
        self.palm = palm;
        self
    }
}

/// Monte Carlo estimate of the link success probability.
#[derive(Debug, Clone)]
pub struct OutageEstimate {
    pub eta: f64,
    pub p_success: f64,
    pub std_err: f64,
    pub n_reps: u64,
    pub estimator: EstimatorMode,
    /// replications redrawn because of a coincident point (singular law)
    pub rejected: u64,
}

// per-replication tally: numerator, denominator (typical-point count)
struct RepTally {
    s: f64,
    n: f64,
    rejected: u64,
}

/// Estimate the success probability over `n_reps` independent realizations
/// of `generator`. Replication `i` is a pure function of (seed, i): results
/// are identical for any degree of parallelism, and the reduction is
/// compensated and order-fixed.
pub fn estimate_success<G>(
    generator: G,
    eta: f64,
    link: &LinkSpec,
    pathloss: &PathLossModel,
    cfg: &EstimateConfig,
) -> Result<OutageEstimate>
where
    G: Fn(u64) -> Result<TransmitterSet> + Sync,
{
    if cfg.n_reps == 0 {
        return Err(Error::parameter("estimate_success: need n_reps >= 1".to_string()));
    }
    if eta == 0.0 {
        return Ok(OutageEstimate {
            eta,
            p_success: link.noise_factor(pathloss),
            std_err: 0.0,
            n_reps: cfg.n_reps,
            estimator: cfg.mode,
            rejected: 0,
        });
    }

    let tallies: Vec<Result<RepTally>> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| replicate(&generator, rep, link, pathloss, cfg))
        .collect();

    let mut s_sum = Kahan::new();
    let mut n_sum = Kahan::new();
    let mut rejected = 0u64;
    let mut clean: Vec<(f64, f64)> = Vec::with_capacity(tallies.len());
    for t in tallies {
        let t = t?;
        s_sum.add(t.s);
        n_sum.add(t.n);
        rejected += t.rejected;
        clean.push((t.s, t.n));
    }
    let n_total = n_sum.total();
    if n_total <= 0.0 {
        return Err(Error::estimation(
            "estimate_success: no realization produced a typical point".to_string(),
        ));
    }
    let p = (s_sum.total() / n_total).clamp(0.0, 1.0);

    // ratio-estimator standard error via linearized residuals s_i - p * n_i
    let mut resid = Kahan::new();
    for &(s, n) in &clean {
        let u = s - p * n;
        resid.add(u * u);
    }
    let reps = clean.len() as f64;
    let std_err = if reps > 1.0 {
        (resid.total() * reps / (reps - 1.0)).sqrt() / n_total
    } else {
        f64::INFINITY
    };

    Ok(OutageEstimate {
        eta,
        p_success: p,
        std_err,
        n_reps: cfg.n_reps,
        estimator: cfg.mode,
        rejected,
    })
}

fn replicate<G>(
    generator: &G,
    rep: u64,
    link: &LinkSpec,
    pathloss: &PathLossModel,
    cfg: &EstimateConfig,
) -> Result<RepTally>
where
    G: Fn(u64) -> Result<TransmitterSet> + Sync,
{
    let mut rejected = 0u64;
    // coincident points are a probability-zero event realized only through
    // floating point; redraw the replication on a shifted sub-seed
    for attempt in 0..8u64 {
        let sub = rep + attempt * (1 << 48);
        let ts = generator(sub)?;
        pathloss.validate(ts.pattern.window.dim)?;
        let fading_seed = derive_seed(cfg.seed, &[0xFAD0, sub]);
        let mut rng = rng_stream(fading_seed, 0);
        match evaluate_realization(&ts, link, pathloss, cfg, &mut rng) {
            Some((s, n)) => return Ok(RepTally { s, n, rejected }),
            None => rejected += 1,
        }
    }
    Err(Error::estimation(
        "estimate_success: replication kept producing coincident points".to_string(),
    ))
}

fn evaluate_realization<R: Rng>(
    ts: &TransmitterSet,
    link: &LinkSpec,
    pathloss: &PathLossModel,
    cfg: &EstimateConfig,
    rng: &mut R,
) -> Option<(f64, f64)> {
    let pts = &ts.pattern.points;
    let w = ts.pattern.window;
    let theta_eff = link.effective_theta(pathloss);
    let noise = link.noise_factor(pathloss);

    let eval_one = |typical: usize, rng: &mut R| -> Option<f64> {
        let rx = receiver_position(&pts[typical], link, pathloss, &w, rng);
        match cfg.mode {
            EstimatorMode::Conditional => {
                conditional_product(pts, &rx, Some(typical), &w, pathloss, theta_eff)
                    .map(|p| p * noise)
            }
            EstimatorMode::Raw => {
                // desired signal ~ Exp(1); interferer fading iid Exp(1) per link
                let s: f64 = -rng.gen::<f64>().ln();
                let mut interf = Kahan::new();
                for (j, x) in pts.iter().enumerate() {
                    let h: f64 = -rng.gen::<f64>().ln();
                    if j == typical {
                        continue;
                    }
                    let d2 = w.distance_sq(x, &rx);
                    if d2 == 0.0 && pathloss.is_singular() {
                        return None;
                    }
                    interf.add(h * pathloss.ell(d2.sqrt()));
                }
                let noise_term = link.noise.map(|n| n.w / n.p).unwrap_or(0.0);
                Some(if s >= theta_eff * (interf.total() + noise_term) {
                    1.0
                } else {
                    0.0
                })
            }
        }
    };

    match cfg.palm {
        PalmPolicy::FixedCenter => {
            let rx0 = w.center();
            match cfg.mode {
                EstimatorMode::Conditional => {
                    let rx = match link.orientation {
                        Orientation::ReceiverTypical => rx0,
                        Orientation::TransmitterTypical => {
                            receiver_position(&rx0, link, pathloss, &w, rng)
                        }
                    };
                    conditional_product(pts, &rx, None, &w, pathloss, theta_eff)
                        .map(|p| (p * noise, 1.0))
                }
                EstimatorMode::Raw => {
                    let rx = match link.orientation {
                        Orientation::ReceiverTypical => rx0,
                        Orientation::TransmitterTypical => {
                            receiver_position(&rx0, link, pathloss, &w, rng)
                        }
                    };
                    let s: f64 = -rng.gen::<f64>().ln();
                    let mut interf = Kahan::new();
                    for x in pts.iter() {
                        let h: f64 = -rng.gen::<f64>().ln();
                        let d2 = w.distance_sq(x, &rx);
                        if d2 == 0.0 && pathloss.is_singular() {
                            return None;
                        }
                        interf.add(h * pathloss.ell(d2.sqrt()));
                    }
                    let noise_term = link.noise.map(|n| n.w / n.p).unwrap_or(0.0);
                    let ok = s >= theta_eff * (interf.total() + noise_term);
                    Some((if ok { 1.0 } else { 0.0 }, 1.0))
                }
            }
        }
        PalmPolicy::NearestCenter => {
            if pts.is_empty() {
                return Some((noise, 1.0));
            }
            let center = w.center();
            let typical = (0..pts.len())
                .min_by(|&i, &j| {
                    w.distance_sq(&pts[i], &center)
                        .total_cmp(&w.distance_sq(&pts[j], &center))
                })
                .unwrap();
            eval_one(typical, rng).map(|v| (v, 1.0))
        }
        PalmPolicy::AllPoints => {
            if pts.is_empty() {
                // the Palm expectation conditions on a typical point existing;
                // empty realizations contribute to neither side of the ratio
                return Some((0.0, 0.0));
            }
            let mut s = Kahan::new();
            for i in 0..pts.len() {
                match eval_one(i, rng) {
                    Some(v) => s.add(v),
                    None => return None,
                }
            }
            Some((s.total(), pts.len() as f64))
        }
        PalmPolicy::RandomPoint => {
            if pts.is_empty() {
                return Some((0.0, 0.0));
            }
            let n = pts.len();
            let typical = rng.gen_range(0..n);
            // E[n f(uniform point)] = E[sum_x f(x)], so the same ratio
            // denominator keeps the estimator unbiased
            eval_one(typical, rng).map(|v| (n as f64 * v, n as f64))
        }
    }
}

// ---------------------------------------------------------------------------
// closed forms

/// Spatial contention of ALOHA on the unit-rate PPP scaled by lambda:
/// lambda theta^{2/alpha} (2 pi / alpha) Gamma(2/alpha) Gamma(1 - 2/alpha),
/// written with the reflection identity to avoid Gamma evaluations.
pub fn ppp_aloha_gamma(lambda: f64, theta: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(Error::parameter(format!("ppp gamma: alpha must be > 2, got {alpha}")));
    }
    if !(lambda > 0.0 && theta > 0.0) {
        return Err(Error::parameter("ppp gamma: lambda and theta must be > 0".to_string()));
    }
    // Gamma(x) Gamma(1-x) = pi / sin(pi x) with x = 2/alpha
    let x = 2.0 / alpha;
    Ok(lambda * theta.powf(x) * (2.0 * PI / alpha) * PI / (PI * x).sin())
}

/// Exact success probability of PPP(lambda) + ALOHA(eta) under the singular
/// law at unit link gain: exp(-eta * gamma).
pub fn success_ppp_aloha_closed(lambda: f64, eta: f64, theta: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::parameter(format!("eta must be in [0,1], got {eta}")));
    }
    Ok((-eta * ppp_aloha_gamma(lambda, theta, alpha)?).exp())
}

/// Closed-form evaluation of the Poisson-cluster success probability under
/// two-stage thinning (clusters w.p. eta^(1-b), daughters w.p. eta^b).
#[derive(Debug, Clone, Copy)]
pub struct ClusterClosedForm {
    pub p: f64,
    /// 1 - p computed at full relative precision (small-eta safe)
    pub outage: f64,
}

/// Mean of Delta over the ring |z| = rho for a Gaussian scatter kernel:
/// beta(rho) = int Delta(r) r/sigma^2 exp(-(rho-r)^2/(2 sigma^2)) I0s(rho r / sigma^2) dr.
fn cluster_beta(
    rho: f64,
    spec: &ClusterSpec,
    pathloss: &PathLossModel,
    theta: f64,
    opts: QuadOptions,
) -> Result<f64> {
    let s2 = spec.sigma * spec.sigma;
    let f = |r: f64| {
        let d = delta_unchecked(r, pathloss, theta);
        let g = (-(rho - r) * (rho - r) / (2.0 * s2)).exp() * i0_scaled(rho * r / s2);
        d * r / s2 * g
    };
    // integrand support: Delta scale near the origin plus the Gaussian ridge
    let delta_scale = theta.powf(1.0 / pathloss.alpha()).max(1.0);
    let mut pts = vec![
        0.0,
        0.5 * delta_scale,
        delta_scale,
        (rho - 6.0 * spec.sigma).max(0.0),
        rho,
        rho + 6.0 * spec.sigma,
    ];
    pts.retain(|&x| x >= 0.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let finite = quad::integrate_segments(&f, &pts, opts)?;
    let tail = quad::integrate_to_inf(&f, *pts.last().unwrap(), opts)?;
    Ok(finite.value + tail.value)
}

/// Success probability of a Thomas cluster network under the cluster MAC,
/// evaluated by nested adaptive quadrature in polar coordinates.
pub fn cluster_success_closed(
    spec: &ClusterSpec,
    b: f64,
    eta: f64,
    theta: f64,
    pathloss: &PathLossModel,
    rel_tol: f64,
) -> Result<ClusterClosedForm> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::parameter(format!("cluster closed form: b in [0,1], got {b}")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::parameter(format!("cluster closed form: eta in (0,1], got {eta}")));
    }
    pathloss.validate(2)?;
    let opts = QuadOptions::with_rel_tol((rel_tol * 1e-2).max(1e-12));
    let outer = QuadOptions::with_rel_tol(rel_tol);
    let nu = spec.c * eta.powf(b);
    let parent_rate = spec.mu * eta.powf(1.0 - b);

    let beta = |rho: f64| cluster_beta(rho, spec, pathloss, theta, opts).unwrap_or(f64::NAN);

    // IA = int (1 - exp(-nu beta(y))) dy over the plane
    let delta_scale = theta.powf(1.0 / pathloss.alpha()).max(1.0);
    let bp = [delta_scale, spec.sigma, 4.0 * spec.sigma, 8.0 * spec.sigma + delta_scale];
    let ia = quad::integrate_radial_plane(|rho| -(-nu * beta(rho)).exp_m1(), &bp, outer)?;

    // IB1 = int (1 - exp(-nu beta(y))) f(y) dy (so IB = 1 - IB1 exactly)
    let s2 = spec.sigma * spec.sigma;
    let fr = move |rho: f64| (-rho * rho / (2.0 * s2)).exp() / (2.0 * PI * s2);
    let ib1 = quad::integrate_radial_plane(|rho| -(-nu * beta(rho)).exp_m1() * fr(rho), &bp, outer)?;

    if !(ia.value.is_finite() && ib1.value.is_finite()) {
        return Err(Error::numerical(
            "cluster closed form: inner quadrature produced a non-finite value".to_string(),
        ));
    }

    let ln_p = -parent_rate * ia.value + (-ib1.value).ln_1p();
    let p = ln_p.exp();
    Ok(ClusterClosedForm {
        p,
        outage: -ln_p.exp_m1(),
    })
}

/// Daughter-thinning (ALOHA) special case of the cluster closed form.
pub fn success_thomas_aloha_closed(
    spec: &ClusterSpec,
    eta: f64,
    theta: f64,
    alpha: f64,
    rel_tol: f64,
) -> Result<f64> {
    let pl = PathLossModel::Singular { alpha };
    Ok(cluster_success_closed(spec, 1.0, eta, theta, &pl, rel_tol)?.p)
}
