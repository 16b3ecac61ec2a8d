//! Spatial node models: Poisson, Matern type-II hard-core, Thomas cluster,
//! and lattice patterns, together with their second-order product densities
//! and empirical second-order statistics (Ripley K, pair correlation).

use crate::error::{Error, Result};
use crate::geom::{Point, Window, Wrap};
use crate::rng::rng_stream;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use std::f64::consts::PI;

/// Cluster process parameters: Poisson parents of density `mu`, mean `c`
/// daughters per cluster, isotropic Gaussian scatter with std `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpec {
    pub mu: f64,
    pub c: f64,
    pub sigma: f64,
}

impl ClusterSpec {
    pub fn new(mu: f64, c: f64, sigma: f64) -> Result<Self> {
        if !(mu > 0.0 && c > 0.0 && sigma > 0.0) {
            return Err(Error::parameter(format!(
                "cluster spec: mu, c, sigma must all be > 0 (got {mu}, {c}, {sigma})"
            )));
        }
        Ok(ClusterSpec { mu, c, sigma })
    }

    /// Resulting process intensity mu * c.
    pub fn intensity(&self) -> f64 {
        self.mu * self.c
    }
}

/// Generating model recorded on a pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Ppp { intensity: f64 },
    MaternII { parent_intensity: f64, hardcore_radius: f64 },
    Thomas { spec: ClusterSpec },
    Lattice { spacing: f64, rotated: bool },
    /// Produced by a MAC thinning; keeps the pre-thinning model around.
    DerivedByMac { base_intensity: f64 },
}

/// A realization: coordinates plus generating metadata.
#[derive(Debug, Clone)]
pub struct PointPattern {
    pub points: Vec<Point>,
    /// Nominal intensity lambda_t (points per unit volume).
    pub intensity: f64,
    pub model: Model,
    pub window: Window,
    /// For cluster processes: index of the generating parent per point.
    pub cluster_ids: Option<Vec<u32>>,
    pub seed: u64,
}

impl PointPattern {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn empirical_intensity(&self) -> f64 {
        self.points.len() as f64 / self.window.volume()
    }

    /// Smallest pairwise distance (brute force; intended for tests and
    /// hard-core verification on moderate patterns).
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                best = best.min(self.window.distance_sq(&self.points[i], &self.points[j]));
            }
        }
        Some(best.sqrt())
    }
}

fn draw_poisson_count<R: Rng>(rng: &mut R, mean: f64) -> Result<usize> {
    if mean < 0.0 || !mean.is_finite() {
        return Err(Error::parameter(format!("Poisson mean must be finite and >= 0, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::parameter(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as usize)
}

fn draw_uniform_point<R: Rng>(rng: &mut R, window: &Window) -> Point {
    let mut p = [0.0; 3];
    for i in 0..window.dim {
        p[i] = rng.gen::<f64>() * window.sides[i];
    }
    p
}

/// Homogeneous Poisson process of the given intensity.
pub fn gen_ppp(intensity: f64, window: &Window, seed: u64) -> Result<PointPattern> {
    if !(intensity > 0.0) {
        return Err(Error::parameter(format!("gen_ppp: intensity must be > 0, got {intensity}")));
    }
    let mut rng = rng_stream(seed, 0);
    let n = draw_poisson_count(&mut rng, intensity * window.volume())?;
    let points: Vec<Point> = (0..n).map(|_| draw_uniform_point(&mut rng, window)).collect();
    Ok(PointPattern {
        points,
        intensity,
        model: Model::Ppp { intensity },
        window: *window,
        cluster_ids: None,
        seed,
    })
}

/// Retained intensity of Matern type-II thinning (planar case):
/// (1 - exp(-lambda_p pi h^2)) / (pi h^2), continuous at h = 0.
pub fn matern_intensity(parent_intensity: f64, h: f64) -> f64 {
    if h == 0.0 {
        return parent_intensity;
    }
    let c = PI * h * h;
    let x = parent_intensity * c;
    // -expm1(-x) = 1 - exp(-x), accurate for small x
    (-(-x).exp_m1()) / c
}

/// Matern type-II hard-core process: PPP parents carry iid uniform marks;
/// a point survives iff no point with a smaller mark lies within `h`
/// (ties broken by point index, which is a probability-zero event kept
/// only so that realizations are a pure function of the seed).
pub fn gen_matern2(
    parent_intensity: f64,
    h: f64,
    window: &Window,
    seed: u64,
) -> Result<PointPattern> {
    if !(parent_intensity > 0.0) {
        return Err(Error::parameter(format!(
            "gen_matern2: parent intensity must be > 0, got {parent_intensity}"
        )));
    }
    if !(h >= 0.0) {
        return Err(Error::parameter(format!("gen_matern2: h must be >= 0, got {h}")));
    }
    if window.dim != 2 {
        return Err(Error::parameter("gen_matern2: only the planar case is defined".to_string()));
    }
    let retained_intensity = matern_intensity(parent_intensity, h);
    if retained_intensity * window.volume() < 10.0 {
        log::warn!(
            "gen_matern2: expected retained count {:.2} < 10; estimator variance will be poor",
            retained_intensity * window.volume()
        );
    }

    let mut rng = rng_stream(seed, 0);
    let n = draw_poisson_count(&mut rng, parent_intensity * window.volume())?;
    let pts: Vec<Point> = (0..n).map(|_| draw_uniform_point(&mut rng, window)).collect();
    let marks: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();

    let keep = matern_retention(&pts, &marks, h, window);
    let points: Vec<Point> = pts
        .iter()
        .zip(&keep)
        .filter_map(|(p, &k)| if k { Some(*p) } else { None })
        .collect();

    Ok(PointPattern {
        points,
        intensity: retained_intensity,
        model: Model::MaternII {
            parent_intensity,
            hardcore_radius: h,
        },
        window: *window,
        cluster_ids: None,
        seed,
    })
}

/// Matern II retention predicate for every point, grid-accelerated.
fn matern_retention(pts: &[Point], marks: &[f64], h: f64, window: &Window) -> Vec<bool> {
    let n = pts.len();
    if h == 0.0 || n == 0 {
        return vec![true; n];
    }
    let h2 = h * h;
    let beats = |j: usize, i: usize| marks[j] < marks[i] || (marks[j] == marks[i] && j < i);

    let grid = CellGrid::build(pts, window, h);
    match grid {
        Some(grid) => (0..n)
            .map(|i| {
                let mut keep = true;
                grid.visit_neighbors(i, |j| {
                    if beats(j, i) && window.distance_sq(&pts[i], &pts[j]) < h2 {
                        keep = false;
                        false // stop scanning
                    } else {
                        true
                    }
                });
                keep
            })
            .collect(),
        None => (0..n)
            .map(|i| {
                !(0..n).any(|j| {
                    j != i && beats(j, i) && window.distance_sq(&pts[i], &pts[j]) < h2
                })
            })
            .collect(),
    }
}

/// Thomas cluster process. Under toroidal wrap, parents live in the window
/// and daughters wrap around, which is exact on the torus; under guard-band
/// wrap, parents are generated in a window enlarged by 5 sigma on every
/// side and daughters falling outside the window are discarded. Parents are
/// not part of the output.
pub fn gen_thomas(spec: &ClusterSpec, window: &Window, seed: u64) -> Result<PointPattern> {
    if window.dim != 2 {
        return Err(Error::parameter("gen_thomas: only the planar case is defined".to_string()));
    }
    let mut rng = rng_stream(seed, 0);
    let normal = Normal::new(0.0, spec.sigma)
        .map_err(|e| Error::parameter(format!("gen_thomas: sigma {}: {e}", spec.sigma)))?;

    let mut points = Vec::new();
    let mut cluster_ids = Vec::new();

    match window.wrap {
        Wrap::Toroidal => {
            let n_parents = draw_poisson_count(&mut rng, spec.mu * window.volume())?;
            for pid in 0..n_parents {
                let parent = draw_uniform_point(&mut rng, window);
                let k = draw_poisson_count(&mut rng, spec.c)?;
                for _ in 0..k {
                    let mut p = parent;
                    for ax in 0..window.dim {
                        p[ax] += normal.sample(&mut rng);
                    }
                    points.push(window.wrap_point(&p));
                    cluster_ids.push(pid as u32);
                }
            }
        }
        Wrap::GuardBand { .. } => {
            let pad = 5.0 * spec.sigma;
            let enlarged: Vec<f64> = window.sides[..window.dim]
                .iter()
                .map(|s| s + 2.0 * pad)
                .collect();
            let gen_window = Window::new(window.dim, &enlarged, Wrap::GuardBand { band: 0.0 })?;
            let n_parents = draw_poisson_count(&mut rng, spec.mu * gen_window.volume())?;
            for pid in 0..n_parents {
                let mut parent = draw_uniform_point(&mut rng, &gen_window);
                for ax in 0..window.dim {
                    parent[ax] -= pad;
                }
                let k = draw_poisson_count(&mut rng, spec.c)?;
                for _ in 0..k {
                    let mut p = parent;
                    for ax in 0..window.dim {
                        p[ax] += normal.sample(&mut rng);
                    }
                    if window.contains(&p) {
                        points.push(p);
                        cluster_ids.push(pid as u32);
                    }
                }
            }
        }
    }

    Ok(PointPattern {
        points,
        intensity: spec.intensity(),
        model: Model::Thomas { spec: *spec },
        window: *window,
        cluster_ids: Some(cluster_ids),
        seed,
    })
}

/// Scaled integer lattice with a uniform random translation in the
/// fundamental cell; for d = 2 an optional uniform rotation about the
/// window center (rotation is incompatible with toroidal TDMA scheduling
/// and is off in every scheduling path).
pub fn gen_lattice(
    d: usize,
    spacing: f64,
    window: &Window,
    seed: u64,
    rotate: bool,
) -> Result<PointPattern> {
    if !(spacing > 0.0) {
        return Err(Error::parameter(format!("gen_lattice: spacing must be > 0, got {spacing}")));
    }
    if window.dim != d {
        return Err(Error::parameter(format!(
            "gen_lattice: window dimension {} != requested d={d}",
            window.dim
        )));
    }
    let mut counts = [0usize; 3];
    for i in 0..d {
        let ratio = window.sides[i] / spacing;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
            return Err(Error::parameter(format!(
                "gen_lattice: window side {} is not an integer multiple of spacing {spacing}",
                window.sides[i]
            )));
        }
        counts[i] = n as usize;
    }
    if rotate && d != 2 {
        return Err(Error::parameter("gen_lattice: rotation is only defined for d = 2".to_string()));
    }

    let mut rng = rng_stream(seed, 0);
    let mut offset = [0.0; 3];
    for ax in 0..d {
        offset[ax] = rng.gen::<f64>() * spacing;
    }

    let mut points = Vec::new();
    if !rotate {
        let mut idx = [0usize; 3];
        loop {
            let mut p = [0.0; 3];
            for ax in 0..d {
                p[ax] = (idx[ax] as f64) * spacing + offset[ax];
                if p[ax] >= window.sides[ax] {
                    p[ax] -= window.sides[ax];
                }
            }
            points.push(p);
            // odometer increment over the d-dimensional index
            let mut ax = 0;
            loop {
                idx[ax] += 1;
                if idx[ax] < counts[ax] {
                    break;
                }
                idx[ax] = 0;
                ax += 1;
                if ax == d {
                    break;
                }
            }
            if ax == d {
                break;
            }
        }
    } else {
        let angle = rng.gen::<f64>() * std::f64::consts::FRAC_PI_2;
        let (s, c) = angle.sin_cos();
        let cx = 0.5 * window.sides[0];
        let cy = 0.5 * window.sides[1];
        // generate over a disc circumscribing the window, then clip
        let radius = (cx * cx + cy * cy).sqrt() + spacing;
        let m = (radius / spacing).ceil() as i64;
        for i in -m..=m {
            for j in -m..=m {
                let x0 = i as f64 * spacing + offset[0];
                let y0 = j as f64 * spacing + offset[1];
                let p = [cx + c * x0 - s * y0, cy + s * x0 + c * y0, 0.0];
                if window.contains(&p) {
                    points.push(p);
                }
            }
        }
    }

    Ok(PointPattern {
        points,
        intensity: spacing.powi(-(d as i32)),
        model: Model::Lattice { spacing, rotated: rotate },
        window: *window,
        cluster_ids: None,
        seed,
    })
}

/// Analytic second-order product density rho2(r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductDensity {
    Ppp { intensity: f64 },
    MaternII { parent_intensity: f64, hardcore_radius: f64 },
    Thomas { spec: ClusterSpec },
}

/// Lens-overlap helper: area of the union of two discs of radius h whose
/// centers are r apart (the paper's Gamma_h), valid for 0 <= r <= 2h.
pub fn gamma_h(r: f64, h: f64) -> f64 {
    let ratio = (r / (2.0 * h)).clamp(-1.0, 1.0);
    2.0 * PI * h * h - 2.0 * h * h * ratio.acos() + 0.5 * r * (4.0 * h * h - r * r).max(0.0).sqrt()
}

impl ProductDensity {
    pub fn from_model(model: &Model) -> Option<Self> {
        match *model {
            Model::Ppp { intensity } => Some(ProductDensity::Ppp { intensity }),
            Model::MaternII {
                parent_intensity,
                hardcore_radius,
            } => Some(ProductDensity::MaternII {
                parent_intensity,
                hardcore_radius,
            }),
            Model::Thomas { spec } => Some(ProductDensity::Thomas { spec }),
            _ => None,
        }
    }

    /// Intensity of the process the density refers to.
    pub fn intensity(&self) -> f64 {
        match *self {
            ProductDensity::Ppp { intensity } => intensity,
            ProductDensity::MaternII {
                parent_intensity,
                hardcore_radius,
            } => matern_intensity(parent_intensity, hardcore_radius),
            ProductDensity::Thomas { spec } => spec.intensity(),
        }
    }

    /// rho2 at separation r >= 0.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::parameter(format!("rho2: separation must be >= 0, got {r}")));
        }
        Ok(match *self {
            ProductDensity::Ppp { intensity } => intensity * intensity,
            ProductDensity::MaternII {
                parent_intensity: lp,
                hardcore_radius: h,
            } => {
                if h == 0.0 {
                    return Ok(lp * lp);
                }
                if r < h {
                    0.0
                } else if r <= 2.0 * h {
                    let c = PI * h * h;
                    let g = gamma_h(r, h);
                    let e_c = -(-lp * c).exp_m1(); // 1 - exp(-lp c)
                    let e_g = -(-lp * g).exp_m1();
                    (2.0 * g * e_c - 2.0 * c * e_g) / (c * g * (g - c))
                } else {
                    let lam = matern_intensity(lp, h);
                    lam * lam
                }
            }
            ProductDensity::Thomas { spec } => {
                let lam = spec.intensity();
                let s2 = spec.sigma * spec.sigma;
                lam * lam * (1.0 + (-r * r / (4.0 * s2)).exp() / (4.0 * PI * s2 * spec.mu))
            }
        })
    }

    /// Breakpoints where the density is non-smooth (quadrature panels
    /// should not straddle them).
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            ProductDensity::MaternII { hardcore_radius: h, .. } if h > 0.0 => vec![h, 2.0 * h],
            _ => Vec::new(),
        }
    }

    /// Ripley K implied by rho2: K(r) = lambda^-2 int_{B(0,r)} rho2.
    pub fn ripley_k(&self, r: f64) -> Result<f64> {
        match *self {
            ProductDensity::Ppp { .. } => Ok(PI * r * r),
            ProductDensity::Thomas { spec } => {
                let s2 = spec.sigma * spec.sigma;
                Ok(PI * r * r + (-(-r * r / (4.0 * s2)).exp_m1()) / spec.mu)
            }
            ProductDensity::MaternII { .. } => {
                let lam2 = self.intensity().powi(2);
                let pts: Vec<f64> = std::iter::once(0.0)
                    .chain(self.breakpoints().into_iter().filter(|&b| b < r))
                    .chain(std::iter::once(r))
                    .collect();
                let q = crate::num::quad::integrate_segments(
                    |s| self.eval(s).unwrap_or(0.0) * s,
                    &pts,
                    crate::num::quad::QuadOptions::with_rel_tol(1e-9),
                )?;
                Ok(2.0 * PI * q.value / lam2)
            }
        }
    }
}

/// Empirical K-function averaged over patterns.
#[derive(Debug, Clone)]
pub struct KEstimate {
    pub radii: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_patterns: usize,
}

/// Unbiased toroidal (or border-corrected) Ripley K estimator, averaged
/// over the supplied patterns.
pub fn estimate_k_function(patterns: &[PointPattern], radii: &[f64]) -> Result<KEstimate> {
    if patterns.is_empty() {
        return Err(Error::estimation("estimate_k_function: no patterns".to_string()));
    }
    if radii.is_empty() || radii.iter().any(|&r| r < 0.0) {
        return Err(Error::parameter("estimate_k_function: radii must be non-negative".to_string()));
    }
    let window = patterns[0].window;
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    if rmax > window.max_metric_radius() {
        return Err(Error::parameter(format!(
            "estimate_k_function: max radius {rmax} exceeds unambiguous metric range {}",
            window.max_metric_radius()
        )));
    }

    let mut sorted: Vec<f64> = radii.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut per_pattern: Vec<Vec<f64>> = Vec::with_capacity(patterns.len());
    for pat in patterns {
        if pat.window != window {
            return Err(Error::usage("estimate_k_function: mixed windows".to_string()));
        }
        let n = pat.points.len();
        if n < 2 {
            continue;
        }
        let mut counts = vec![0usize; sorted.len()];
        let lambda_hat = n as f64 / window.volume();
        match window.wrap {
            Wrap::Toroidal => {
                for_pairs_within(&pat.points, &window, rmax, |_, _, d2| {
                    let d = d2.sqrt();
                    // ordered pairs: count twice
                    for (k, &r) in sorted.iter().enumerate() {
                        if d <= r {
                            counts[k] += 2;
                            break;
                        }
                    }
                });
                // counts[k] currently holds pairs whose distance falls in
                // (r_{k-1}, r_k]; accumulate to get <= r_k
                for k in 1..counts.len() {
                    counts[k] += counts[k - 1];
                }
                // mean neighbor count per point over the intensity estimate;
                // exact for deterministic patterns, O(1/n) bias otherwise
                let denom = lambda_hat * n as f64;
                per_pattern.push(counts.iter().map(|&c| c as f64 / denom).collect());
            }
            Wrap::GuardBand { .. } => {
                // border method per radius: centers at distance >= r from the edge
                let mut kvals = vec![0.0; sorted.len()];
                for (k, &r) in sorted.iter().enumerate() {
                    let mut centers = 0usize;
                    let mut neigh = 0usize;
                    for (i, p) in pat.points.iter().enumerate() {
                        if !window.is_interior(p, r) {
                            continue;
                        }
                        centers += 1;
                        for (j, q) in pat.points.iter().enumerate() {
                            if i != j && window.distance_sq(p, q) <= r * r {
                                neigh += 1;
                            }
                        }
                    }
                    if centers == 0 {
                        kvals[k] = f64::NAN;
                    } else {
                        kvals[k] = neigh as f64 / (centers as f64 * lambda_hat);
                    }
                }
                per_pattern.push(kvals);
            }
        }
    }
    if per_pattern.is_empty() {
        return Err(Error::estimation(
            "estimate_k_function: no pattern had >= 2 points".to_string(),
        ));
    }

    let m = per_pattern.len() as f64;
    let mut mean = vec![0.0; sorted.len()];
    let mut se = vec![0.0; sorted.len()];
    for k in 0..sorted.len() {
        let vals: Vec<f64> = per_pattern.iter().map(|v| v[k]).collect();
        let mu = crate::num::kahan::sum(&vals) / m;
        mean[k] = mu;
        if per_pattern.len() > 1 {
            let var = crate::num::kahan::sum_by(&vals, |v| (v - mu) * (v - mu)) / (m - 1.0);
            se[k] = (var / m).sqrt();
        }
    }
    Ok(KEstimate {
        radii: sorted,
        mean,
        std_err: se,
        n_patterns: per_pattern.len(),
    })
}

/// Empirical pair-correlation histogram: rho2 averaged over annuli.
#[derive(Debug, Clone)]
pub struct Rho2Estimate {
    /// bin edges, length nbins + 1
    pub edges: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_patterns: usize,
}

/// Binned estimate of the second-order product density on a torus:
/// ordered-pair count in each annulus divided by |W| * annulus area,
/// averaged across patterns with the cross-pattern standard error.
pub fn estimate_rho2(patterns: &[PointPattern], edges: &[f64]) -> Result<Rho2Estimate> {
    if patterns.is_empty() {
        return Err(Error::estimation("estimate_rho2: no patterns".to_string()));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) || edges[0] < 0.0 {
        return Err(Error::parameter("estimate_rho2: edges must be increasing and >= 0".to_string()));
    }
    let window = patterns[0].window;
    let rmax = *edges.last().unwrap();
    if rmax > window.max_metric_radius() {
        return Err(Error::parameter(format!(
            "estimate_rho2: max edge {rmax} exceeds unambiguous metric range {}",
            window.max_metric_radius()
        )));
    }
    let nbins = edges.len() - 1;
    let dim = window.dim;
    let shell = |r: f64| match dim {
        1 => 2.0 * r,
        2 => PI * r * r,
        _ => 4.0 / 3.0 * PI * r * r * r,
    };
    let areas: Vec<f64> = (0..nbins)
        .map(|k| shell(edges[k + 1]) - shell(edges[k]))
        .collect();

    let mut per_pattern: Vec<Vec<f64>> = Vec::with_capacity(patterns.len());
    for pat in patterns {
        if pat.window != window {
            return Err(Error::usage("estimate_rho2: mixed windows".to_string()));
        }
        let mut counts = vec![0usize; nbins];
        for_pairs_within(&pat.points, &window, rmax, |_, _, d2| {
            let d = d2.sqrt();
            if d < edges[0] {
                return;
            }
            // linear scan is fine for ~20 bins
            for k in 0..nbins {
                if d <= edges[k + 1] {
                    counts[k] += 2; // ordered pairs
                    break;
                }
            }
        });
        let vol = window.volume();
        per_pattern.push(
            counts
                .iter()
                .zip(&areas)
                .map(|(&c, &a)| c as f64 / (vol * a))
                .collect(),
        );
    }

    let m = per_pattern.len() as f64;
    let mut mean = vec![0.0; nbins];
    let mut se = vec![0.0; nbins];
    for k in 0..nbins {
        let vals: Vec<f64> = per_pattern.iter().map(|v| v[k]).collect();
        let mu = crate::num::kahan::sum(&vals) / m;
        mean[k] = mu;
        if per_pattern.len() > 1 {
            let var = crate::num::kahan::sum_by(&vals, |v| (v - mu) * (v - mu)) / (m - 1.0);
            se[k] = (var / m).sqrt();
        }
    }
    Ok(Rho2Estimate {
        edges: edges.to_vec(),
        mean,
        std_err: se,
        n_patterns: per_pattern.len(),
    })
}

/// Analytic annulus average of rho2, the exact discretization the binned
/// empirical estimator converges to.
pub fn rho2_bin_average(density: &ProductDensity, edges: &[f64]) -> Result<Vec<f64>> {
    let dim = 2; // analytic models are planar
    let _ = dim;
    let mut out = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let mut pts = vec![w[0]];
        pts.extend(density.breakpoints().into_iter().filter(|&b| b > w[0] && b < w[1]));
        pts.push(w[1]);
        let q = crate::num::quad::integrate_segments(
            |r| density.eval(r).unwrap_or(0.0) * r,
            &pts,
            crate::num::quad::QuadOptions::with_rel_tol(1e-9),
        )?;
        let area = PI * (w[1] * w[1] - w[0] * w[0]);
        out.push(2.0 * PI * q.value / area);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// cell-grid pair iteration

pub(crate) struct CellGrid {
    ncells: [usize; 3],
    cell_of: Vec<usize>,
    heads: Vec<i32>,
    next: Vec<i32>,
    dim: usize,
}

impl CellGrid {
    /// Build a grid with cells no smaller than `min_cell`; None if the
    /// window is too small for a useful grid (callers fall back to O(n^2)).
    fn build(pts: &[Point], window: &Window, min_cell: f64) -> Option<CellGrid> {
        if pts.len() < 64 || min_cell <= 0.0 {
            return None;
        }
        let mut ncells = [1usize; 3];
        for i in 0..window.dim {
            let n = (window.sides[i] / min_cell).floor() as usize;
            if n < 4 {
                return None;
            }
            ncells[i] = n;
        }
        let total: usize = ncells[..window.dim].iter().product();
        let mut heads = vec![-1i32; total];
        let mut next = vec![-1i32; pts.len()];
        let mut cell_of = vec![0usize; pts.len()];
        for (i, p) in pts.iter().enumerate() {
            let mut idx = 0usize;
            for ax in 0..window.dim {
                let c = ((p[ax] / window.sides[ax]) * ncells[ax] as f64) as usize;
                let c = c.min(ncells[ax] - 1);
                idx = idx * ncells[ax] + c;
            }
            cell_of[i] = idx;
            next[i] = heads[idx];
            heads[idx] = i as i32;
        }
        Some(CellGrid {
            ncells,
            cell_of,
            heads,
            next,
            dim: window.dim,
        })
    }

    fn decompose(&self, mut idx: usize) -> [i64; 3] {
        let mut out = [0i64; 3];
        for ax in (0..self.dim).rev() {
            out[ax] = (idx % self.ncells[ax]) as i64;
            idx /= self.ncells[ax];
        }
        out
    }

    fn compose(&self, coords: &[i64; 3]) -> usize {
        let mut idx = 0usize;
        for ax in 0..self.dim {
            let n = self.ncells[ax] as i64;
            let c = coords[ax].rem_euclid(n) as usize;
            idx = idx * self.ncells[ax] + c;
        }
        idx
    }

    /// Visit every point in the 3^d neighborhood of point `i`'s cell
    /// (excluding `i` itself). The callback returns false to stop early.
    pub(crate) fn visit_neighbors(&self, i: usize, mut f: impl FnMut(usize) -> bool) {
        let base = self.decompose(self.cell_of[i]);
        let mut offs = [0i64; 3];
        let range: [i64; 3] = [-1, 0, 1];
        for &dx in &range {
            offs[0] = base[0] + dx;
            for &dy in &range[..if self.dim >= 2 { 3 } else { 1 }] {
                offs[1] = base[1] + dy;
                for &dz in &range[..if self.dim >= 3 { 3 } else { 1 }] {
                    offs[2] = base[2] + dz;
                    let cell = self.compose(&offs);
                    let mut cur = self.heads[cell];
                    while cur >= 0 {
                        let j = cur as usize;
                        if j != i && !f(j) {
                            return;
                        }
                        cur = self.next[j];
                    }
                }
            }
        }
    }
}

/// Grid accessor shared with the MAC layer (same retention predicate for
/// the CSMA thinning as for the generator).
pub(crate) fn grid_for(pts: &[Point], window: &Window, min_cell: f64) -> Option<CellGrid> {
    CellGrid::build(pts, window, min_cell)
}

/// Visit every unordered pair with distance <= rmax (callback receives
/// squared distance). Uses a cell grid when worthwhile.
pub(crate) fn for_pairs_within(
    pts: &[Point],
    window: &Window,
    rmax: f64,
    mut f: impl FnMut(usize, usize, f64),
) {
    let r2 = rmax * rmax;
    if let Some(grid) = CellGrid::build(pts, window, rmax) {
        for i in 0..pts.len() {
            grid.visit_neighbors(i, |j| {
                if j > i {
                    let d2 = window.distance_sq(&pts[i], &pts[j]);
                    if d2 <= r2 {
                        f(i, j, d2);
                    }
                }
                true
            });
        }
    } else {
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let d2 = window.distance_sq(&pts[i], &pts[j]);
                if d2 <= r2 {
                    f(i, j, d2);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppp_expected_count() {
        // intensity 0.3 on 50x50 -> mean 750
        let w = Window::square(50.0).unwrap();
        let mut total = 0usize;
        let reps = 500;
        for s in 0..reps {
            total += gen_ppp(0.3, &w, s).unwrap().len();
        }
        let mean = total as f64 / reps as f64;
        // 3 sigma band: sd = sqrt(750/reps)
        let band = 3.0 * (750.0 / reps as f64).sqrt();
        assert!((mean - 750.0).abs() < band, "mean {mean} outside {band} of 750");
    }

    #[test]
    fn ppp_1d_expected_count() {
        let w = Window::line(100.0).unwrap();
        let mut total = 0usize;
        let reps = 500;
        for s in 0..reps {
            total += gen_ppp(1.0, &w, s).unwrap().len();
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 100.0).abs() < 3.0 * (100.0 / reps as f64).sqrt());
    }

    #[test]
    fn ppp_rejects_bad_intensity() {
        let w = Window::square(10.0).unwrap();
        assert!(gen_ppp(0.0, &w, 1).is_err());
        assert!(gen_ppp(-1.0, &w, 1).is_err());
    }

    #[test]
    fn ppp_deterministic() {
        let w = Window::square(20.0).unwrap();
        let a = gen_ppp(0.5, &w, 42).unwrap();
        let b = gen_ppp(0.5, &w, 42).unwrap();
        assert_eq!(a.points, b.points);
        let c = gen_ppp(0.5, &w, 43).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn matern_intensity_formula() {
        // lambda_p = 0.3, h = 1 -> 0.194277 (the 0.194 working point)
        let v = matern_intensity(0.3, 1.0);
        assert!((v - 0.194_276_893_895_597_63).abs() < 1e-14, "{v}");
        // h -> 0 limit
        assert_eq!(matern_intensity(0.3, 0.0), 0.3);
        assert!((matern_intensity(0.3, 1e-9) - 0.3).abs() < 1e-9);
    }

    #[test]
    fn matern_hard_core_holds() {
        let w = Window::square(30.0).unwrap();
        for seed in 0..20 {
            let p = gen_matern2(0.3, 1.5, &w, seed).unwrap();
            if let Some(d) = p.min_pairwise_distance() {
                assert!(d >= 1.5, "seed {seed}: min distance {d} < h");
            }
        }
    }

    #[test]
    fn matern_h_zero_keeps_everything() {
        let w = Window::square(20.0).unwrap();
        let p = gen_matern2(0.4, 0.0, &w, 9).unwrap();
        let q = gen_ppp(0.4, &w, 9).unwrap();
        assert_eq!(p.len(), q.len());
    }

    #[test]
    fn matern_empirical_intensity() {
        let w = Window::square(50.0).unwrap();
        let mut total = 0usize;
        let reps = 500;
        for s in 0..reps {
            total += gen_matern2(0.3, 1.0, &w, s).unwrap().len();
        }
        let mean = total as f64 / (reps as f64 * w.volume());
        let expect = matern_intensity(0.3, 1.0);
        // rough 4-sigma band treating counts as Poisson-ish
        let band = 4.0 * (expect / (reps as f64 * w.volume())).sqrt();
        assert!((mean - expect).abs() < band, "mean {mean} vs {expect} +/- {band}");
    }

    #[test]
    fn thomas_sigma_limit_and_intensity() {
        let spec = ClusterSpec::new(0.1, 4.0, 1e-9).unwrap();
        let w = Window::square(40.0).unwrap();
        let p = gen_thomas(&spec, &w, 3).unwrap();
        let ids = p.cluster_ids.as_ref().unwrap();
        // sigma ~ 0: daughters coincide with their parent
        for i in 1..p.len() {
            if ids[i] == ids[i - 1] {
                assert!(p.window.distance(&p.points[i], &p.points[i - 1]) < 1e-6);
            }
        }
        assert!((ClusterSpec::new(0.1, 4.0, 3.6).unwrap().intensity() - 0.4).abs() < 1e-15);
        assert!((ClusterSpec::new(0.12, 4.0, 3.6).unwrap().intensity() - 0.48).abs() < 1e-15);
    }

    #[test]
    fn thomas_empirical_intensity() {
        let spec = ClusterSpec::new(0.1, 4.0, 3.6).unwrap();
        let w = Window::square(60.0).unwrap();
        let reps = 500;
        let mut total = 0usize;
        for s in 0..reps {
            total += gen_thomas(&spec, &w, s).unwrap().len();
        }
        let mean = total as f64 / (reps as f64 * w.volume());
        // daughters are clustered; inflate the band vs plain Poisson
        let band = 8.0 * (0.4 / (reps as f64 * w.volume())).sqrt();
        assert!((mean - 0.4).abs() < band, "mean {mean}");
    }

    #[test]
    fn lattice_counts_and_spacing() {
        let w = Window::square(30.0).unwrap();
        let p = gen_lattice(2, 1.0, &w, 5, false).unwrap();
        assert_eq!(p.len(), 900);
        let w1 = Window::line(100.0).unwrap();
        let p1 = gen_lattice(1, 1.0, &w1, 5, false).unwrap();
        assert_eq!(p1.len(), 100);
        // nearest neighbor exactly the spacing (check a few points)
        let q = gen_lattice(2, 1.5, &Window::square(15.0).unwrap(), 8, false).unwrap();
        for i in 0..10 {
            let mut best = f64::INFINITY;
            for j in 0..q.len() {
                if j != i {
                    best = best.min(q.window.distance(&q.points[i], &q.points[j]));
                }
            }
            assert!((best - 1.5).abs() < 1e-9, "nn {best}");
        }
        assert!(gen_lattice(2, 0.7, &w, 5, false).is_err());
    }

    #[test]
    fn rho2_values() {
        // PPP
        let ppp = ProductDensity::Ppp { intensity: 0.5 };
        assert!((ppp.eval(3.7).unwrap() - 0.25).abs() < 1e-15);
        // Matern below h
        let m = ProductDensity::MaternII {
            parent_intensity: 0.3,
            hardcore_radius: 1.0,
        };
        assert_eq!(m.eval(0.9).unwrap(), 0.0);
        // continuity at 2h
        let lo = m.eval(2.0 - 1e-9).unwrap();
        let hi = m.eval(2.0 + 1e-9).unwrap();
        assert!((lo - hi).abs() < 1e-6, "{lo} vs {hi}");
        // Thomas at r=0 with Fig-style parameters
        let t = ProductDensity::Thomas {
            spec: ClusterSpec::new(0.1, 4.0, 3.6).unwrap(),
        };
        let v = t.eval(0.0).unwrap();
        assert!((v - 0.169_823_2).abs() < 1e-5, "{v}");
        // mixing: rho2 -> lambda^2
        assert!((t.eval(1e4).unwrap() - 0.16).abs() < 1e-12);
        assert!(t.eval(-1.0).is_err());
    }

    #[test]
    fn k_function_poisson_and_hardcore() {
        let w = Window::square(40.0).unwrap();
        let pats: Vec<_> = (0..60).map(|s| gen_ppp(0.5, &w, s).unwrap()).collect();
        let k = estimate_k_function(&pats, &[2.0]).unwrap();
        let expect = PI * 4.0;
        assert!(
            (k.mean[0] - expect).abs() < 4.0 * k.std_err[0].max(0.05),
            "K(2) = {} +/- {}",
            k.mean[0],
            k.std_err[0]
        );

        let mats: Vec<_> = (0..20).map(|s| gen_matern2(0.3, 1.0, &w, s).unwrap()).collect();
        let km = estimate_k_function(&mats, &[0.5]).unwrap();
        assert_eq!(km.mean[0], 0.0);
    }

    #[test]
    fn k_function_lattice_neighbors() {
        let w = Window::square(30.0).unwrap();
        let pats: Vec<_> = (0..3).map(|s| gen_lattice(2, 1.0, &w, s, false).unwrap()).collect();
        let k = estimate_k_function(&pats, &[1.1]).unwrap();
        // exactly 4 neighbors within 1.1 at unit spacing; K = 4 / lambda = 4
        assert!((k.mean[0] - 4.0).abs() < 1e-9, "{}", k.mean[0]);
    }

    #[test]
    fn k_function_rejects_empty() {
        assert!(estimate_k_function(&[], &[1.0]).is_err());
    }

    #[test]
    fn rho2_empirical_matches_analytic_for_ppp() {
        let w = Window::square(40.0).unwrap();
        let pats: Vec<_> = (0..80).map(|s| gen_ppp(0.5, &w, s).unwrap()).collect();
        let edges: Vec<f64> = (0..=8).map(|i| 0.5 + 0.25 * i as f64).collect();
        let est = estimate_rho2(&pats, &edges).unwrap();
        for (k, &m) in est.mean.iter().enumerate() {
            assert!(
                (m - 0.25).abs() < 4.0 * est.std_err[k],
                "bin {k}: {m} +/- {}",
                est.std_err[k]
            );
        }
    }

    #[test]
    fn thomas_k_exceeds_poisson() {
        let spec = ClusterSpec::new(0.1, 4.0, 3.6).unwrap();
        let w = Window::square(72.0).unwrap();
        let pats: Vec<_> = (0..40).map(|s| gen_thomas(&spec, &w, s).unwrap()).collect();
        let d = ProductDensity::Thomas { spec };
        let radii = [2.0, 5.0];
        let k = estimate_k_function(&pats, &radii).unwrap();
        for (i, &r) in radii.iter().enumerate() {
            let analytic = d.ripley_k(r).unwrap();
            assert!(k.mean[i] > PI * r * r, "clustering should exceed pi r^2");
            assert!(
                (k.mean[i] - analytic).abs() < 4.0 * k.std_err[i],
                "r={r}: {} vs {analytic} +/- {}",
                k.mean[i],
                k.std_err[i]
            );
        }
    }
}
