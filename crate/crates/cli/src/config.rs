//! Flat sectioned key-value config files (INI-like).
//!
//! Grammar, exactly:
//!   file     := line*
//!   line     := ws (comment | section | pair | empty) ws NEWLINE
//!   comment  := ('#' | ';') any*
//!   section  := '[' name ']'
//!   pair     := key ws '=' ws value      (value runs to end of line)
//! Keys and section names are ASCII lowercase/digits/underscore. Values
//! never continue across lines. Unknown sections or keys are parse errors,
//! so typos cannot silently change an experiment.

use spatcon_core::harness::{MacFamily, SweepConfig};
use spatcon_core::outage::{EstimatorMode, LinkSpec, PalmPolicy, PathLossModel};
use spatcon_core::pointprocess::{ClusterSpec, Model};
use std::collections::BTreeMap;
use std::fmt;

/// Parse-stage failure (malformed text, unknown keys, bad numbers).
#[derive(Debug)]
pub struct ParseError(pub String);

/// Cross-field validation failure (inadmissible combinations).
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config parse error: {}", self.0)
    }
}
impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config validation error: {}", self.0)
    }
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

const KNOWN: &[(&str, &[&str])] = &[
    (
        "model",
        &[
            "type",
            "intensity",
            "parent_intensity",
            "hardcore_radius",
            "mu",
            "c",
            "sigma",
            "spacing",
            "dimension",
        ],
    ),
    ("mac", &["type", "b"]),
    (
        "channel",
        &[
            "alpha",
            "pathloss",
            "theta",
            "link_distance",
            "orientation",
            "noise_w",
            "noise_p",
        ],
    ),
    (
        "sweep",
        &["etas", "eta_hi", "eta_lo", "points", "reps", "seed", "estimator", "palm"],
    ),
    ("output", &["dir"]),
];

pub fn parse_sections(text: &str) -> Result<Sections, ParseError> {
    let mut out: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ParseError(format!("line {}: unterminated section", lineno + 1)))?
                .trim()
                .to_string();
            let known = KNOWN.iter().find(|(s, _)| *s == name);
            if known.is_none() {
                return Err(ParseError(format!(
                    "line {}: unknown section [{name}]",
                    lineno + 1
                )));
            }
            out.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ParseError(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let section = current
            .clone()
            .ok_or_else(|| ParseError(format!("line {}: key before any [section]", lineno + 1)))?;
        let allowed = KNOWN.iter().find(|(s, _)| *s == section).unwrap().1;
        if !allowed.contains(&key.as_str()) {
            return Err(ParseError(format!(
                "line {}: unknown key `{key}` in [{section}]",
                lineno + 1
            )));
        }
        out.get_mut(&section).unwrap().insert(key, value);
    }
    Ok(out)
}

fn get_f64(sec: &BTreeMap<String, String>, key: &str, what: &str) -> Result<f64, ParseError> {
    let v = sec
        .get(key)
        .ok_or_else(|| ParseError(format!("missing `{key}` in [{what}]")))?;
    v.parse::<f64>()
        .map_err(|_| ParseError(format!("`{key}` in [{what}]: not a number: {v:?}")))
}

fn opt_f64(sec: &BTreeMap<String, String>, key: &str, what: &str) -> Result<Option<f64>, ParseError> {
    match sec.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<f64>()
            .map(Some)
            .map_err(|_| ParseError(format!("`{key}` in [{what}]: not a number: {v:?}"))),
    }
}

/// A fully parsed run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sweep: SweepConfig,
    pub outdir: std::path::PathBuf,
}

/// Parse the config text. Parse errors and validation errors are distinct
/// types so the CLI can exit with distinct codes.
pub fn parse_config(text: &str) -> Result<Result<RunConfig, ValidationError>, ParseError> {
    let sections = parse_sections(text)?;
    let empty = BTreeMap::new();

    // [model]
    let model_sec = sections.get("model").unwrap_or(&empty);
    let model_type = model_sec
        .get("type")
        .ok_or_else(|| ParseError("missing `type` in [model]".to_string()))?
        .as_str();
    let mut dim = 2usize;
    if let Some(d) = model_sec.get("dimension") {
        dim = d
            .parse::<usize>()
            .map_err(|_| ParseError(format!("`dimension`: not an integer: {d:?}")))?;
    }
    let model = match model_type {
        "ppp" => Model::Ppp {
            intensity: get_f64(model_sec, "intensity", "model")?,
        },
        "matern2" => Model::MaternII {
            parent_intensity: get_f64(model_sec, "parent_intensity", "model")?,
            hardcore_radius: get_f64(model_sec, "hardcore_radius", "model")?,
        },
        "thomas" => {
            let mu = get_f64(model_sec, "mu", "model")?;
            let c = get_f64(model_sec, "c", "model")?;
            let sigma = get_f64(model_sec, "sigma", "model")?;
            match ClusterSpec::new(mu, c, sigma) {
                Ok(spec) => Model::Thomas { spec },
                Err(e) => return Ok(Err(ValidationError(e.to_string()))),
            }
        }
        "lattice" => Model::Lattice {
            spacing: get_f64(model_sec, "spacing", "model")?,
            rotated: false,
        },
        other => return Err(ParseError(format!("unknown model type {other:?}"))),
    };

    // [mac]
    let mac_sec = sections.get("mac").unwrap_or(&empty);
    let mac_type = mac_sec
        .get("type")
        .ok_or_else(|| ParseError("missing `type` in [mac]".to_string()))?
        .as_str();
    let mac = match mac_type {
        "aloha" => MacFamily::Aloha,
        "csma" => MacFamily::Csma,
        "tdma" => MacFamily::Tdma,
        "cluster" => MacFamily::Cluster {
            b: get_f64(mac_sec, "b", "mac")?,
        },
        "unreasonable_tdma" => MacFamily::UnreasonableTdma,
        other => return Err(ParseError(format!("unknown mac type {other:?}"))),
    };

    // [channel]
    let ch = sections.get("channel").unwrap_or(&empty);
    let alpha = get_f64(ch, "alpha", "channel")?;
    let theta = get_f64(ch, "theta", "channel")?;
    let pathloss = match ch.get("pathloss").map(String::as_str).unwrap_or("singular") {
        "singular" => PathLossModel::Singular { alpha },
        "bounded_sum" => PathLossModel::BoundedSum { alpha },
        "bounded_min" => PathLossModel::BoundedMin { alpha },
        other => return Err(ParseError(format!("unknown pathloss {other:?}"))),
    };
    let mut link = match LinkSpec::new(theta) {
        Ok(l) => l,
        Err(e) => return Ok(Err(ValidationError(e.to_string()))),
    };
    if let Some(r) = opt_f64(ch, "link_distance", "channel")? {
        link = match link.with_distance(r) {
            Ok(l) => l,
            Err(e) => return Ok(Err(ValidationError(e.to_string()))),
        };
    }
    match ch.get("orientation").map(String::as_str) {
        None | Some("receiver") => {}
        Some("swapped") | Some("transmitter") => link = link.swapped(),
        Some(other) => return Err(ParseError(format!("unknown orientation {other:?}"))),
    }
    let noise_w = opt_f64(ch, "noise_w", "channel")?;
    let noise_p = opt_f64(ch, "noise_p", "channel")?;
    match (noise_w, noise_p) {
        (None, None) => {}
        (Some(w), Some(p)) => {
            link = match link.with_noise(w, p) {
                Ok(l) => l,
                Err(e) => return Ok(Err(ValidationError(e.to_string()))),
            };
        }
        _ => {
            return Ok(Err(ValidationError(
                "noise needs both noise_w and noise_p".to_string(),
            )))
        }
    }

    // [sweep]
    let sw = sections.get("sweep").unwrap_or(&empty);
    let eta_grid: Vec<f64> = if let Some(list) = sw.get("etas") {
        let mut v = Vec::new();
        for part in list.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            v.push(
                part.parse::<f64>()
                    .map_err(|_| ParseError(format!("`etas`: not a number: {part:?}")))?,
            );
        }
        v
    } else {
        let hi = get_f64(sw, "eta_hi", "sweep")?;
        let lo = get_f64(sw, "eta_lo", "sweep")?;
        let n = sw
            .get("points")
            .map(|s| s.parse::<usize>())
            .transpose()
            .map_err(|_| ParseError("`points`: not an integer".to_string()))?
            .unwrap_or(8);
        if !(lo > 0.0 && hi > lo) || n < 2 {
            return Ok(Err(ValidationError(
                "need 0 < eta_lo < eta_hi and points >= 2".to_string(),
            )));
        }
        let ratio = (hi / lo).powf(1.0 / (n as f64 - 1.0));
        (0..n).map(|i| hi / ratio.powi(i as i32)).collect()
    };
    let reps = sw
        .get("reps")
        .map(|s| s.parse::<u64>())
        .transpose()
        .map_err(|_| ParseError("`reps`: not an integer".to_string()))?
        .unwrap_or(spatcon_core::harness::DEFAULT_REPS);
    let seed = sw
        .get("seed")
        .map(|s| s.parse::<u64>())
        .transpose()
        .map_err(|_| ParseError("`seed`: not an integer".to_string()))?
        .unwrap_or(1);
    let mode = match sw.get("estimator").map(String::as_str) {
        None | Some("conditional") => EstimatorMode::Conditional,
        Some("raw") => EstimatorMode::Raw,
        Some(other) => return Err(ParseError(format!("unknown estimator {other:?}"))),
    };
    let palm = match sw.get("palm").map(String::as_str) {
        None | Some("auto") => None,
        Some("all_points") => Some(PalmPolicy::AllPoints),
        Some("nearest_center") => Some(PalmPolicy::NearestCenter),
        Some("random_point") => Some(PalmPolicy::RandomPoint),
        Some("fixed_center") => Some(PalmPolicy::FixedCenter),
        Some(other) => return Err(ParseError(format!("unknown palm policy {other:?}"))),
    };

    // [output]
    let outdir = sections
        .get("output")
        .and_then(|s| s.get("dir"))
        .map(|s| s.to_string())
        .unwrap_or_else(|| "out".to_string());

    // cross-field validation
    if let Err(e) = validate(&model, &mac, &pathloss, &link, &eta_grid, dim) {
        return Ok(Err(e));
    }

    let mut cfg = SweepConfig::new(model, mac, pathloss, link);
    cfg.eta_grid = eta_grid;
    cfg.n_reps = reps;
    cfg.seed = seed;
    cfg.mode = mode;
    cfg.palm = palm;
    cfg.dim = dim;
    Ok(Ok(RunConfig {
        sweep: cfg,
        outdir: outdir.into(),
    }))
}

fn validate(
    model: &Model,
    mac: &MacFamily,
    pathloss: &PathLossModel,
    link: &LinkSpec,
    eta_grid: &[f64],
    dim: usize,
) -> Result<(), ValidationError> {
    if !(1..=3).contains(&dim) {
        return Err(ValidationError(format!("dimension must be 1..=3, got {dim}")));
    }
    if pathloss.validate(dim).is_err() {
        return Err(ValidationError(format!(
            "path loss exponent {} must exceed the dimension {dim}",
            pathloss.alpha()
        )));
    }
    if eta_grid.is_empty() {
        return Err(ValidationError("empty eta grid".to_string()));
    }
    for &e in eta_grid {
        if !(e > 0.0 && e <= 1.0) {
            return Err(ValidationError(format!("eta {e} outside (0, 1]")));
        }
    }
    match (mac, model) {
        (MacFamily::Cluster { .. }, Model::Thomas { .. }) => {}
        (MacFamily::Cluster { .. }, _) => {
            return Err(ValidationError(
                "cluster MAC requires the thomas model".to_string(),
            ))
        }
        (MacFamily::Tdma, Model::Lattice { .. }) => {}
        (MacFamily::Tdma, _) => {
            return Err(ValidationError("tdma requires the lattice model".to_string()))
        }
        (MacFamily::UnreasonableTdma, Model::Lattice { .. }) => {}
        (MacFamily::UnreasonableTdma, _) => {
            return Err(ValidationError(
                "unreasonable_tdma requires the lattice model".to_string(),
            ))
        }
        (MacFamily::Csma, Model::Ppp { .. }) => {}
        (MacFamily::Csma, _) => {
            return Err(ValidationError("csma requires the ppp model".to_string()))
        }
        _ => {}
    }
    if let MacFamily::Cluster { b } = mac {
        if !(0.0..=1.0).contains(b) {
            return Err(ValidationError(format!("cluster b must be in [0,1], got {b}")));
        }
    }
    if link.theta <= 0.0 {
        return Err(ValidationError("theta must be > 0".to_string()));
    }
    if dim != 2 && !matches!(model, Model::Lattice { .. } | Model::Ppp { .. }) {
        return Err(ValidationError(
            "only lattice and ppp models support dimension != 2".to_string(),
        ));
    }
    Ok(())
}
