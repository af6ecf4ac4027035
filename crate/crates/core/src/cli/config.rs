//! Experiment configuration: JSON-compatible, validated into typed specs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Paradox,
    Basis,
    Degiorgi,
    Decay,
    Contraction,
    Gym,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Paradox => "paradox",
            Self::Basis => "basis",
            Self::Degiorgi => "degiorgi",
            Self::Decay => "decay",
            Self::Contraction => "contraction",
            Self::Gym => "gym",
        };
        f.write_str(s)
    }
}

/// Raw configuration as read from flags or a JSON file; every knob optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub curve: Option<String>,
    #[serde(default)]
    pub material: Option<String>,
    #[serde(default)]
    pub data: Option<String>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub grid: Option<String>,
    #[serde(default)]
    pub rmax: Option<f64>,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub check: Option<String>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            curve: None,
            material: None,
            data: None,
            nodes: None,
            grid: None,
            rmax: None,
            xi: None,
            check: None,
            trials: None,
            seed: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid("config", e.to_string()))
    }
}

pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigInvalid {
        field: field.to_string(),
        message: message.into(),
    }
}

fn numbers(field: &str, s: &str, count: Option<usize>) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid(field, format!("`{t}` is not a number")))
        })
        .collect::<Result<_>>()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(field, "values must be finite"));
    }
    if let Some(n) = count {
        if v.len() != n {
            return Err(invalid(
                field,
                format!("expected {n} numbers, got {}", v.len()),
            ));
        }
    }
    Ok(v)
}

fn split_spec<'a>(field: &str, s: &'a str) -> Result<(&'a str, &'a str)> {
    Ok(s.split_once(':').unwrap_or((s, ""))).and_then(|(k, v)| {
        if k.is_empty() {
            Err(invalid(field, format!("empty spec `{s}`")))
        } else {
            Ok((k, v))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum CurveSpec {
    Circle {
        a: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Convex vertices in counter-clockwise order, corner radius.
    Polygon {
        vertices: Vec<[f64; 2]>,
        rho: f64,
    },
}

impl FromStr for CurveSpec {
    type Err = Error;

    /// `circle:a`, `ellipse:a,b`, `polygon:rho;x1,y1;x2,y2;...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = split_spec("curve", s)?;
        let spec = match kind {
            "circle" => Self::Circle {
                a: numbers("curve", rest, Some(1))?[0],
            },
            "ellipse" => {
                let v = numbers("curve", rest, Some(2))?;
                Self::Ellipse { a: v[0], b: v[1] }
            }
            "polygon" => {
                let mut parts = rest.split(';');
                let rho = numbers("curve", parts.next().unwrap_or(""), Some(1))?[0];
                let vertices: Vec<[f64; 2]> = parts
                    .map(|p| numbers("curve", p, Some(2)).map(|v| [v[0], v[1]]))
                    .collect::<Result<_>>()?;
                if vertices.len() < 3 {
                    return Err(invalid("curve", "polygon needs at least 3 vertices"));
                }
                Self::Polygon { vertices, rho }
            }
            other => {
                return Err(invalid(
                    "curve",
                    format!("unknown curve `{other}` (circle, ellipse, polygon)"),
                ))
            }
        };
        match &spec {
            Self::Circle { a } if *a <= 0.0 => Err(invalid("curve", "radius must be positive")),
            Self::Ellipse { a, b } if *a <= 0.0 || *b <= 0.0 => {
                Err(invalid("curve", "semi-axes must be positive"))
            }
            Self::Polygon { rho, .. } if *rho <= 0.0 => {
                Err(invalid("curve", "corner radius must be positive"))
            }
            _ => Ok(spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum MaterialSpec {
    Isotropic {
        lambda: f64,
        mu: f64,
    },
    DeGiorgi {
        xi: f64,
    },
    /// Upper triangle of the Voigt matrix, row major.
    Voigt {
        upper: [f64; 6],
    },
    /// Smooth random scalar modulus in `[mu0, mue]`; needs a seed.
    Random {
        mu0: f64,
        mue: f64,
    },
}

impl FromStr for MaterialSpec {
    type Err = Error;

    /// `iso:λ,μ`, `degiorgi:ξ`, `voigt:a11,a12,a13,a22,a23,a33`, `random:μ0,μe`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = split_spec("material", s)?;
        match kind {
            "iso" => {
                let v = numbers("material", rest, Some(2))?;
                Ok(Self::Isotropic {
                    lambda: v[0],
                    mu: v[1],
                })
            }
            "degiorgi" => {
                let xi = numbers("material", rest, Some(1))?[0];
                if xi == 0.0 {
                    return Err(invalid(
                        "material",
                        "the counter-example tensor requires ξ ≠ 0",
                    ));
                }
                Ok(Self::DeGiorgi { xi })
            }
            "voigt" => {
                let v = numbers("material", rest, Some(6))?;
                Ok(Self::Voigt {
                    upper: [v[0], v[1], v[2], v[3], v[4], v[5]],
                })
            }
            "random" => {
                let v = numbers("material", rest, Some(2))?;
                if !(v[0] > 0.0 && v[1] >= v[0]) {
                    return Err(invalid("material", "random field needs 0 < μ0 ≤ μe"));
                }
                Ok(Self::Random {
                    mu0: v[0],
                    mue: v[1],
                })
            }
            other => Err(invalid(
                "material",
                format!("unknown material `{other}` (iso, degiorgi, voigt, random)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum DataSpec {
    Constant {
        value: [f64; 2],
    },
    /// Infinitesimal rotation `x ↦ x^⊥`.
    Rotation,
    /// One `u1,u2` line per boundary node.
    File {
        path: PathBuf,
    },
}

impl FromStr for DataSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = split_spec("data", s)?;
        match kind {
            "const" => {
                let v = numbers("data", rest, Some(2))?;
                Ok(Self::Constant {
                    value: [v[0], v[1]],
                })
            }
            "rot" => Ok(Self::Rotation),
            "file" if !rest.is_empty() => Ok(Self::File {
                path: PathBuf::from(rest),
            }),
            other => Err(invalid(
                "data",
                format!("unknown data `{other}` (const:c1,c2, rot, file:path)"),
            )),
        }
    }
}

impl DataSpec {
    pub fn values(&self, points: &[Vec2]) -> Result<Vec<Vec2>> {
        match self {
            Self::Constant { value } => Ok(vec![Vec2::new(value[0], value[1]); points.len()]),
            Self::Rotation => Ok(points.iter().map(|x| x.perp()).collect()),
            Self::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| invalid("data", format!("cannot read {}: {e}", path.display())))?;
                let rows: Vec<Vec2> = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(|l| numbers("data", l, Some(2)).map(|v| Vec2::new(v[0], v[1])))
                    .collect::<Result<_>>()?;
                if rows.len() != points.len() {
                    return Err(invalid(
                        "data",
                        format!(
                            "file has {} rows, the curve has {} nodes",
                            rows.len(),
                            points.len()
                        ),
                    ));
                }
                Ok(rows)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GymCheck {
    Wirtinger,
    Hardy,
    Korn,
    All,
}

impl FromStr for GymCheck {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wirtinger" => Ok(Self::Wirtinger),
            "hardy" => Ok(Self::Hardy),
            "korn" => Ok(Self::Korn),
            "all" => Ok(Self::All),
            other => Err(invalid(
                "check",
                format!("unknown check `{other}` (wirtinger, hardy, korn, all)"),
            )),
        }
    }
}

/// Configuration after validation and defaulting.
#[derive(Debug, Clone, Serialize)]
pub struct ValidatedConfig {
    pub kind: ExperimentKind,
    pub curve: CurveSpec,
    pub material: MaterialSpec,
    pub data: DataSpec,
    pub nodes: usize,
    pub grid: (usize, usize),
    pub rmax: f64,
    pub check: GymCheck,
    pub trials: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub config: ValidatedConfig,
    pub notes: Vec<String>,
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| invalid("grid", format!("expected NRxNT, got `{s}`")))?;
    let n_r = a
        .trim()
        .parse()
        .map_err(|_| invalid("grid", format!("bad radial count `{a}`")))?;
    let n_t = b
        .trim()
        .parse()
        .map_err(|_| invalid("grid", format!("bad angular count `{b}`")))?;
    Ok((n_r, n_t))
}

/// Pure validation with defaults filled in per experiment.
pub fn validate(cfg: &ExperimentConfig) -> Result<Diagnostics> {
    use ExperimentKind::*;
    let mut notes = Vec::new();
    let kind = cfg.kind;

    let mut curve: CurveSpec = cfg.curve.as_deref().unwrap_or("circle:1").parse()?;
    if let CurveSpec::Ellipse { a, b } = curve {
        if b > a {
            notes.push(format!(
                "ellipse:{a},{b} normalized to ellipse:{b},{a} (a ≥ b)"
            ));
            curve = CurveSpec::Ellipse { a: b, b: a };
        }
    }
    if matches!(kind, Degiorgi | Decay | Contraction | Gym) && cfg.curve.is_some() {
        notes.push(format!(
            "curve is ignored by the {kind} experiment (annulus 1 < r < R_max)"
        ));
    }

    let default_material = match kind {
        Degiorgi | Decay => "degiorgi:2",
        Contraction => "degiorgi:6",
        _ => "iso:1,1",
    };
    let mut material: MaterialSpec = cfg
        .material
        .as_deref()
        .unwrap_or(default_material)
        .parse()?;
    if let Some(xi) = cfg.xi {
        if xi == 0.0 || !xi.is_finite() {
            return Err(invalid("xi", "the counter-example tensor requires ξ ≠ 0"));
        }
        match material {
            MaterialSpec::DeGiorgi { .. } => material = MaterialSpec::DeGiorgi { xi },
            _ if cfg.material.is_none() => material = MaterialSpec::DeGiorgi { xi },
            _ => return Err(invalid("xi", "--xi conflicts with a non-degiorgi material")),
        }
    }
    match (kind, &material) {
        (Paradox | Basis, MaterialSpec::DeGiorgi { .. } | MaterialSpec::Random { .. }) => {
            return Err(invalid(
                "material",
                "boundary experiments need a constant tensor (iso or voigt)",
            ));
        }
        (Degiorgi | Decay, m) if !matches!(m, MaterialSpec::DeGiorgi { .. }) => {
            return Err(invalid(
                "material",
                format!("the {kind} experiment uses the degiorgi:ξ tensor"),
            ));
        }
        (Contraction, MaterialSpec::Voigt { .. }) => {
            return Err(invalid(
                "material",
                "contraction takes iso, degiorgi or random materials",
            ));
        }
        _ => {}
    }

    let data: DataSpec = cfg.data.as_deref().unwrap_or("const:1,0").parse()?;

    let nodes = cfg.nodes.unwrap_or(256);
    if !(16..=4096).contains(&nodes) || nodes % 2 == 1 {
        return Err(invalid(
            "nodes",
            format!("must be even and within [16, 4096], got {nodes}"),
        ));
    }

    let default_grid = match kind {
        Contraction => "64x128",
        _ => "128x256",
    };
    let grid = parse_grid(cfg.grid.as_deref().unwrap_or(default_grid))?;
    if grid.0 < 8 || grid.1 < 16 || grid.1 % 2 == 1 || grid.0 * grid.1 > 1 << 20 {
        return Err(invalid(
            "grid",
            format!(
                "{}x{} outside [8..]x[16..] even, at most 2^20 nodes",
                grid.0, grid.1
            ),
        ));
    }
    let rmax = cfg.rmax.unwrap_or(match kind {
        Contraction => 16.0,
        _ => 64.0,
    });
    if !(rmax > 2.0) || !rmax.is_finite() {
        return Err(invalid("rmax", format!("must exceed 2, got {rmax}")));
    }
    if rmax.powf(1.0 / (grid.0 - 1) as f64) > 1.2 {
        return Err(invalid(
            "grid",
            format!(
                "{} radial nodes give grading above 1.2 at R_max = {rmax}",
                grid.0
            ),
        ));
    }

    let check: GymCheck = cfg.check.as_deref().unwrap_or("all").parse()?;
    let trials = cfg.trials.unwrap_or(1000);
    if !(1..=100_000).contains(&trials) {
        return Err(invalid(
            "trials",
            format!("must lie in [1, 100000], got {trials}"),
        ));
    }
    let randomized = kind == Gym || matches!(material, MaterialSpec::Random { .. });
    if randomized && cfg.seed.is_none() {
        return Err(invalid(
            "seed",
            format!("the {kind} run is randomized; a seed is mandatory"),
        ));
    }

    Ok(Diagnostics {
        config: ValidatedConfig {
            kind,
            curve,
            material,
            data,
            nodes,
            grid,
            rmax,
            check,
            trials,
            seed: cfg.seed,
        },
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: Error) -> String {
        match e {
            Error::ConfigInvalid { field, .. } => field,
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn spec_strings() {
        assert_eq!(
            "circle:1".parse::<CurveSpec>().unwrap(),
            CurveSpec::Circle { a: 1.0 }
        );
        assert_eq!(
            "ellipse:2,1".parse::<CurveSpec>().unwrap(),
            CurveSpec::Ellipse { a: 2.0, b: 1.0 }
        );
        let p: CurveSpec = "polygon:0.2;-1,-1;1,-1;1,1;-1,1".parse().unwrap();
        assert!(matches!(p, CurveSpec::Polygon { ref vertices, .. } if vertices.len() == 4));
        assert!("circle:-1".parse::<CurveSpec>().is_err());
        assert!("blob:1".parse::<CurveSpec>().is_err());
        assert_eq!(
            "iso:1,2".parse::<MaterialSpec>().unwrap(),
            MaterialSpec::Isotropic {
                lambda: 1.0,
                mu: 2.0
            }
        );
        assert!("degiorgi:0".parse::<MaterialSpec>().is_err());
        assert!("voigt:1,2,3".parse::<MaterialSpec>().is_err());
        assert_eq!("rot".parse::<DataSpec>().unwrap(), DataSpec::Rotation);
        assert!("const:1".parse::<DataSpec>().is_err());
    }

    #[test]
    fn missing_seed_is_rejected() {
        let cfg = ExperimentConfig::new(ExperimentKind::Gym);
        assert_eq!(field_of(validate(&cfg).unwrap_err()), "seed");
        let mut cfg = ExperimentConfig::new(ExperimentKind::Contraction);
        cfg.material = Some("random:1,1.2".into());
        assert_eq!(field_of(validate(&cfg).unwrap_err()), "seed");
        cfg.seed = Some(3);
        assert!(validate(&cfg).is_ok());
    }

    #[test]
    fn ellipse_is_normalized_with_a_note() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Basis);
        cfg.curve = Some("ellipse:1,2".into());
        let d = validate(&cfg).unwrap();
        assert_eq!(d.config.curve, CurveSpec::Ellipse { a: 2.0, b: 1.0 });
        assert_eq!(d.notes.len(), 1);
    }

    #[test]
    fn zero_xi_is_rejected() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Degiorgi);
        cfg.xi = Some(0.0);
        let e = validate(&cfg).unwrap_err();
        assert!(e.to_string().contains("ξ ≠ 0"));
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let cfg = ExperimentConfig::from_json(r#"{"kind": "paradox", "nodes": 128}"#).unwrap();
        assert_eq!(cfg.nodes, Some(128));
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(ExperimentConfig::from_json(r#"{"kind": "paradox", "bogus": 1}"#).is_err());
    }
}
