//! Run configuration and its JSON file form.
//!
//! ```json
//! {"surface": "p2" | {"blowup": r}, "divisor_triples": [[h1, h2], [h1, h2, h3]], "max_degree": 12}
//! ```
//!
//! Each `h` is a divisor in `(L, E_1, ..., E_r)` coordinates. Missing fields
//! fall back to the defaults of the chosen surface.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DivisorClass, DivisorTriple, SurfaceKind, SurfaceModel};
use crate::solver::{Seeds, SolveOptions};

impl FromStr for SurfaceKind {
    type Err = Error;

    /// Parses `p2` or `blowup:R`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("p2") {
            return Ok(SurfaceKind::P2);
        }
        if let Some(r) = s.strip_prefix("blowup:") {
            let r: usize = r
                .trim()
                .parse()
                .map_err(|_| Error::InvalidModel(format!("bad number of points in {s:?}")))?;
            return Ok(SurfaceKind::Blowup(r));
        }
        Err(Error::InvalidModel(format!(
            "unknown surface {s:?}; expected p2 or blowup:R"
        )))
    }
}

impl SurfaceKind {
    pub fn build(self) -> Result<SurfaceModel> {
        match self {
            SurfaceKind::P2 => Ok(SurfaceModel::p2()),
            SurfaceKind::Blowup(r) => SurfaceModel::blowup(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum SurfaceJson {
    Name(String),
    Blowup { blowup: usize },
}

impl SurfaceJson {
    fn kind(&self) -> Result<SurfaceKind> {
        match self {
            SurfaceJson::Name(s) => s.parse(),
            SurfaceJson::Blowup { blowup } => Ok(SurfaceKind::Blowup(*blowup)),
        }
    }
}

/// Triples as nested coordinate lists.
pub type RawTriples = Vec<Vec<Vec<i64>>>;

/// Contents of a configuration file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    surface: Option<SurfaceJson>,
    #[serde(default)]
    pub divisor_triples: Option<RawTriples>,
    #[serde(default)]
    pub max_degree: Option<i64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn surface(&self) -> Result<Option<SurfaceKind>> {
        self.surface.as_ref().map(SurfaceJson::kind).transpose()
    }
}

/// Validates raw triples against a model.
pub fn build_triples(model: &SurfaceModel, raw: &RawTriples) -> Result<Vec<DivisorTriple>> {
    raw.iter()
        .enumerate()
        .map(|(i, t)| match t.as_slice() {
            [h1, h2] => model.validate_triple(DivisorClass::new(h1.clone()), DivisorClass::new(h2.clone()), None),
            [h1, h2, h3] => model.validate_triple(
                DivisorClass::new(h1.clone()),
                DivisorClass::new(h2.clone()),
                Some(DivisorClass::new(h3.clone())),
            ),
            _ => Err(Error::InvalidDivisorTriple(format!(
                "triple {i} has {} divisors, expected 2 or 3",
                t.len()
            ))),
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TriplesJson {
    Bare(RawTriples),
    Wrapped { divisor_triples: RawTriples },
}

/// Reads a triples file: either a bare JSON array of triples or an object with
/// a `divisor_triples` field.
pub fn parse_triples(text: &str) -> Result<RawTriples> {
    Ok(match serde_json::from_str::<TriplesJson>(text)? {
        TriplesJson::Bare(t) | TriplesJson::Wrapped { divisor_triples: t } => t,
    })
}

pub fn load_triples(path: &Path) -> Result<RawTriples> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triples(&text)
}

/// Everything `solve` needs apart from the complex provider.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: SurfaceModel,
    pub degree_bound: i64,
    pub triples: Vec<DivisorTriple>,
    pub seeds: Seeds,
    pub options: SolveOptions,
}

impl RunConfig {
    /// Default triples, seeds and options for `model`.
    pub fn new(model: SurfaceModel, degree_bound: i64) -> Result<Self> {
        if degree_bound < 0 {
            return Err(Error::InvalidDegree(degree_bound));
        }
        let triples = model.default_triples();
        let seeds = Seeds::default_for(&model);
        Ok(RunConfig {
            model,
            degree_bound,
            triples,
            seeds,
            options: SolveOptions::default(),
        })
    }

    pub fn p2(degree_bound: i64) -> Result<Self> {
        Self::new(SurfaceModel::p2(), degree_bound)
    }
}
