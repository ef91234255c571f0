//! Genus-0 complex Gromov–Witten invariants `N_B` with point insertions.
//!
//! P² values come from Kontsevich's recursion. Blowup values are ingested from
//! a table file (one `coeffs… : value` line per class) on top of a handful of
//! built-in seeds; they are not reconstructed here.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{CurveClass, SurfaceModel};
use crate::relations::binom;

/// Memo table for [`kontsevich_p2`], indexed by degree.
#[derive(Debug, Default)]
pub struct KontsevichCache {
    values: Mutex<Vec<BigInt>>,
}

impl KontsevichCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.lock().unwrap().len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Number of rational plane curves of degree `d` through `3d - 1` points.
pub fn kontsevich_p2(d: i64, cache: &KontsevichCache) -> Result<BigInt> {
    if d < 1 {
        return Err(Error::InvalidDegree(d));
    }
    let d = d as usize;
    let mut values = cache.values.lock().unwrap();
    if values.is_empty() {
        values.push(BigInt::zero());
        values.push(BigInt::one());
    }
    while values.len() <= d {
        let n = values.len() as i64;
        let mut total = BigInt::zero();
        for a in 1..n {
            let b = n - a;
            let (ba, bb) = (BigInt::from(a), BigInt::from(b));
            let weight = &ba * &ba * &bb * &bb * binom(3 * n - 4, 3 * a - 2)
                - &ba * &ba * &ba * &bb * binom(3 * n - 4, 3 * a - 1);
            total += &values[a as usize] * &values[b as usize] * weight;
        }
        values.push(total);
    }
    Ok(values[d].clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    /// Kontsevich's recursion; only classes `d·L` are served.
    KontsevichP2,
    /// Explicit table plus built-in blowup seeds.
    Table,
    /// Table first, falling back to Kontsevich for classes `d·L`.
    Composite,
}

#[derive(Debug)]
pub struct ComplexProvider {
    kind: ProviderKind,
    table: BTreeMap<CurveClass, BigInt>,
    table_source: Option<PathBuf>,
    kontsevich: KontsevichCache,
    cache: Mutex<HashMap<CurveClass, BigInt>>,
}

/// Built-in blowup values: `E_i`, `L - E_i` and `L - E_i - E_j` all count 1.
pub fn blowup_seeds(model: &SurfaceModel) -> BTreeMap<CurveClass, BigInt> {
    let n = model.rank();
    let mut seeds = BTreeMap::new();
    for i in 1..n {
        seeds.insert(CurveClass::exceptional(n, i), BigInt::one());
        let line = &CurveClass::line_multiple(n, 1) - &CurveClass::exceptional(n, i);
        for j in i + 1..n {
            seeds.insert(&line - &CurveClass::exceptional(n, j), BigInt::one());
        }
        seeds.insert(line, BigInt::one());
    }
    seeds
}

impl ComplexProvider {
    pub fn kontsevich() -> Self {
        Self::with_table(ProviderKind::KontsevichP2, BTreeMap::new(), None)
    }

    /// Table provider holding only the built-in seeds.
    pub fn seeds_only(model: &SurfaceModel) -> Self {
        Self::with_table(ProviderKind::Table, blowup_seeds(model), None)
    }

    /// Table provider from explicit entries merged with the built-in seeds.
    pub fn from_entries(model: &SurfaceModel, entries: BTreeMap<CurveClass, BigInt>) -> Result<Self> {
        let table = merge_with_seeds(model, entries)?;
        Ok(Self::with_table(ProviderKind::Table, table, None))
    }

    /// Promotes a table provider so that classes `d·L` missing from the table
    /// fall back to Kontsevich's recursion.
    pub fn into_composite(mut self) -> Self {
        self.kind = ProviderKind::Composite;
        self
    }

    /// Default provider for a model: Kontsevich for P², seeds for blowups.
    pub fn default_for(model: &SurfaceModel) -> Self {
        if model.rank() == 1 {
            Self::kontsevich()
        } else {
            Self::seeds_only(model)
        }
    }

    fn with_table(kind: ProviderKind, table: BTreeMap<CurveClass, BigInt>, table_source: Option<PathBuf>) -> Self {
        ComplexProvider {
            kind,
            table,
            table_source,
            kontsevich: KontsevichCache::new(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn kind(&self) -> ProviderKind {
        self.kind
    }

    pub fn table_source(&self) -> Option<&Path> {
        self.table_source.as_deref()
    }

    pub fn table_entries(&self) -> &BTreeMap<CurveClass, BigInt> {
        &self.table
    }

    /// Seeds the memo with previously computed values. Conflicts with values
    /// already known to the provider are rejected.
    pub fn preload(&self, model: &SurfaceModel, entries: BTreeMap<CurveClass, BigInt>) -> Result<()> {
        let mut cache = self.cache.lock().unwrap();
        for (class, value) in entries {
            model.check_class(&class)?;
            let existing = cache.get(&class).or_else(|| self.table.get(&class)).cloned();
            if let Some(prev) = existing {
                if prev != value {
                    return Err(Error::ConflictingEntry {
                        key: class.to_string(),
                        first: prev.to_string(),
                        second: value.to_string(),
                    });
                }
            }
            cache.insert(class, value);
        }
        Ok(())
    }

    /// `N_B`; zero when `ℓ(B) < 0` or `B` is outside the admissible cone.
    pub fn complex_invariant(&self, model: &SurfaceModel, b: &CurveClass) -> Result<BigInt> {
        model.check_class(b)?;
        if model.ell_omega(b)? < 0 || !model.is_admissible(b) {
            return Ok(BigInt::zero());
        }
        if let Some(v) = self.cache.lock().unwrap().get(b) {
            return Ok(v.clone());
        }
        let value = self.lookup(b)?;
        self.cache.lock().unwrap().insert(b.clone(), value.clone());
        Ok(value)
    }

    fn lookup(&self, b: &CurveClass) -> Result<BigInt> {
        let pure_degree = b.coeffs()[1..].iter().all(|&c| c == 0);
        match self.kind {
            ProviderKind::Table => self
                .table
                .get(b)
                .cloned()
                .ok_or_else(|| Error::MissingComplexValue(b.clone())),
            ProviderKind::KontsevichP2 if pure_degree => kontsevich_p2(b.degree(), &self.kontsevich),
            ProviderKind::KontsevichP2 => Err(Error::MissingComplexValue(b.clone())),
            ProviderKind::Composite => match self.table.get(b) {
                Some(v) => Ok(v.clone()),
                None if pure_degree => kontsevich_p2(b.degree(), &self.kontsevich),
                None => Err(Error::MissingComplexValue(b.clone())),
            },
        }
    }

    /// Every value the provider has served or holds, in table-file format.
    pub fn dump(&self) -> String {
        let mut all: BTreeMap<CurveClass, BigInt> = self.table.clone();
        all.extend(self.cache.lock().unwrap().iter().map(|(k, v)| (k.clone(), v.clone())));
        format_complex_table(&all)
    }
}

fn merge_with_seeds(
    model: &SurfaceModel,
    entries: BTreeMap<CurveClass, BigInt>,
) -> Result<BTreeMap<CurveClass, BigInt>> {
    let mut table = blowup_seeds(model);
    for (class, value) in entries {
        if let Some(seed) = table.get(&class) {
            if *seed != value {
                return Err(Error::ConflictingEntry {
                    key: class.to_string(),
                    first: seed.to_string(),
                    second: value.to_string(),
                });
            }
        }
        table.insert(class, value);
    }
    Ok(table)
}

/// Parses the `coeffs… : value` line format. `#` starts a comment.
pub fn parse_complex_table(
    text: &str,
    source_name: &str,
    model: &SurfaceModel,
) -> Result<BTreeMap<CurveClass, BigInt>> {
    let mut out: BTreeMap<CurveClass, BigInt> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(source_name, line_no, "expected `coeffs… : value`"))?;
        let coeffs = lhs
            .split_whitespace()
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|_| Error::parse(source_name, line_no, format!("bad integer `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coeffs.len() != model.rank() {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected {} coefficients, found {}", model.rank(), coeffs.len()),
            ));
        }
        let rhs = rhs.trim();
        let value: BigInt = rhs
            .parse()
            .map_err(|_| Error::parse(source_name, line_no, format!("bad value `{rhs}`")))?;
        let class = CurveClass::new(coeffs);
        if let Some(prev) = out.get(&class) {
            if *prev != value {
                return Err(Error::ConflictingEntry {
                    key: class.to_string(),
                    first: prev.to_string(),
                    second: value.to_string(),
                });
            }
        }
        out.insert(class, value);
    }
    Ok(out)
}

pub fn format_complex_table(entries: &BTreeMap<CurveClass, BigInt>) -> String {
    let mut s = String::new();
    for (class, value) in entries {
        let coeffs: Vec<String> = class.coeffs().iter().map(i64::to_string).collect();
        writeln!(s, "{} : {}", coeffs.join(" "), value).unwrap();
    }
    s
}

/// Reads a table file into a [`ProviderKind::Table`] provider.
pub fn load_complex_table(path: &Path, model: &SurfaceModel) -> Result<ComplexProvider> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries = parse_complex_table(&text, &path.display().to_string(), model)?;
    let table = merge_with_seeds(model, entries)?;
    Ok(ComplexProvider::with_table(
        ProviderKind::Table,
        table,
        Some(path.to_path_buf()),
    ))
}
