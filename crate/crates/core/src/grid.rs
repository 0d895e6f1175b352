//! Correlator grids and their file formats.
//!
//! A grid stores `⟨G_i ⊗ G_j⟩` for the measured generator pairs only; every
//! other entry is unmeasured rather than zero. Indices are 0-based
//! internally. On disk, qubit entries use Pauli labels (`"XZ"`) and qudit
//! entries use 1-based generator indices (`"3,7"` in JSON and CSV, `3:7` in
//! measurement-set strings).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::Pauli;
use crate::smallmat::RealMatrix;

/// Largest accepted qubit `|value|`; estimates may overshoot the physical bound.
pub const VALUE_LIMIT: f64 = 1.05;

/// Accepted `|value|` for a grid of the given dimensions: `VALUE_LIMIT`
/// times the largest generator eigenvalue product, `√((d_A−1)(d_B−1))`.
pub fn value_limit(dims: (usize, usize)) -> f64 {
    VALUE_LIMIT * (((dims.0 - 1) * (dims.1 - 1)) as f64).sqrt()
}

/// A generator index pair `(i, j)` for `G_i^A ⊗ G_j^B`, 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub row: usize,
    pub col: usize,
}

impl Pair {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn from_paulis(a: Pauli, b: Pauli) -> Self {
        Self::new(a.index(), b.index())
    }

    pub fn paulis(self) -> Option<(Pauli, Pauli)> {
        Some((Pauli::from_index(self.row)?, Pauli::from_index(self.col)?))
    }

    /// `"XY"` for qubit grids, `"i,j"` (1-based) otherwise.
    pub fn label(self, dims: (usize, usize)) -> String {
        match (dims, self.paulis()) {
            ((2, 2), Some((a, b))) => format!("{a}{b}"),
            _ => format!("{},{}", self.row + 1, self.col + 1),
        }
    }

    /// Accepts `"XY"` for qubit grids and `"i,j"` or `"i:j"` (1-based) for any
    /// dimensions.
    pub fn parse(s: &str, dims: (usize, usize)) -> Result<Self> {
        let s = s.trim();
        let pair = if let Some((a, b)) = s.split_once([',', ':']) {
            let idx = |t: &str| -> Result<usize> {
                let v: usize = t
                    .trim()
                    .parse()
                    .map_err(|_| Error::UnknownLabel(s.to_string()))?;
                v.checked_sub(1).ok_or_else(|| Error::UnknownLabel(s.to_string()))
            };
            Pair::new(idx(a)?, idx(b)?)
        } else {
            let mut chars = s.chars();
            match (chars.next(), chars.next(), chars.next()) {
                (Some(a), Some(b), None) if dims == (2, 2) => {
                    match (Pauli::from_char(a), Pauli::from_char(b)) {
                        (Some(a), Some(b)) => Pair::from_paulis(a, b),
                        _ => return Err(Error::UnknownLabel(s.to_string())),
                    }
                }
                _ => return Err(Error::UnknownLabel(s.to_string())),
            }
        };
        let (na, nb) = basis_size(dims);
        if pair.row >= na || pair.col >= nb {
            return Err(Error::UnknownLabel(s.to_string()));
        }
        Ok(pair)
    }
}

/// Number of traceless generators per party, `(d_A² − 1, d_B² − 1)`.
pub fn basis_size(dims: (usize, usize)) -> (usize, usize) {
    (dims.0 * dims.0 - 1, dims.1 * dims.1 - 1)
}

/// Ordered list of distinct measured pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementSet {
    pairs: Vec<Pair>,
}

impl MeasurementSet {
    pub fn new(pairs: Vec<Pair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::NoMeasuredEntries);
        }
        for (k, p) in pairs.iter().enumerate() {
            if pairs[..k].contains(p) {
                return Err(Error::DuplicateKey(format!("({}, {})", p.row, p.col)));
            }
        }
        Ok(Self { pairs })
    }

    pub fn from_paulis(pairs: &[(Pauli, Pauli)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(a, b)| Pair::from_paulis(a, b)).collect())
    }

    /// Every generator pair for the given dimensions, in `(row, col)` order.
    pub fn full(dims: (usize, usize)) -> Self {
        let (na, nb) = basis_size(dims);
        Self {
            pairs: (0..na)
                .flat_map(|i| (0..nb).map(move |j| Pair::new(i, j)))
                .collect(),
        }
    }

    /// Comma-separated labels, e.g. `"XX,ZZ"` or `"1:1,2:5"`.
    pub fn parse(s: &str, dims: (usize, usize)) -> Result<Self> {
        let pairs = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| Pair::parse(p, dims))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, p: Pair) -> bool {
        self.pairs.contains(&p)
    }

    pub fn is_subset_of(&self, other: &MeasurementSet) -> bool {
        self.pairs.iter().all(|p| other.contains(*p))
    }

    /// The same pairs in `(row, col)` order.
    pub fn sorted(&self) -> MeasurementSet {
        let mut pairs = self.pairs.clone();
        pairs.sort();
        Self { pairs }
    }

    pub fn labels(&self, dims: (usize, usize)) -> Vec<String> {
        self.pairs.iter().map(|p| p.label(dims)).collect()
    }

    /// Labels joined with commas, using `i:j` for qudit pairs.
    pub fn display(&self, dims: (usize, usize)) -> String {
        self.labels(dims)
            .into_iter()
            .map(|l| l.replace(',', ":"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Measured correlators keyed by generator pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorGrid {
    dims: (usize, usize),
    values: BTreeMap<Pair, f64>,
}

impl CorrelatorGrid {
    /// Validates dimensions, index ranges, finiteness, the value limit and
    /// key uniqueness.
    pub fn new(dims: (usize, usize), entries: impl IntoIterator<Item = (Pair, f64)>) -> Result<Self> {
        if dims.0 < 2 || dims.1 < 2 {
            return Err(Error::Input(format!(
                "dimensions must be at least 2, got {:?}",
                dims
            )));
        }
        let (na, nb) = basis_size(dims);
        let limit = value_limit(dims);
        let mut values = BTreeMap::new();
        for (p, v) in entries {
            let label = p.label(dims);
            if p.row >= na || p.col >= nb {
                return Err(Error::UnknownLabel(label));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { row: p.row, col: p.col });
            }
            if v.abs() > limit {
                return Err(Error::OutOfRange { label, value: v, limit });
            }
            if values.insert(p, v).is_some() {
                return Err(Error::DuplicateKey(label));
            }
        }
        if values.is_empty() {
            return Err(Error::NoMeasuredEntries);
        }
        Ok(Self { dims, values })
    }

    /// Qubit grid from Pauli-labelled values.
    pub fn from_paulis(entries: &[(Pauli, Pauli, f64)]) -> Result<Self> {
        Self::new(
            (2, 2),
            entries.iter().map(|&(a, b, v)| (Pair::from_paulis(a, b), v)),
        )
    }

    /// Qubit grid from label/value pairs such as `("XZ", 0.5)`.
    pub fn from_labels(dims: (usize, usize), entries: &[(&str, f64)]) -> Result<Self> {
        let parsed = entries
            .iter()
            .map(|(l, v)| Ok((Pair::parse(l, dims)?, *v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims, parsed)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn basis_size(&self) -> (usize, usize) {
        basis_size(self.dims)
    }

    pub fn is_qubit(&self) -> bool {
        self.dims == (2, 2)
    }

    pub fn get(&self, p: Pair) -> Option<f64> {
        self.values.get(&p).copied()
    }

    /// `value(p)` or a `MissingCorrelator` error naming the pair.
    pub fn require(&self, p: Pair) -> Result<f64> {
        self.get(p)
            .ok_or_else(|| Error::MissingCorrelator(p.label(self.dims)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Measured entries in `(row, col)` order.
    pub fn entries(&self) -> impl Iterator<Item = (Pair, f64)> + '_ {
        self.values.iter().map(|(p, v)| (*p, *v))
    }

    pub fn support(&self) -> MeasurementSet {
        MeasurementSet {
            pairs: self.values.keys().copied().collect(),
        }
    }

    pub fn label(&self, p: Pair) -> String {
        p.label(self.dims)
    }

    /// Grid containing exactly the pairs of `set`.
    pub fn restrict(&self, set: &MeasurementSet) -> Result<CorrelatorGrid> {
        let entries = set
            .pairs()
            .iter()
            .map(|&p| Ok((p, self.require(p)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dims, entries)
    }

    /// Dense `(d_A² − 1) × (d_B² − 1)` matrix with zeros off the support.
    pub fn dense(&self) -> RealMatrix {
        let (na, nb) = self.basis_size();
        let mut m = RealMatrix::zeros(na, nb);
        for (p, v) in self.entries() {
            m[(p.row, p.col)] = v;
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridFormat {
    Json,
    Csv,
}

impl FromStr for GridFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Input(format!("unknown format {other:?}"))),
        }
    }
}

impl fmt::Display for GridFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Csv => "csv",
        })
    }
}

/// Correlator map that keeps every key, so duplicates can be reported
/// instead of silently overwritten.
struct RawEntries(Vec<(String, f64)>);

impl<'de> Deserialize<'de> for RawEntries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = RawEntries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from correlator labels to numbers")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<RawEntries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, f64>()? {
                    out.push((k, v));
                }
                Ok(RawEntries(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGrid {
    dims: [usize; 2],
    correlators: RawEntries,
}

pub fn parse_grid(text: &[u8], format: GridFormat) -> Result<CorrelatorGrid> {
    let text = std::str::from_utf8(text).map_err(|e| Error::Malformed {
        format: format_name(format),
        reason: e.to_string(),
    })?;
    match format {
        GridFormat::Json => parse_json(text),
        GridFormat::Csv => parse_csv(text),
    }
}

fn format_name(f: GridFormat) -> &'static str {
    match f {
        GridFormat::Json => "json",
        GridFormat::Csv => "csv",
    }
}

fn parse_json(text: &str) -> Result<CorrelatorGrid> {
    let doc: JsonGrid = serde_json::from_str(text).map_err(|e| Error::Malformed {
        format: "json",
        reason: e.to_string(),
    })?;
    let dims = (doc.dims[0], doc.dims[1]);
    if dims.0 < 2 || dims.1 < 2 {
        return Err(Error::Malformed {
            format: "json",
            reason: format!("dims must be at least 2, got {:?}", doc.dims),
        });
    }
    let entries = doc
        .correlators
        .0
        .iter()
        .map(|(k, v)| Ok((Pair::parse(k, dims)?, *v)))
        .collect::<Result<Vec<_>>>()?;
    CorrelatorGrid::new(dims, entries)
}

const CSV_DIMS_PREFIX: &str = "# dims:";

/// CSV with header `a,b,value`. Qubit rows use Pauli letters, qudit rows use
/// 1-based generator indices. A leading `# dims: dA,dB` line fixes the
/// dimensions; without it they are inferred as the smallest consistent ones.
fn parse_csv(text: &str) -> Result<CorrelatorGrid> {
    let malformed = |reason: String| Error::Malformed { format: "csv", reason };
    let mut body = text;
    let mut declared = None;
    if let Some(rest) = text.strip_prefix(CSV_DIMS_PREFIX) {
        let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
        let (a, b) = line
            .trim()
            .split_once(',')
            .ok_or_else(|| malformed(format!("bad dims line {line:?}")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| malformed(format!("bad dims line {line:?}")))
        };
        declared = Some((parse(a)?, parse(b)?));
        body = tail;
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["a", "b", "value"] {
        return Err(malformed(format!(
            "expected header a,b,value, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    enum Key {
        Pauli(Pauli, Pauli),
        Index(usize, usize),
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        if rec.len() != 3 {
            return Err(malformed(format!("expected 3 fields, got {}", rec.len())));
        }
        let (a, b) = (&rec[0], &rec[1]);
        let value: f64 = rec[2]
            .parse()
            .map_err(|_| malformed(format!("bad value {:?}", &rec[2])))?;
        let pauli = |s: &str| {
            let mut c = s.chars();
            match (c.next(), c.next()) {
                (Some(ch), None) => Pauli::from_char(ch),
                _ => None,
            }
        };
        let key = match (pauli(a), pauli(b)) {
            (Some(pa), Some(pb)) => Key::Pauli(pa, pb),
            _ => {
                let idx = |s: &str| -> Result<usize> {
                    s.parse::<usize>()
                        .ok()
                        .and_then(|v| v.checked_sub(1))
                        .ok_or_else(|| Error::UnknownLabel(format!("{a}{b}")))
                };
                Key::Index(idx(a)?, idx(b)?)
            }
        };
        rows.push((key, value));
    }

    let dims = match declared {
        Some(d) => d,
        None => {
            let mut need = (2usize, 2usize);
            for (k, _) in &rows {
                if let Key::Index(i, j) = k {
                    need.0 = need.0.max(min_dim_for(*i));
                    need.1 = need.1.max(min_dim_for(*j));
                }
            }
            need
        }
    };
    let entries = rows
        .into_iter()
        .map(|(k, v)| match k {
            Key::Pauli(a, b) if dims == (2, 2) => Ok((Pair::from_paulis(a, b), v)),
            Key::Pauli(a, b) => Err(Error::UnknownLabel(format!("{a}{b}"))),
            Key::Index(i, j) => Ok((Pair::new(i, j), v)),
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelatorGrid::new(dims, entries)
}

/// Smallest `d` with `d² − 1 > i`.
fn min_dim_for(i: usize) -> usize {
    let mut d = 2;
    while d * d - 1 <= i {
        d += 1;
    }
    d
}

/// Canonical bytes: entries in `(row, col)` order, values in shortest
/// round-trip form, LF line endings.
pub fn emit_grid(g: &CorrelatorGrid, format: GridFormat) -> String {
    match format {
        GridFormat::Json => {
            let body: Vec<String> = g
                .entries()
                .map(|(p, v)| format!("\"{}\":{}", g.label(p), format_value(v)))
                .collect();
            format!(
                "{{\"dims\":[{},{}],\"correlators\":{{{}}}}}\n",
                g.dims.0,
                g.dims.1,
                body.join(",")
            )
        }
        GridFormat::Csv => {
            let mut out = String::new();
            if !g.is_qubit() {
                out.push_str(&format!("{} {},{}\n", CSV_DIMS_PREFIX, g.dims.0, g.dims.1));
            }
            out.push_str("a,b,value\n");
            for (p, v) in g.entries() {
                let (a, b) = match p.paulis() {
                    Some((a, b)) if g.is_qubit() => (a.to_string(), b.to_string()),
                    _ => ((p.row + 1).to_string(), (p.col + 1).to_string()),
                };
                out.push_str(&format!("{a},{b},{}\n", format_value(v)));
            }
            out
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}
