//! File formats: TOML model configs, CSV sections and grids, JSON jump
//! descriptors.
//!
//! Model file:
//!
//! ```toml
//! [model]
//! m = 2
//! builtin = "flat_projective"     # or give [[flux.x]], [[flux.t]], [[source]]
//! domain = { lo = [-3.0, -3.0, -3.0], hi = [3.0, 3.0, 3.0] }
//!
//! [[flux.x]]
//! coef = 0.5
//! powers = [0, 0, 2]              # x^0 t^0 y^2
//! ```
//!
//! Section CSV has header `x,t,u` with one row per grid node, time-major.
//! Jump descriptors are JSON `{"jumps": [{"t": [...], "x": [...],
//! "u_left": [...], "u_right": [...]}]}`. Floats are written with 17
//! significant digits.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geomkit::Aabb;
use crate::model::{FluxModel, Grid2, JumpCurve, PiecewiseSection, Poly3, PolynomialFlux, Term};

/// Round-trip float formatting.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DomainSpec {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelHeader {
    #[serde(default = "two")]
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct FluxTables {
    #[serde(default)]
    pub x: Vec<Term>,
    #[serde(default)]
    pub t: Vec<Term>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub model: ModelHeader,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<FluxTables>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub source: Vec<Term>,
}

fn poly(terms: &[Term]) -> Poly3 {
    Poly3::new(terms.iter().map(|t| (t.coef, t.powers)))
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// The description of a polynomial model.
    pub fn from_model(model: &FluxModel) -> Result<Self> {
        let p = model
            .polynomial_form()
            .ok_or_else(|| Error::UnsupportedFlux("only polynomial models can be serialized".into()))?;
        Ok(Self {
            model: ModelHeader {
                m: 2,
                name: Some(model.name.clone()),
                builtin: None,
                domain: Some(DomainSpec {
                    lo: model.domain.lo,
                    hi: model.domain.hi,
                }),
            },
            flux: Some(FluxTables {
                x: p.flux_x.terms.clone(),
                t: p.flux_t.terms.clone(),
            }),
            source: p.source.terms.clone(),
        })
    }

    pub fn build(&self) -> Result<FluxModel> {
        if self.model.m != 2 {
            return Err(Error::UnsupportedDimension(format!(
                "base dimension m = {} (only m = 2 is implemented)",
                self.model.m
            )));
        }
        let domain = match &self.model.domain {
            Some(d) => Some(Aabb::new(d.lo, d.hi)?),
            None => None,
        };
        let model = match (&self.model.builtin, &self.flux) {
            (Some(_), Some(_)) => {
                return Err(Error::Parse("give either a builtin or flux tables, not both".into()))
            }
            (Some(b), None) => builtin(b)?,
            (None, Some(f)) => {
                let dom = domain.ok_or_else(|| Error::Parse("polynomial models need a domain".into()))?;
                let name = self.model.name.clone().unwrap_or_else(|| "polynomial".into());
                let p = PolynomialFlux {
                    flux_x: poly(&f.x),
                    flux_t: poly(&f.t),
                    source: poly(&self.source),
                };
                FluxModel::polynomial(name, dom, p)
            }
            (None, None) => return Err(Error::Parse("model has neither builtin nor flux tables".into())),
        };
        Ok(match domain {
            Some(d) => model.with_domain(d),
            None => model,
        })
    }
}

/// Named builtin models.
pub fn builtin(name: &str) -> Result<FluxModel> {
    match name {
        "flat_projective" | "burgers" => Ok(FluxModel::flat_projective()),
        other => Err(Error::Parse(format!("unknown builtin model '{other}'"))),
    }
}

/// Loads a model from a TOML file, or a builtin given by name.
pub fn load_model(spec: &str) -> Result<FluxModel> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Ok(m) = builtin(spec) {
            return Ok(m);
        }
        return Err(Error::Io(format!("model file '{spec}' not found")));
    }
    ModelFile::parse(&std::fs::read_to_string(path)?)?.build()
}

/// Writes rows of floats under a header, 17 significant digits.
pub fn write_rows<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Input(format!("row has {} fields, header has {}", row.len(), header.len())));
        }
        wr.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a headed CSV of floats; returns the header and rows.
pub fn read_rows<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: '{s}': {e}", k + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_section_csv<W: Write>(section: &PiecewiseSection, w: W) -> Result<()> {
    let g = &section.grid;
    let rows = (0..g.nt).flat_map(|n| (0..g.nx).map(move |i| (i, n)));
    write_rows(w, &["x", "t", "u"], rows.map(|(i, n)| vec![g.x(i), g.t(n), section.value(i, n)]))
}

/// Reads `x,t,u` nodes of a uniform grid listed time-major.
pub fn read_section_csv<R: Read>(r: R, jumps: Vec<JumpCurve>) -> Result<PiecewiseSection> {
    let (header, rows) = read_rows(r)?;
    if header != ["x", "t", "u"] {
        return Err(Error::Parse(format!("expected header x,t,u, got {}", header.join(","))));
    }
    if rows.iter().any(|r| r.len() != 3) {
        return Err(Error::Parse("every row needs x, t and u".into()));
    }
    let first_t = rows.first().ok_or_else(|| Error::Parse("empty section".into()))?[1];
    let nx = rows.iter().take_while(|r| r[1] == first_t).count();
    if nx < 2 || rows.len() % nx != 0 || rows.len() / nx < 2 {
        return Err(Error::Parse("section nodes do not form a grid of at least 2×2".into()));
    }
    let nt = rows.len() / nx;
    let (x0, t0) = (rows[0][0], first_t);
    let dx = (rows[nx - 1][0] - x0) / (nx - 1) as f64;
    let dt = (rows[(nt - 1) * nx][1] - t0) / (nt - 1) as f64;
    let grid = Grid2::new(x0, dx, nx, t0, dt, nt)?;
    for (k, r) in rows.iter().enumerate() {
        let (i, n) = (k % nx, k / nx);
        let tol = 1e-9 * (1.0 + r[0].abs() + r[1].abs());
        if (r[0] - grid.x(i)).abs() > tol || (r[1] - grid.t(n)).abs() > tol {
            return Err(Error::Parse(format!("row {} is off the uniform grid", k + 1)));
        }
    }
    PiecewiseSection::new(grid, rows.into_iter().map(|r| r[2]).collect(), jumps)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct JumpFile {
    pub jumps: Vec<JumpCurve>,
}

/// Parses and validates a jump descriptor.
pub fn parse_jumps(text: &str) -> Result<Vec<JumpCurve>> {
    let f: JumpFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    f.jumps
        .into_iter()
        .map(|j| JumpCurve::new(j.t, j.x, j.u_left, j.u_right))
        .collect()
}

pub fn jumps_to_json(jumps: &[JumpCurve]) -> Result<String> {
    serde_json::to_string_pretty(&JumpFile { jumps: jumps.to_vec() }).map_err(|e| Error::Parse(e.to_string()))
}

/// Loads a section CSV with an optional jump descriptor.
pub fn load_section(csv_path: &Path, jumps_path: Option<&Path>) -> Result<PiecewiseSection> {
    let jumps = match jumps_path {
        Some(p) => parse_jumps(&std::fs::read_to_string(p)?)?,
        None => Vec::new(),
    };
    read_section_csv(std::fs::File::open(csv_path)?, jumps)
}
