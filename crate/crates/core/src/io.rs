//! File formats for every artifact the library produces or consumes.
//!
//! CSV carries the tabular data: point clouds (one point per row, `d`
//! columns, optional header), distance matrices (`n × n`), bijections
//! (row `i` holds `φ(i)`), raster images, and loss histories. JSON
//! carries the structured data: filtered complexes as a list of
//! `{vertices, time}`, diagrams as `{degree: [[birth, death], ...]}`
//! with `"inf"` for essential deaths, Euler curves as `[[t, v], ...]`,
//! distributed invariants as `{kind, m, entries}`, and the
//! certification reports. Subset collections are newline-delimited
//! index tuples.
//!
//! All writers are canonical — object keys sorted, subset tuples
//! sorted, floats in shortest round-trip form — so equal values
//! serialize to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::align::AlignResult;
use crate::distributed::{DistributedInvariant, InvariantKind, InvariantValue, SubsetCollection};
use crate::filtration::{FilteredComplex, Simplex, VertexSet};
use crate::geometry::{Bijection, DistanceMatrix, PointCloud};
use crate::metrics::PersistenceImage;
use crate::persistence::{EulerCurve, PersistenceDiagram, PersistencePoint};
use crate::reconstruction::{BoundReport, CertifyReport, SparseCertifyReport};
use crate::{Error, Result, Scalar};

// ---------------------------------------------------------------- CSV

/// Splits a CSV file into trimmed fields, skipping blank lines. Rows
/// are reported with 1-based physical line numbers.
fn csv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| (i + 1, line.split(',').map(str::trim).collect()))
}

/// Parses numeric CSV with an optional header: if every field of the
/// first non-blank line fails to parse, that line is skipped as a
/// header; any later unparsable field is an error naming its row.
fn numeric_rows<F: Scalar>(text: &str) -> Result<Vec<Vec<F>>> {
    let mut rows = Vec::new();
    for (idx, (row, fields)) in csv_rows(text).enumerate() {
        let parsed: std::result::Result<Vec<F>, _> =
            fields.iter().map(|f| parse_scalar(f)).collect();
        match parsed {
            Ok(vals) => rows.push(vals),
            Err(msg) => {
                if idx == 0 && fields.iter().all(|f| f.parse::<f64>().is_err()) {
                    continue;
                }
                return Err(Error::CsvParse { row, msg });
            }
        }
    }
    Ok(rows)
}

fn parse_scalar<F: Scalar>(field: &str) -> std::result::Result<F, String> {
    let x: f64 = field
        .parse()
        .map_err(|_| format!("expected a number, got {field:?}"))?;
    F::from_f64(x).ok_or_else(|| format!("{field:?} is not representable"))
}

fn fmt_row<F: Scalar>(row: &[F]) -> String {
    let mut line = String::new();
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        let _ = write!(line, "{v}");
    }
    line
}

fn write_lines(path: impl AsRef<Path>, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut out = String::new();
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a point cloud: one point per row, `d` columns, optional
/// header. Labels are row order.
pub fn read_point_cloud<F: Scalar>(path: impl AsRef<Path>) -> Result<PointCloud<F>> {
    let text = fs::read_to_string(path)?;
    PointCloud::from_rows(numeric_rows(&text)?)
}

pub fn write_point_cloud<F: Scalar>(path: impl AsRef<Path>, cloud: &PointCloud<F>) -> Result<()> {
    write_lines(path, cloud.iter_points().map(fmt_row))
}

/// Reads an `n × n` distance matrix CSV (optional header tolerated).
pub fn read_distance_matrix<F: Scalar>(path: impl AsRef<Path>) -> Result<DistanceMatrix<F>> {
    let text = fs::read_to_string(path)?;
    DistanceMatrix::from_rows(numeric_rows(&text)?)
}

pub fn write_distance_matrix<F: Scalar>(
    path: impl AsRef<Path>,
    d: &DistanceMatrix<F>,
) -> Result<()> {
    write_lines(path, d.rows().iter().map(|r| fmt_row(r)))
}

/// Reads a bijection: one integer per row, row `i` holding `φ(i)`
/// (optional header tolerated).
pub fn read_bijection(path: impl AsRef<Path>) -> Result<Bijection> {
    let text = fs::read_to_string(path)?;
    let mut map = Vec::new();
    for (idx, (row, fields)) in csv_rows(&text).enumerate() {
        if fields.len() != 1 || fields[0].parse::<u32>().is_err() {
            if idx == 0 && fields.iter().all(|f| f.parse::<u32>().is_err()) {
                continue;
            }
            return Err(Error::CsvParse {
                row,
                msg: format!("expected one index per row, got {fields:?}"),
            });
        }
        map.push(fields[0].parse::<u32>().unwrap());
    }
    Bijection::new(map)
}

pub fn write_bijection(path: impl AsRef<Path>, phi: &Bijection) -> Result<()> {
    write_lines(path, phi.as_slice().iter().map(|v| v.to_string()))
}

/// Writes an image raster as CSV, one row of pixels per line (row =
/// persistence axis, column = birth axis). With `normalized`, pixel
/// values are divided by the maximum and the normalization factor is
/// reported in a leading `#` comment line, making the body a PNG-ready
/// `[0, 1]` grid.
pub fn write_image_csv<F: Scalar>(
    path: impl AsRef<Path>,
    image: &PersistenceImage<F>,
    normalized: bool,
) -> Result<()> {
    let (nx, ny) = image.config().resolution;
    let factor = image.max_value();
    let scale = if normalized && factor > F::zero() {
        F::one() / factor
    } else {
        F::one()
    };
    let mut lines = Vec::with_capacity(ny + 1);
    if normalized {
        lines.push(format!("# normalization_factor = {factor}"));
    }
    for row in 0..ny {
        let pixels: Vec<F> = (0..nx)
            .map(|col| image.values()[row * nx + col] * scale)
            .collect();
        lines.push(fmt_row(&pixels));
    }
    write_lines(path, lines)
}

/// Writes the per-iteration loss curve with an `iteration,loss` header
/// (iterations 1-based).
pub fn write_loss_history<F: Scalar>(path: impl AsRef<Path>, losses: &[F]) -> Result<()> {
    let rows = losses
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{},{l}", i + 1));
    write_lines(path, std::iter::once("iteration,loss".to_string()).chain(rows))
}

/// Writes an alignment trajectory as a directory: one
/// `cloud_<iteration>.csv` per snapshot (zero-padded so lexicographic
/// order is iteration order) plus `loss_history.csv`.
pub fn write_trajectory<F: Scalar>(dir: impl AsRef<Path>, result: &AlignResult<F>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (it, cloud) in &result.snapshots {
        write_point_cloud(dir.join(format!("cloud_{it:06}.csv")), cloud)?;
    }
    write_loss_history(dir.join("loss_history.csv"), &result.loss_history)
}

// ------------------------------------------------- subset collections

/// Writes a subset collection as newline-delimited index tuples
/// (comma-separated, each tuple sorted, tuples in sorted order).
pub fn write_subset_collection(
    path: impl AsRef<Path>,
    collection: &SubsetCollection,
) -> Result<()> {
    let lines = collection.subsets().iter().map(|s| {
        s.iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(",")
    });
    write_lines(path, lines)
}

/// Reads newline-delimited index tuples. The ground-set size is
/// `n` when given, otherwise one past the largest label.
pub fn read_subset_collection(
    path: impl AsRef<Path>,
    n: Option<usize>,
) -> Result<SubsetCollection> {
    let text = fs::read_to_string(path)?;
    let mut subsets = Vec::new();
    for (row, fields) in csv_rows(&text) {
        let subset: std::result::Result<Vec<u32>, _> =
            fields.iter().map(|f| f.parse::<u32>()).collect();
        let subset = subset.map_err(|_| Error::CsvParse {
            row,
            msg: format!("expected an index tuple, got {fields:?}"),
        })?;
        subsets.push(subset);
    }
    let n = n.unwrap_or_else(|| {
        subsets
            .iter()
            .filter_map(|s| s.iter().max())
            .map(|&l| l as usize + 1)
            .max()
            .unwrap_or(0)
    });
    SubsetCollection::new(n, subsets)
}

// --------------------------------------------------------------- JSON

/// Writes a JSON value pretty-printed with a trailing newline.
pub fn write_json(path: impl AsRef<Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json(path: impl AsRef<Path>) -> Result<Value> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Json(e.to_string()))
}

fn scalar_to_json<F: Scalar>(x: F) -> Result<Value> {
    let x = x.to_f64().ok_or_else(|| Error::Json("scalar not representable as f64".into()))?;
    if x.is_infinite() && x > 0.0 {
        return Ok(Value::String("inf".into()));
    }
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| Error::Json(format!("{x} has no JSON representation")))
}

fn scalar_from_json<F: Scalar>(v: &Value, what: &str) -> Result<F> {
    match v {
        Value::Number(n) => {
            let x = n
                .as_f64()
                .ok_or_else(|| Error::Json(format!("{what}: {n} is not a float")))?;
            F::from_f64(x).ok_or_else(|| Error::Json(format!("{what}: {x} not representable")))
        }
        Value::String(s) if s == "inf" => Ok(F::infinity()),
        other => Err(Error::Json(format!("{what}: expected a number or \"inf\", got {other}"))),
    }
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::Json(format!("{what}: expected an object")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::Json(format!("{what}: expected an array")))
}

fn get<'a>(m: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value> {
    m.get(key)
        .ok_or_else(|| Error::Json(format!("{what}: missing field {key:?}")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::Json(format!("{what}: expected a nonnegative integer")))
}

fn as_indices(v: &Value, what: &str) -> Result<Vec<u32>> {
    as_array(v, what)?
        .iter()
        .map(|x| {
            x.as_u64()
                .map(|l| l as u32)
                .ok_or_else(|| Error::Json(format!("{what}: expected vertex indices")))
        })
        .collect()
}

// A filtered complex is a list of `{vertices, time}`.

pub fn complex_to_json<F: Scalar>(complex: &FilteredComplex<F>) -> Result<Value> {
    let simplices = complex
        .simplices()
        .iter()
        .map(|s| {
            Ok(json!({
                "vertices": s.vertices.as_slice(),
                "time": scalar_to_json(s.time)?,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Value::Array(simplices))
}

/// Reads a filtered complex, inferring the vertex count and skeleton
/// dimension from the simplices themselves.
pub fn complex_from_json<F: Scalar>(v: &Value) -> Result<FilteredComplex<F>> {
    let mut simplices = Vec::new();
    let mut n_vertices = 0usize;
    let mut skeleton_dim = 0usize;
    for entry in as_array(v, "complex")? {
        let obj = as_object(entry, "complex simplex")?;
        let vertices: VertexSet =
            as_indices(get(obj, "vertices", "complex simplex")?, "complex simplex")?
                .into_iter()
                .collect();
        let time = scalar_from_json(get(obj, "time", "complex simplex")?, "simplex time")?;
        if let Some(&last) = vertices.last() {
            n_vertices = n_vertices.max(last as usize + 1);
        }
        skeleton_dim = skeleton_dim.max(vertices.len().saturating_sub(1));
        simplices.push(Simplex { vertices, time });
    }
    FilteredComplex::new(n_vertices, skeleton_dim, simplices)
}

// A diagram is `{degree: [[birth, death], ...]}` with `"inf"` deaths.
// Every degree up to the skeleton dimension is present (possibly
// empty), so the object is self-describing.

pub fn diagram_to_json<F: Scalar>(dg: &PersistenceDiagram<F>) -> Result<Value> {
    let mut map = Map::new();
    for degree in 0..=dg.skeleton_dim() {
        let pts = dg
            .points(degree)
            .iter()
            .map(|p| Ok(Value::Array(vec![scalar_to_json(p.birth)?, scalar_to_json(p.death)?])))
            .collect::<Result<Vec<_>>>()?;
        map.insert(degree.to_string(), Value::Array(pts));
    }
    Ok(Value::Object(map))
}

pub fn diagram_from_json<F: Scalar>(v: &Value) -> Result<PersistenceDiagram<F>> {
    let obj = as_object(v, "diagram")?;
    let skeleton_dim = obj
        .keys()
        .map(|k| {
            k.parse::<usize>()
                .map_err(|_| Error::Json(format!("diagram: degree key {k:?} is not an integer")))
        })
        .try_fold(0usize, |acc, d| d.map(|d| acc.max(d)))?;
    parse_diagram(v, skeleton_dim)
}

fn parse_diagram<F: Scalar>(v: &Value, skeleton_dim: usize) -> Result<PersistenceDiagram<F>> {
    let obj = as_object(v, "diagram")?;
    let mut points = Vec::new();
    for (key, pts) in obj {
        let degree: usize = key
            .parse()
            .map_err(|_| Error::Json(format!("diagram: degree key {key:?} is not an integer")))?;
        for pt in as_array(pts, "diagram points")? {
            let pair = as_array(pt, "diagram point")?;
            if pair.len() != 2 {
                return Err(Error::Json("diagram point: expected [birth, death]".into()));
            }
            let birth = scalar_from_json(&pair[0], "birth")?;
            let death = scalar_from_json(&pair[1], "death")?;
            points.push((degree, PersistencePoint { birth, death }));
        }
    }
    PersistenceDiagram::from_points(skeleton_dim, points)
}

// An Euler curve is its breakpoint list `[[t, v], ...]`.

pub fn curve_to_json<F: Scalar>(curve: &EulerCurve<F>) -> Result<Value> {
    let pts = curve
        .breakpoints()
        .iter()
        .map(|&(t, v)| Ok(Value::Array(vec![scalar_to_json(t)?, json!(v)])))
        .collect::<Result<Vec<_>>>()?;
    Ok(Value::Array(pts))
}

pub fn curve_from_json<F: Scalar>(v: &Value) -> Result<EulerCurve<F>> {
    let mut breakpoints = Vec::new();
    for pt in as_array(v, "euler curve")? {
        let pair = as_array(pt, "curve breakpoint")?;
        if pair.len() != 2 {
            return Err(Error::Json("curve breakpoint: expected [t, value]".into()));
        }
        let t = scalar_from_json(&pair[0], "breakpoint time")?;
        let value = pair[1]
            .as_i64()
            .ok_or_else(|| Error::Json("breakpoint value: expected an integer".into()))?;
        breakpoints.push((t, value));
    }
    EulerCurve::new(breakpoints)
}

// A distributed invariant is `{kind, m, entries}` with entries sorted
// by subset tuple.

pub fn distributed_to_json<F: Scalar>(inv: &DistributedInvariant<F>) -> Result<Value> {
    let entries = inv
        .entries()
        .iter()
        .map(|(subset, value)| {
            let invariant = match value {
                InvariantValue::Diagram(dg) => diagram_to_json(dg)?,
                InvariantValue::Curve(c) => curve_to_json(c)?,
            };
            Ok(json!({ "subset": subset, "invariant": invariant }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "kind": inv.kind().code(),
        "m": inv.skeleton_dim(),
        "entries": entries,
    }))
}

pub fn distributed_from_json<F: Scalar>(v: &Value) -> Result<DistributedInvariant<F>> {
    let obj = as_object(v, "distributed invariant")?;
    let kind = InvariantKind::from_code(
        get(obj, "kind", "distributed invariant")?
            .as_str()
            .ok_or_else(|| Error::Json("kind: expected a string".into()))?,
    )?;
    let m = as_usize(get(obj, "m", "distributed invariant")?, "m")?;
    let mut entries = BTreeMap::new();
    for entry in as_array(get(obj, "entries", "distributed invariant")?, "entries")? {
        let eo = as_object(entry, "entry")?;
        let subset = as_indices(get(eo, "subset", "entry")?, "subset")?;
        let raw = get(eo, "invariant", "entry")?;
        let value = if kind.is_persistence() {
            InvariantValue::Diagram(parse_diagram(raw, m)?)
        } else {
            InvariantValue::Curve(curve_from_json(raw)?)
        };
        entries.insert(subset, value);
    }
    DistributedInvariant::from_entries(kind, m, entries)
}

// ------------------------------------------------------------ reports

pub fn certify_report_to_json<F: Scalar>(report: &CertifyReport<F>) -> Result<Value> {
    Ok(json!({
        "eps_obs": scalar_to_json(report.eps_obs)?,
        "bound": scalar_to_json(report.bound)?,
        "distortion": scalar_to_json(report.distortion)?,
        "flavor": report.flavor.code(),
        "k": report.k,
        "m": report.m,
        "collection_size": report.collection_size,
    }))
}

pub fn sparse_certify_report_to_json<F: Scalar>(report: &SparseCertifyReport<F>) -> Result<Value> {
    Ok(json!({
        "k": report.k,
        "eps1": scalar_to_json(report.eps1)?,
        "eps2": scalar_to_json(report.eps2)?,
        "bound": scalar_to_json(report.bound)?,
        "distortion": scalar_to_json(report.distortion)?,
        "anchor": report.anchor,
        "collection_size": report.collection_size,
    }))
}

pub fn bound_report_to_json<F: Scalar>(report: &BoundReport<F>) -> Result<Value> {
    Ok(json!({
        "flavor": report.flavor.code(),
        "k": report.k,
        "m": report.m,
        "epsilon": scalar_to_json(report.epsilon)?,
        "bound": scalar_to_json(report.bound)?,
        "formula": report.formula,
    }))
}
