use super::geometry::{Point, Polygon, Ring, Shape};
use super::partition::{Partition, PartitionSet};
use super::{Dataset, PartitionId};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Equirectangular projection to planar meters about a reference latitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub ref_lat_deg: f64,
}

impl Projection {
    pub fn new(ref_lat_deg: f64) -> Self {
        Projection { ref_lat_deg }
    }

    pub fn project(&self, lon_deg: f64, lat_deg: f64) -> Point {
        let k = self.ref_lat_deg.to_radians().cos();
        Point::new(
            EARTH_RADIUS_M * lon_deg.to_radians() * k,
            EARTH_RADIUS_M * lat_deg.to_radians(),
        )
    }

    pub fn describe(&self) -> String {
        format!(
            "equirectangular, reference latitude {} deg, sphere radius {} m",
            self.ref_lat_deg, EARTH_RADIUS_M
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum CoordMode {
    /// Columns already hold projected planar meters.
    #[default]
    Planar,
    /// Columns hold longitude / latitude in degrees. Without a reference
    /// latitude the mean latitude of the file is used.
    LonLat { ref_lat_deg: Option<f64> },
}

/// Which CSV columns hold the feature label and coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub feature: String,
    pub x: String,
    pub y: String,
    #[serde(default)]
    pub coords: CoordMode,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            feature: "feature".into(),
            x: "x".into(),
            y: "y".into(),
            coords: CoordMode::Planar,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn join_rows(rows: &[RowError]) -> String {
    rows.iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("{} bad row(s): {}", .0.len(), join_rows(.0))]
    Rows(Vec<RowError>),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid partition file: {0}")]
    Format(String),
    #[error("duplicate partition id `{0}`")]
    DuplicateId(String),
    #[error("unclosed ring in partition `{0}`")]
    UnclosedRing(String),
}

pub fn load_instances(
    path: impl AsRef<Path>,
    schema: &ColumnSchema,
) -> Result<Dataset, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_instances(file, schema)
}

/// Parses instance rows. All row-level problems are collected and reported
/// together; line numbers count the header as line 1.
pub fn read_instances<R: Read>(reader: R, schema: &ColumnSchema) -> Result<Dataset, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let (fi, xi, yi) = (col(&schema.feature)?, col(&schema.x)?, col(&schema.y)?);

    let mut raw: Vec<(String, f64, f64)> = Vec::new();
    let mut errors = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let line = record
            .as_ref()
            .ok()
            .and_then(|r| r.position().map(|p| p.line()))
            .unwrap_or(row_idx as u64 + 2);
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let name = record.get(fi).unwrap_or("").trim().to_string();
        if name.is_empty() {
            errors.push(RowError {
                line,
                message: format!("empty `{}`", schema.feature),
            });
            continue;
        }
        let parse = |idx: usize, col: &str| -> Result<f64, RowError> {
            let v = record.get(idx).unwrap_or("").trim();
            match v.parse::<f64>() {
                Ok(f) if f.is_finite() => Ok(f),
                _ => Err(RowError {
                    line,
                    message: format!("non-numeric `{col}` value {v:?}"),
                }),
            }
        };
        match (parse(xi, &schema.x), parse(yi, &schema.y)) {
            (Ok(x), Ok(y)) => raw.push((name, x, y)),
            (Err(e), _) | (_, Err(e)) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(IngestError::Rows(errors));
    }

    let projection = match schema.coords {
        CoordMode::Planar => None,
        CoordMode::LonLat { ref_lat_deg } => {
            let lat0 = ref_lat_deg.unwrap_or_else(|| {
                if raw.is_empty() {
                    0.0
                } else {
                    raw.iter().map(|r| r.2).sum::<f64>() / raw.len() as f64
                }
            });
            Some(Projection::new(lat0))
        }
    };
    let records = raw.into_iter().map(|(name, x, y)| {
        let p = match projection {
            Some(proj) => proj.project(x, y),
            None => Point::new(x, y),
        };
        (name, p)
    });
    let mut ds = Dataset::from_records(records).map_err(|e| {
        IngestError::Rows(vec![RowError {
            line: 0,
            message: e.to_string(),
        }])
    })?;
    ds.set_projection(projection);
    Ok(ds)
}

pub fn load_partitions(
    path: impl AsRef<Path>,
    projection: Option<Projection>,
) -> Result<PartitionSet, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_partitions(&text, projection)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Label {
    Int(i64),
    Text(String),
}

impl Label {
    fn from_json(v: &Value) -> Option<Label> {
        match v {
            Value::Number(n) => n
                .as_i64()
                .map(Label::Int)
                .or_else(|| Some(Label::Text(n.to_string()))),
            Value::String(s) => Some(Label::Text(s.clone())),
            _ => None,
        }
    }

    fn text(&self) -> String {
        match self {
            Label::Int(i) => i.to_string(),
            Label::Text(s) => s.clone(),
        }
    }
}

/// Parses a GeoJSON-style `FeatureCollection` of `Polygon` / `MultiPolygon`
/// features. Each feature needs an `id` (in `properties`, or the feature-level
/// `id`). Dense partition ids follow the sorted label order: numeric when every
/// label is an integer, lexicographic otherwise.
pub fn parse_partitions(
    text: &str,
    projection: Option<Projection>,
) -> Result<PartitionSet, IngestError> {
    let root: Value = serde_json::from_str(text)?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::Format("expected a FeatureCollection".into()));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Format("missing `features` array".into()))?;

    let mut parsed: Vec<(Label, Shape)> = Vec::with_capacity(features.len());
    for (i, feat) in features.iter().enumerate() {
        let label = feat
            .get("properties")
            .and_then(|p| p.get("id"))
            .or_else(|| feat.get("id"))
            .and_then(Label::from_json)
            .ok_or_else(|| IngestError::Format(format!("feature #{i} has no `id` property")))?;
        let geom = feat.get("geometry").ok_or_else(|| {
            IngestError::Format(format!("feature `{}` has no geometry", label.text()))
        })?;
        let shape = parse_geometry(geom, &label.text(), projection)?;
        parsed.push((label, shape));
    }

    let all_int = parsed.iter().all(|(l, _)| matches!(l, Label::Int(_)));
    let key = |l: &Label| -> Label {
        if all_int {
            l.clone()
        } else {
            Label::Text(l.text())
        }
    };
    parsed.sort_by_key(|a| key(&a.0));
    let mut seen = BTreeSet::new();
    for (l, _) in &parsed {
        if !seen.insert(l.text()) {
            return Err(IngestError::DuplicateId(l.text()));
        }
    }

    let partitions = parsed
        .into_iter()
        .enumerate()
        .map(|(i, (label, shape))| Partition::new(PartitionId(i as u32), label.text(), shape))
        .collect();
    let crs_note = match projection {
        Some(p) => p.describe(),
        None => "planar coordinates in meters as given".to_string(),
    };
    Ok(PartitionSet::new(partitions, crs_note))
}

fn parse_geometry(
    geom: &Value,
    label: &str,
    projection: Option<Projection>,
) -> Result<Shape, IngestError> {
    let kind = geom.get("type").and_then(Value::as_str).unwrap_or("");
    let coords = geom
        .get("coordinates")
        .ok_or_else(|| IngestError::Format(format!("partition `{label}` has no coordinates")))?;
    let polygons = match kind {
        "Polygon" => vec![parse_polygon(coords, label, projection)?],
        "MultiPolygon" => coords
            .as_array()
            .ok_or_else(|| IngestError::Format(format!("partition `{label}`: bad MultiPolygon")))?
            .iter()
            .map(|c| parse_polygon(c, label, projection))
            .collect::<Result<Vec<_>, _>>()?,
        other => {
            return Err(IngestError::Format(format!(
                "partition `{label}`: unsupported geometry type `{other}`"
            )))
        }
    };
    if polygons.is_empty() {
        return Err(IngestError::Format(format!("partition `{label}` is empty")));
    }
    Ok(Shape::new(polygons))
}

fn parse_polygon(
    coords: &Value,
    label: &str,
    projection: Option<Projection>,
) -> Result<Polygon, IngestError> {
    let rings = coords
        .as_array()
        .ok_or_else(|| IngestError::Format(format!("partition `{label}`: bad Polygon")))?;
    let mut parsed = rings
        .iter()
        .map(|r| parse_ring(r, label, projection))
        .collect::<Result<Vec<_>, _>>()?;
    if parsed.is_empty() {
        return Err(IngestError::Format(format!(
            "partition `{label}`: polygon without rings"
        )));
    }
    let exterior = parsed.remove(0);
    Ok(Polygon::new(exterior, parsed))
}

fn parse_ring(
    ring: &Value,
    label: &str,
    projection: Option<Projection>,
) -> Result<Ring, IngestError> {
    let positions = ring
        .as_array()
        .ok_or_else(|| IngestError::Format(format!("partition `{label}`: bad ring")))?;
    let mut pts = Vec::with_capacity(positions.len());
    for pos in positions {
        let xy = pos
            .as_array()
            .filter(|a| a.len() >= 2)
            .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
            .ok_or_else(|| IngestError::Format(format!("partition `{label}`: bad position")))?;
        pts.push(xy);
    }
    if pts.len() < 4 || pts.first() != pts.last() {
        return Err(IngestError::UnclosedRing(label.to_string()));
    }
    pts.pop();
    let vertices = pts
        .into_iter()
        .map(|(x, y)| match projection {
            Some(p) => p.project(x, y),
            None => Point::new(x, y),
        })
        .collect();
    Ok(Ring::new(vertices))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(id: &str, x0: f64, y0: f64) -> String {
        format!(
            r#"{{"type":"Feature","properties":{{"id":{id}}},"geometry":{{"type":"Polygon","coordinates":[[[{x0},{y0}],[{x1},{y0}],[{x1},{y1}],[{x0},{y1}],[{x0},{y0}]]]}}}}"#,
            x1 = x0 + 1.0,
            y1 = y0 + 1.0
        )
    }

    fn collection(features: &[String]) -> String {
        format!(
            r#"{{"type":"FeatureCollection","features":[{}]}}"#,
            features.join(",")
        )
    }

    #[test]
    fn three_rows_two_features() {
        let csv = "brand,x,y\nA,0,0\nB,1,1\nA,2,2\n";
        let schema = ColumnSchema {
            feature: "brand".into(),
            ..ColumnSchema::default()
        };
        let ds = read_instances(csv.as_bytes(), &schema).unwrap();
        assert_eq!(ds.instances.len(), 3);
        assert_eq!(ds.features().len(), 2);
    }

    #[test]
    fn header_only_is_empty() {
        let ds = read_instances("feature,x,y\n".as_bytes(), &ColumnSchema::default()).unwrap();
        assert!(ds.instances.is_empty());
    }

    #[test]
    fn non_numeric_coordinate_names_line() {
        let err = read_instances(
            "feature,x,y\nA,abc,1\n".as_bytes(),
            &ColumnSchema::default(),
        )
        .unwrap_err();
        match err {
            IngestError::Rows(rows) => {
                assert_eq!(rows.len(), 1);
                assert_eq!(rows[0].line, 2);
                assert!(rows[0].message.contains("abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err =
            read_instances("name,x,y\nA,1,1\n".as_bytes(), &ColumnSchema::default()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "feature"));
    }

    #[test]
    fn lonlat_is_projected() {
        let schema = ColumnSchema {
            coords: CoordMode::LonLat {
                ref_lat_deg: Some(45.0),
            },
            ..ColumnSchema::default()
        };
        let ds = read_instances(
            "feature,x,y\nA,-93.0,45.0\nB,-93.0,45.001\n".as_bytes(),
            &schema,
        )
        .unwrap();
        let d = ds.instances[0].location.dist(&ds.instances[1].location);
        // 0.001 degree of latitude is about 111 m.
        assert!((d - 111.19).abs() < 0.1, "{d}");
    }

    #[test]
    fn two_disjoint_squares() {
        let text = collection(&[square("0", 0.0, 0.0), square("1", 5.0, 5.0)]);
        let ps = parse_partitions(&text, None).unwrap();
        assert_eq!(ps.len(), 2);
        assert!(ps.partitions().iter().all(|p| p.neighbors.is_empty()));
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = collection(&[square("7", 0.0, 0.0), square("7", 1.0, 0.0)]);
        assert!(
            matches!(parse_partitions(&text, None), Err(IngestError::DuplicateId(id)) if id == "7")
        );
    }

    #[test]
    fn unclosed_ring_rejected() {
        let text = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":1},
            "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}]}"#;
        assert!(matches!(
            parse_partitions(text, None),
            Err(IngestError::UnclosedRing(_))
        ));
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let text = collection(&[
            square("10", 0.0, 0.0),
            square("9", 2.0, 0.0),
            square("2", 4.0, 0.0),
        ]);
        let ps = parse_partitions(&text, None).unwrap();
        let labels: Vec<&str> = ps.partitions().iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["2", "9", "10"]);
    }

    #[test]
    fn multipolygon_is_one_partition() {
        let text = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"m"},
            "geometry":{"type":"MultiPolygon","coordinates":[
              [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
              [[[3,0],[4,0],[4,1],[3,1],[3,0]]]]}}]}"#;
        let ps = parse_partitions(text, None).unwrap();
        assert_eq!(ps.len(), 1);
        assert!((ps.partitions()[0].shape.area() - 2.0).abs() < 1e-12);
    }
}
