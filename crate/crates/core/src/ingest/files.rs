//! Text formats for graphs, trips and routed paths.
//!
//! Node file: `id,lon,lat` per line. Edge file: `from,to[,length_m]`. Lines
//! starting with `#` are comments, except `# metric=planar` (or `geographic`)
//! in the node file, which selects how coordinates are read. LF and CRLF line
//! endings are both accepted.
//!
//! Paths file: a `# nodes=<N>` line, a header row, then
//! `target,pickup_x,pickup_y,dropoff_x,dropoff_y,path` rows where `path` is
//! space-separated node indices.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::{PathDataset, PathEntry, TripRecord};
use crate::error::{Error, Result};
use crate::graph::{Coordinate, EdgeSpec, Graph, Metric, Path};

fn read_text(path: &FsPath) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

type NumberedLines<'a> = Vec<(usize, &'a str)>;

/// Non-comment, non-blank lines with their 1-based line numbers, plus the
/// `key=value` directives found in comment lines.
fn data_lines(text: &str) -> (NumberedLines<'_>, Vec<(String, String)>) {
    let mut lines = Vec::new();
    let mut directives = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                if !k.contains(char::is_whitespace) {
                    directives.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
                }
            }
            continue;
        }
        lines.push((i + 1, line));
    }
    (lines, directives)
}

fn parse_f64(path: &FsPath, line: usize, field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(path, line, format!("invalid {what} `{field}`")))
}

pub type NodeList = Vec<(String, Coordinate)>;

/// Reads node and edge files without building the graph.
pub fn read_nodes_and_edges(nodes_path: &FsPath, edges_path: &FsPath) -> Result<(Metric, NodeList, Vec<EdgeSpec>)> {
    let text = read_text(nodes_path)?;
    let (lines, directives) = data_lines(&text);
    let mut metric = Metric::Geographic;
    for (k, v) in directives {
        if k == "metric" {
            metric = match v.to_ascii_lowercase().as_str() {
                "planar" => Metric::Planar,
                "geographic" => Metric::Geographic,
                other => return Err(Error::parse(nodes_path, 1, format!("unknown metric `{other}`"))),
            };
        }
    }
    let mut nodes = Vec::with_capacity(lines.len());
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(nodes_path, n, "expected `id,lon,lat`"));
        }
        let x = parse_f64(nodes_path, n, fields[1], "longitude")?;
        let y = parse_f64(nodes_path, n, fields[2], "latitude")?;
        nodes.push((fields[0].to_string(), Coordinate::new(x, y)));
    }

    let text = read_text(edges_path)?;
    let (lines, _) = data_lines(&text);
    let mut edges = Vec::with_capacity(lines.len());
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let length = match fields.len() {
            2 => None,
            3 if fields[2].is_empty() => None,
            3 => Some(parse_f64(edges_path, n, fields[2], "length")?),
            _ => return Err(Error::parse(edges_path, n, "expected `from,to[,length_m]`")),
        };
        edges.push(EdgeSpec::new(fields[0], fields[1], length));
    }
    Ok((metric, nodes, edges))
}

pub fn load_graph(nodes_path: &FsPath, edges_path: &FsPath) -> Result<Graph> {
    let (metric, nodes, edges) = read_nodes_and_edges(nodes_path, edges_path)?;
    Graph::build(metric, nodes, &edges)
}

fn create(path: &FsPath) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_graph(graph: &Graph, nodes_path: &FsPath, edges_path: &FsPath) -> Result<()> {
    fn io(p: &FsPath) -> impl Fn(std::io::Error) -> Error + '_ {
        move |e| Error::io(p, e)
    }
    let mut w = create(nodes_path)?;
    let metric = match graph.metric() {
        Metric::Planar => "planar",
        Metric::Geographic => "geographic",
    };
    writeln!(w, "# metric={metric}").map_err(io(nodes_path))?;
    writeln!(w, "# id,lon,lat").map_err(io(nodes_path))?;
    for i in 0..graph.node_count() {
        let c = graph.coordinate(i);
        writeln!(w, "{},{},{}", graph.node_id(i), c.x, c.y).map_err(io(nodes_path))?;
    }
    w.flush().map_err(io(nodes_path))?;

    let mut w = create(edges_path)?;
    writeln!(w, "# from,to,length_m").map_err(io(edges_path))?;
    for (a, b, l) in graph.edges() {
        writeln!(w, "{},{},{}", graph.node_id(a), graph.node_id(b), l).map_err(io(edges_path))?;
    }
    w.flush().map_err(io(edges_path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TargetColumn {
    #[default]
    Tip,
    Fare,
}

impl TargetColumn {
    pub fn nyc_column(self) -> &'static str {
        match self {
            TargetColumn::Tip => "tip_amount",
            TargetColumn::Fare => "fare_amount",
        }
    }
}

impl std::str::FromStr for TargetColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tip" => Ok(TargetColumn::Tip),
            "fare" => Ok(TargetColumn::Fare),
            other => Err(Error::InvalidArgument(format!("unknown target `{other}`, expected tip or fare"))),
        }
    }
}

/// Column names read from a trip file. Everything else in the file is ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripSchema {
    pub pickup_x: String,
    pub pickup_y: String,
    pub dropoff_x: String,
    pub dropoff_y: String,
    pub target: String,
}

impl TripSchema {
    /// Column names of the NYC yellow/green taxi trip records.
    pub fn nyc(target: TargetColumn) -> Self {
        TripSchema {
            pickup_x: "pickup_longitude".into(),
            pickup_y: "pickup_latitude".into(),
            dropoff_x: "dropoff_longitude".into(),
            dropoff_y: "dropoff_latitude".into(),
            target: target.nyc_column().into(),
        }
    }
}

impl Default for TripSchema {
    fn default() -> Self {
        TripSchema::nyc(TargetColumn::Tip)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrips {
    pub records: Vec<TripRecord>,
    pub dropped: usize,
}

/// Reads a delimited trip file with a header row. Rows with unparseable or
/// out-of-range coordinates and rows with negative or non-finite targets are
/// dropped and counted.
pub fn load_trips(path: &FsPath, schema: &TripSchema, metric: Metric) -> Result<LoadedTrips> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, 1, format!("missing column `{name}`")))
    };
    let cols = [
        column(&schema.pickup_x)?,
        column(&schema.pickup_y)?,
        column(&schema.dropoff_x)?,
        column(&schema.dropoff_y)?,
        column(&schema.target)?,
    ];

    let mut records = Vec::new();
    let mut dropped = 0;
    for row in reader.records() {
        let parsed = row.ok().and_then(|row| {
            let mut v = [0.0f64; 5];
            for (slot, &c) in v.iter_mut().zip(&cols) {
                *slot = row.get(c)?.parse().ok()?;
            }
            let pickup = Coordinate::new(v[0], v[1]);
            let dropoff = Coordinate::new(v[2], v[3]);
            let ok = metric.validate(pickup).is_ok()
                && metric.validate(dropoff).is_ok()
                && v[4].is_finite()
                && v[4] >= 0.0;
            ok.then_some(TripRecord {
                pickup,
                dropoff,
                target: v[4],
            })
        });
        match parsed {
            Some(t) => records.push(t),
            None => dropped += 1,
        }
    }
    if records.is_empty() {
        return Err(Error::NoValidRows(path.to_path_buf()));
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} invalid rows", path.display());
    }
    Ok(LoadedTrips { records, dropped })
}

pub fn write_trips(path: &FsPath, trips: &[TripRecord], schema: &TripSchema) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([&schema.pickup_x, &schema.pickup_y, &schema.dropoff_x, &schema.dropoff_y, &schema.target])?;
    for t in trips {
        w.write_record([
            t.pickup.x.to_string(),
            t.pickup.y.to_string(),
            t.dropoff.x.to_string(),
            t.dropoff.y.to_string(),
            t.target.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const PATHS_HEADER: &str = "target,pickup_x,pickup_y,dropoff_x,dropoff_y,path";

pub fn write_paths(path: &FsPath, dataset: &PathDataset) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    writeln!(w, "# nodes={}", dataset.node_count()).map_err(io)?;
    writeln!(w, "{PATHS_HEADER}").map_err(io)?;
    for e in dataset.entries() {
        let nodes: Vec<String> = e.path.nodes().iter().map(usize::to_string).collect();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.target,
            e.pickup.x,
            e.pickup.y,
            e.dropoff.x,
            e.dropoff.y,
            nodes.join(" ")
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_paths(path: &FsPath) -> Result<PathDataset> {
    let text = read_text(path)?;
    let (lines, directives) = data_lines(&text);
    let node_count = directives
        .iter()
        .find(|(k, _)| k == "nodes")
        .ok_or_else(|| Error::parse(path, 1, "missing `# nodes=<N>` line"))?
        .1
        .parse::<usize>()
        .map_err(|_| Error::parse(path, 1, "invalid node count"))?;

    let mut entries = Vec::with_capacity(lines.len());
    for (n, line) in lines {
        if line == PATHS_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(path, n, format!("expected `{PATHS_HEADER}`")));
        }
        let num = |i: usize, what: &str| parse_f64(path, n, fields[i], what);
        let nodes = fields[5]
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|_| Error::parse(path, n, format!("invalid node index `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        entries.push(PathEntry {
            target: num(0, "target")?,
            pickup: Coordinate::new(num(1, "coordinate")?, num(2, "coordinate")?),
            dropoff: Coordinate::new(num(3, "coordinate")?, num(4, "coordinate")?),
            path: Path::new(nodes).map_err(|e| Error::parse(path, n, e.to_string()))?,
        });
    }
    PathDataset::with_node_count(node_count, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_grid_graph, generate_synthetic_trips, snap_and_route, SyntheticTipModel};

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn parses_node_and_edge_files() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(&dir, "n.csv", "# id,lon,lat\r\nv1,-73.99,40.75\r\nv2, -73.98 ,40.76\r\n\r\nv3,-73.97,40.75\r\n");
        let edges = write(&dir, "e.csv", "#from,to,len\nv1,v2\nv2,v3,120.5\n");
        let g = load_graph(&nodes, &edges).unwrap();
        assert_eq!(g.metric(), Metric::Geographic);
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(g.edge_length(1, 2), Some(120.5));
        let computed = g.edge_length(0, 1).unwrap();
        assert!((computed - Metric::Geographic.distance(g.coordinate(0), g.coordinate(1))).abs() < 1e-9);
    }

    #[test]
    fn reports_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(&dir, "n.csv", "a,0,0\nb,zero,0\n");
        let edges = write(&dir, "e.csv", "a,b\n");
        let err = load_graph(&nodes, &edges).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let nodes = write(&dir, "n2.csv", "a,0,0\nb,1,0\n");
        let edges = write(&dir, "e2.csv", "a,c\n");
        assert!(matches!(load_graph(&nodes, &edges).unwrap_err(), Error::UnknownNode(_)));
        assert!(matches!(
            load_graph(&dir.path().join("missing"), &edges).unwrap_err(),
            Error::Io { .. }
        ));
    }

    #[test]
    fn graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = generate_grid_graph(4, 3, 75.0).unwrap();
        let (n, e) = (dir.path().join("n"), dir.path().join("e"));
        write_graph(&g, &n, &e).unwrap();
        let back = load_graph(&n, &e).unwrap();
        assert_eq!(back.metric(), Metric::Planar);
        assert_eq!(back.node_count(), g.node_count());
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        for i in 0..g.node_count() {
            assert_eq!(back.node_id(i), g.node_id(i));
            assert_eq!(back.coordinate(i), g.coordinate(i));
        }
    }

    #[test]
    fn loads_clean_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "t.csv",
            "pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude,tip_amount\n\
             -73.9,40.7,-73.8,40.8,1.5\n-73.9,40.7,-73.8,40.8,0\n-73.9,40.7,-73.8,40.8,2.25\n",
        );
        let out = load_trips(&p, &TripSchema::default(), Metric::Geographic).unwrap();
        assert_eq!((out.records.len(), out.dropped), (3, 0));
    }

    #[test]
    fn drops_invalid_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "t.csv",
            "pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude,tip_amount\n\
             -73.9,40.7,-73.8,40.8,-1.0\n-73.9,40.7,-73.8,40.8,1.0\n",
        );
        let out = load_trips(&p, &TripSchema::default(), Metric::Geographic).unwrap();
        assert_eq!((out.records.len(), out.dropped), (1, 1));

        let p = write(
            &dir,
            "t2.csv",
            "pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude,tip_amount\n\
             ,40.7,-73.8,40.8,1.0\n-273.9,40.7,-73.8,40.8,1.0\n-73.9,40.7,-73.8\nx,y,z,w,1\n-73.9,40.7,-73.8,40.8,NaN\n-73.9,40.7,-73.8,40.8,3\n",
        );
        let out = load_trips(&p, &TripSchema::default(), Metric::Geographic).unwrap();
        assert_eq!((out.records.len(), out.dropped), (1, 5));

        let p = write(&dir, "t3.csv", "pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude,tip_amount\n-73.9,40.7,-73.8,40.8,-2\n");
        assert!(matches!(load_trips(&p, &TripSchema::default(), Metric::Geographic), Err(Error::NoValidRows(_))));
    }

    #[test]
    fn maps_nyc_columns() {
        // A trimmed NYC 2016 yellow-cab record.
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "yellow.csv",
            "VendorID,tpep_pickup_datetime,tpep_dropoff_datetime,passenger_count,trip_distance,pickup_longitude,pickup_latitude,RatecodeID,store_and_fwd_flag,dropoff_longitude,dropoff_latitude,payment_type,fare_amount,extra,mta_tax,tip_amount,tolls_amount,improvement_surcharge,total_amount\n\
             2,2016-01-01 00:00:00,2016-01-01 00:00:00,2,1.10,-73.990371704101563,40.734695434570313,1,N,-73.981842041015625,40.732406616210937,2,7.5,0.5,0.5,1.75,0,0.3,10.55\n",
        );
        let tip = load_trips(&p, &TripSchema::nyc(TargetColumn::Tip), Metric::Geographic).unwrap();
        assert_eq!(tip.records[0].target, 1.75);
        assert_eq!(tip.records[0].pickup, Coordinate::new(-73.990_371_704_101_56, 40.734_695_434_570_31));
        assert_eq!(tip.records[0].dropoff, Coordinate::new(-73.981_842_041_015_62, 40.732_406_616_210_94));
        let fare = load_trips(&p, &TripSchema::nyc(TargetColumn::Fare), Metric::Geographic).unwrap();
        assert_eq!(fare.records[0].target, 7.5);

        let mut custom = TripSchema::nyc(TargetColumn::Tip);
        custom.target = "tip".into();
        assert!(matches!(load_trips(&p, &custom, Metric::Geographic), Err(Error::Parse { .. })));
    }

    #[test]
    fn trips_and_paths_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = generate_grid_graph(5, 5, 100.0).unwrap();
        let model = SyntheticTipModel { per_meter_rate: 0.0013, areas: vec![], noise_sd: 0.4, seed: 3 };
        let trips = generate_synthetic_trips(&g, 50, &model).unwrap();
        let tp = dir.path().join("trips.csv");
        write_trips(&tp, &trips, &TripSchema::default()).unwrap();
        let back = load_trips(&tp, &TripSchema::default(), Metric::Planar).unwrap();
        assert_eq!(back.records, trips);

        let snapped = snap_and_route(&g, &trips).unwrap().dataset;
        let pp = dir.path().join("paths.csv");
        write_paths(&pp, &snapped).unwrap();
        assert_eq!(load_paths(&pp).unwrap(), snapped);
    }
}
