//! On-disk formats: cube container, label grids, PGM/PPM images and the
//! plain-text artifact dumps.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use hgc_core::cube::{HsiCube, LabelMap};
use hgc_core::graph::SuperpixelGraph;
use hgc_core::linalg::Matrix;
use hgc_core::metrics::{ConfusionMatrix, MetricsReport};
use hgc_core::partition::PartitionAssignment;
use hgc_core::superpixel::SuperpixelMap;
use hgc_core::trainer::TrainHistory;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(fs::Permissions::from_mode(0o644))
            .map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::format(path, e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::format(path, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeHeader {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub dtype: String,
    pub payload: String,
}

/// Payload file name paired with a `<name>.hgc.json` header.
pub fn payload_name(header: &Path) -> String {
    let file = header.file_name().and_then(|f| f.to_str()).unwrap_or("cube.hgc.json");
    let stem = file.strip_suffix(".hgc.json").or_else(|| file.strip_suffix(".json")).unwrap_or(file);
    format!("{stem}.hgc.bin")
}

/// Loads a cube from its JSON header and little-endian `f32` payload.
pub fn load_cube(header_path: &Path) -> CliResult<HsiCube> {
    let header: CubeHeader = read_json(header_path)?;
    if header.dtype != "f32le" {
        return Err(CliError::format(header_path, format!("unsupported dtype {:?}", header.dtype)));
    }
    let payload = header_path.parent().unwrap_or(Path::new(".")).join(&header.payload);
    let bytes = read_bytes(&payload)?;
    let expected = header.width * header.height * header.bands * 4;
    if bytes.len() != expected {
        return Err(CliError::format(
            &payload,
            format!("payload length mismatch: header declares {expected} bytes, payload holds {}", bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    HsiCube::new(header.width, header.height, header.bands, data).map_err(|e| CliError::format(header_path, e.to_string()))
}

/// Writes `cube` as `header_path` plus its payload; values are stored as `f32`.
pub fn save_cube(header_path: &Path, cube: &HsiCube) -> CliResult<()> {
    let name = payload_name(header_path);
    let mut bytes = Vec::with_capacity(cube.data().len() * 4);
    for &v in cube.data() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let payload = header_path.parent().unwrap_or(Path::new(".")).join(&name);
    write_atomic(&payload, &bytes)?;
    write_json(
        header_path,
        &CubeHeader {
            width: cube.width(),
            height: cube.height(),
            bands: cube.bands(),
            dtype: "f32le".into(),
            payload: name,
        },
    )
}

/// Parses a whitespace-separated integer grid.
pub fn parse_grid(path: &Path, text: &str) -> CliResult<(usize, usize, Vec<i64>)> {
    let mut width = None;
    let mut values = Vec::new();
    let mut height = 0;
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::format(path, format!("line {}: {e}", line_no + 1)))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(CliError::format(
                    path,
                    format!("line {} has {} entries, expected {w}", line_no + 1, row.len()),
                ))
            }
            _ => {}
        }
        values.extend(row);
        height += 1;
    }
    let width = width.ok_or_else(|| CliError::format(path, "empty grid"))?;
    Ok((width, height, values))
}

fn labels_from_ids(path: &Path, width: usize, height: usize, ids: Vec<i64>) -> CliResult<LabelMap> {
    if let Some(v) = ids.iter().find(|&&v| v < 0) {
        return Err(CliError::format(path, format!("negative class id {v}")));
    }
    if let Some(v) = ids.iter().find(|&&v| v > i64::from(u16::MAX)) {
        return Err(CliError::format(path, format!("class id {v} exceeds 65535")));
    }
    let labels = ids.into_iter().map(|v| v as u16).collect();
    LabelMap::new(width, height, labels).map_err(|e| CliError::format(path, e.to_string()))
}

/// Loads a label map from a text grid or a PGM (`P2`/`P5`) image, chosen by
/// extension. When `cube` is given, dimensions must agree.
pub fn load_labels(path: &Path, cube: Option<&HsiCube>) -> CliResult<LabelMap> {
    let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let labels = if is_pgm {
        let (w, h, ids) = read_pgm(path)?;
        labels_from_ids(path, w, h, ids)?
    } else {
        let (w, h, ids) = parse_grid(path, &read_text(path)?)?;
        labels_from_ids(path, w, h, ids)?
    };
    if labels.is_empty() {
        log::warn!("{}: no labeled pixels", path.display());
    }
    if let Some(c) = cube {
        labels.check_matches(c).map_err(|e| CliError::format(path, e.to_string()))?;
    }
    Ok(labels)
}

pub fn grid_text(width: usize, values: &[impl std::fmt::Display]) -> String {
    let mut s = String::new();
    for row in values.chunks(width.max(1)) {
        let mut first = true;
        for v in row {
            if !first {
                s.push(' ');
            }
            first = false;
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

pub fn save_labels_txt(path: &Path, width: usize, labels: &[u16]) -> CliResult<()> {
    write_atomic(path, grid_text(width, labels).as_bytes())
}

/// 16-bit binary PGM (`P5`, maxval 65535, big-endian samples).
pub fn save_labels_pgm(path: &Path, labels: &LabelMap) -> CliResult<()> {
    let mut bytes = format!("P5\n{} {}\n65535\n", labels.width(), labels.height()).into_bytes();
    for &l in labels.labels() {
        bytes.extend_from_slice(&l.to_be_bytes());
    }
    write_atomic(path, &bytes)
}

/// Splits a netpbm header into `count` tokens, skipping comments, and
/// returns them with the offset of the first payload byte.
fn netpbm_header(path: &Path, bytes: &[u8], count: usize) -> CliResult<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(CliError::format(path, "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // Exactly one whitespace byte separates the header from binary data.
    Ok((tokens, i + 1))
}

fn header_number(path: &Path, token: &str) -> CliResult<usize> {
    token
        .parse()
        .map_err(|_| CliError::format(path, format!("bad header field {token:?}")))
}

pub fn read_pgm(path: &Path) -> CliResult<(usize, usize, Vec<i64>)> {
    let bytes = read_bytes(path)?;
    let (tokens, offset) = netpbm_header(path, &bytes, 4)?;
    let w = header_number(path, &tokens[1])?;
    let h = header_number(path, &tokens[2])?;
    let maxval = header_number(path, &tokens[3])?;
    match tokens[0].as_str() {
        "P2" => {
            let text = String::from_utf8_lossy(&bytes[offset.min(bytes.len())..]);
            let ids: Vec<i64> = text
                .split_whitespace()
                .map(|t| t.parse())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::format(path, "bad sample"))?;
            if ids.len() != w * h {
                return Err(CliError::format(path, "sample count does not match dimensions"));
            }
            Ok((w, h, ids))
        }
        "P5" => {
            let wide = maxval > 255;
            let need = w * h * if wide { 2 } else { 1 };
            let data = &bytes[offset.min(bytes.len())..];
            if data.len() != need {
                return Err(CliError::format(path, "payload length mismatch"));
            }
            let ids = if wide {
                data.chunks_exact(2).map(|c| i64::from(u16::from_be_bytes([c[0], c[1]]))).collect()
            } else {
                data.iter().map(|&b| i64::from(b)).collect()
            };
            Ok((w, h, ids))
        }
        other => Err(CliError::format(path, format!("unsupported PGM magic {other:?}"))),
    }
}

pub fn ppm_bytes(width: usize, height: usize, pixels: &[[u8; 3]]) -> Vec<u8> {
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    for p in pixels {
        bytes.extend_from_slice(p);
    }
    bytes
}

pub fn read_ppm(path: &Path) -> CliResult<(usize, usize, Vec<[u8; 3]>)> {
    let bytes = read_bytes(path)?;
    let (tokens, offset) = netpbm_header(path, &bytes, 4)?;
    if tokens[0] != "P6" || tokens[3] != "255" {
        return Err(CliError::format(path, "expected an 8-bit P6 image"));
    }
    let w = header_number(path, &tokens[1])?;
    let h = header_number(path, &tokens[2])?;
    let data = &bytes[offset.min(bytes.len())..];
    if data.len() != w * h * 3 {
        return Err(CliError::format(path, "payload length mismatch"));
    }
    Ok((w, h, data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()))
}

/// Colour-maps a label image; class 0 is drawn black.
pub fn render_map(pred: &[u16], palette: &[[u8; 3]]) -> Result<Vec<[u8; 3]>, String> {
    pred.iter()
        .map(|&c| {
            if c == 0 {
                Ok([0, 0, 0])
            } else {
                palette
                    .get(c as usize)
                    .copied()
                    .ok_or_else(|| format!("missing palette entry for class {c}"))
            }
        })
        .collect()
}

/// Writes the classification map as a P6 image. `palette[c]` is the colour
/// of class `c`; index 0 is unused.
pub fn export_map(path: &Path, width: usize, height: usize, pred: &[u16], palette: &[[u8; 3]]) -> CliResult<()> {
    let pixels = render_map(pred, palette).map_err(|m| CliError::format(path, m))?;
    write_atomic(path, &ppm_bytes(width, height, &pixels))
}

/// Grey rendering of `band` with superpixel boundaries in red.
pub fn boundary_overlay(map: &SuperpixelMap, band: &[f64]) -> Vec<[u8; 3]> {
    let (lo, hi) = band
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (w, h) = (map.width, map.height);
    (0..w * h)
        .map(|p| {
            let (x, y) = (p % w, p / w);
            let a = map.assignment[p];
            let edge = (x + 1 < w && map.assignment[p + 1] != a) || (y + 1 < h && map.assignment[p + w] != a);
            if edge {
                [255, 0, 0]
            } else {
                let g = (((band[p] - lo) / span) * 255.0).round() as u8;
                [g, g, g]
            }
        })
        .collect()
}

pub fn partition_text(assign: &PartitionAssignment) -> String {
    let mut s = String::new();
    for (i, p) in assign.part.iter().enumerate() {
        let _ = writeln!(s, "{i} {p}");
    }
    s
}

/// Reads `node_id part_id` lines; every node must appear exactly once.
pub fn parse_partition(path: &Path, text: &str, nodes: usize) -> CliResult<PartitionAssignment> {
    let mut part = vec![usize::MAX; nodes];
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |t: Option<&str>| -> CliResult<usize> {
            t.and_then(|t| t.parse().ok())
                .ok_or_else(|| CliError::format(path, format!("line {}: expected `node_id part_id`", line_no + 1)))
        };
        let node = parse(it.next())?;
        let p = parse(it.next())?;
        if node >= nodes {
            return Err(CliError::format(path, format!("node {node} outside 0..{nodes}")));
        }
        if part[node] != usize::MAX {
            return Err(CliError::format(path, format!("node {node} listed twice")));
        }
        part[node] = p;
    }
    if let Some(missing) = part.iter().position(|&p| p == usize::MAX) {
        return Err(CliError::format(path, format!("node {missing} has no part")));
    }
    let c = part.iter().max().map_or(0, |m| m + 1);
    PartitionAssignment::from_parts(part, c).map_err(|e| CliError::format(path, e.to_string()))
}

/// `i j w` per undirected edge, `i < j`.
pub fn edge_list_text(graph: &SuperpixelGraph) -> String {
    let mut s = String::new();
    for (i, j, w) in graph.adjacency.edges() {
        let _ = writeln!(s, "{i} {j} {w}");
    }
    s
}

pub fn matrix_text(m: &Matrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        s.push_str(&grid_text(m.cols(), m.row(i)));
    }
    s
}

pub fn history_csv(history: &TrainHistory) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Usage(format!("history encoding: {e}"));
    w.write_record(["epoch", "loss", "train_acc", "val_oa"]).map_err(fail)?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    for e in &history.epochs {
        w.write_record([e.epoch.to_string(), e.mean_loss.to_string(), opt(e.train_acc), opt(e.val_oa)])
            .map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(format!("history encoding: {e}")))
}

/// Per-class accuracies followed by OA / AA / Kappa, in percent.
pub fn metrics_table(report: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<8} {:>9}", "Class", "Accuracy");
    for (i, acc) in report.per_class.iter().enumerate() {
        match acc {
            Some(a) => {
                let _ = writeln!(s, "{:<8} {:>9.2}", i + 1, a * 100.0);
            }
            None => {
                let _ = writeln!(s, "{:<8} {:>9}", i + 1, "-");
            }
        }
    }
    let _ = writeln!(s, "{:<8} {:>9.2}", "OA", report.oa * 100.0);
    let _ = writeln!(s, "{:<8} {:>9.2}", "AA", report.aa * 100.0);
    let _ = writeln!(s, "{:<8} {:>9.2}", "Kappa", report.kappa * 100.0);
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub report: MetricsReport,
    pub confusion: ConfusionMatrix,
}
