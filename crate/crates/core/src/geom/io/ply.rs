//! ASCII PLY 1.0 point clouds. Coordinates are written as `double` using the
//! shortest round-trip decimal form, so finite values survive exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::PointCloud;

pub fn encode(cloud: &PointCloud) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", cloud.len());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    if cloud.normals().is_some() {
        s.push_str("property double nx\nproperty double ny\nproperty double nz\n");
    }
    if cloud.view_id().is_some() {
        s.push_str("property int view_id\n");
    }
    s.push_str("end_header\n");
    for (i, p) in cloud.points().iter().enumerate() {
        let _ = write!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
        if let Some(n) = cloud.normals() {
            let _ = write!(s, " {:?} {:?} {:?}", n[i][0], n[i][1], n[i][2]);
        }
        if let Some(v) = cloud.view_id() {
            let _ = write!(s, " {}", v[i]);
        }
        s.push('\n');
    }
    s
}

pub fn decode(text: &str) -> Result<PointCloud> {
    let mut offset = 0usize;
    let mut lines = text.split_inclusive('\n').map(|l| {
        let start = offset;
        offset += l.len();
        (start, l.trim_end_matches(['\n', '\r']))
    });

    let mut next = |what: &str| lines.next().ok_or_else(|| Error::parse(text.len(), format!("unexpected EOF, expected {what}")));
    let (off, magic) = next("magic")?;
    if magic.trim() != "ply" {
        return Err(Error::parse(off, "missing 'ply' magic"));
    }
    let mut count: Option<usize> = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    loop {
        let (off, line) = next("end_header")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", "1.0"] => {}
            ["format", ..] => return Err(Error::parse(off, format!("unsupported format line {line:?}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse().map_err(|_| Error::parse(off, format!("bad vertex count {n:?}")))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", "list", ..] if in_vertex => {
                return Err(Error::parse(off, "list properties on vertices are not supported"))
            }
            ["property", "list", ..] => {}
            ["property", _ty, name] => {
                if in_vertex {
                    props.push(name.to_string());
                }
            }
            _ => return Err(Error::parse(off, format!("unrecognised header line {line:?}"))),
        }
    }
    let count = count.ok_or_else(|| Error::parse(0, "no vertex element"))?;
    let col = |name: &str| props.iter().position(|p| p == name);
    let (Some(ix), Some(iy), Some(iz)) = (col("x"), col("y"), col("z")) else {
        return Err(Error::parse(0, "vertex element lacks x/y/z"));
    };
    let normal_cols = match (col("nx"), col("ny"), col("nz")) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };
    let view_col = col("view_id");

    let mut points = Vec::with_capacity(count);
    let mut normals = normal_cols.map(|_| Vec::with_capacity(count));
    let mut views = view_col.map(|_| Vec::with_capacity(count));
    for _ in 0..count {
        let (off, line) = next("vertex")?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() < props.len() {
            return Err(Error::parse(off, format!("vertex line has {} values, expected {}", vals.len(), props.len())));
        }
        let num = |i: usize| -> Result<f64> {
            vals[i].parse().map_err(|_| Error::parse(off, format!("bad number {:?}", vals[i])))
        };
        points.push([num(ix)?, num(iy)?, num(iz)?]);
        if let (Some(cols), Some(out)) = (normal_cols, normals.as_mut()) {
            out.push([num(cols[0])?, num(cols[1])?, num(cols[2])?]);
        }
        if let (Some(c), Some(out)) = (view_col, views.as_mut()) {
            out.push(vals[c].parse().map_err(|_| Error::parse(off, format!("bad view id {:?}", vals[c])))?);
        }
    }
    PointCloud::new(points, normals, views)
}

pub fn read(path: impl AsRef<Path>) -> Result<PointCloud> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::parse(e.utf8_error().valid_up_to(), "PLY is not UTF-8"))?;
    decode(&text)
}

pub fn write(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    std::fs::write(path, encode(cloud))?;
    Ok(())
}
