//! OFF, xyz and ascii PLY readers plus mesh surface sampling.

use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotinv::geom::{Point3, PointCloud};
use rotinv::{Cloud64, Error, Point64, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point64>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * (b - a).cross(c - a).norm()
    }
}

/// Non-blank lines with `#` comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn number<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("expected {what}, found `{token}`")))
}

fn point(tokens: &[&str], line: usize) -> Result<Point64> {
    if tokens.len() < 3 {
        return Err(Error::parse(line, "expected three coordinates"));
    }
    let x = number(tokens[0], line, "a number")?;
    let y = number(tokens[1], line, "a number")?;
    let z = number(tokens[2], line, "a number")?;
    let p = Point3::new(x, y, z);
    if !p.is_finite() {
        return Err(Error::parse(line, "non-finite coordinate"));
    }
    Ok(p)
}

/// Parses OFF text; polygons are split into triangle fans.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or(Error::EmptyInput)?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| Error::parse(line, "missing `OFF` header"))?
        .trim();
    let (counts_line, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| Error::parse(line, "missing counts line"))?
    } else {
        (line, rest)
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| number(t, counts_line, "a count"))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(Error::parse(counts_line, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, text) = lines
            .next()
            .ok_or_else(|| Error::parse(counts_line, "fewer vertices than declared"))?;
        vertices.push(point(&text.split_whitespace().collect::<Vec<_>>(), l)?);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, text) = lines
            .next()
            .ok_or_else(|| Error::parse(counts_line, "fewer faces than declared"))?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let arity: usize = number(tokens[0], l, "a vertex count")?;
        if arity < 3 || tokens.len() < arity + 1 {
            return Err(Error::parse(
                l,
                format!("face needs at least 3 and declares {arity} vertices"),
            ));
        }
        let idx = tokens[1..=arity]
            .iter()
            .map(|t| {
                let i: usize = number(t, l, "a vertex index")?;
                if i >= nv {
                    return Err(Error::parse(l, format!("vertex index {i} out of range (have {nv})")));
                }
                Ok(i)
            })
            .collect::<Result<Vec<_>>>()?;
        for w in 1..arity - 1 {
            triangles.push([idx[0], idx[w], idx[w + 1]]);
        }
    }
    Ok(TriangleMesh { vertices, triangles })
}

pub fn load_off(path: &Path) -> Result<TriangleMesh> {
    parse_off(&fs::read_to_string(path)?)
}

/// `n` points drawn uniformly over the surface area.
pub fn sample_mesh_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<Cloud64> {
    let areas: Vec<f64> = (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).collect();
    let choose = WeightedIndex::new(&areas).map_err(|_| Error::invalid("mesh has no surface area"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let [a, b, c] = mesh.triangles[choose.sample(&mut rng)].map(|i| mesh.vertices[i]);
            let r1: f64 = rng.random::<f64>().sqrt();
            let r2: f64 = rng.random();
            a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)
        })
        .collect();
    Ok(PointCloud::new(points))
}

/// One point per line; columns beyond the third are ignored.
pub fn parse_xyz(text: &str) -> Result<Cloud64> {
    let points = content_lines(text)
        .map(|(l, line)| point(&line.split_whitespace().collect::<Vec<_>>(), l))
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(PointCloud::new(points))
}

pub fn load_xyz(path: &Path) -> Result<Cloud64> {
    parse_xyz(&fs::read_to_string(path)?)
}

pub fn format_xyz(cloud: &Cloud64) -> String {
    cloud
        .points
        .iter()
        .map(|p| format!("{:.17e} {:.17e} {:.17e}\n", p.x, p.y, p.z))
        .collect()
}

/// Vertex x/y/z of an ascii PLY; other properties and elements are skipped.
pub fn parse_ply_ascii(text: &str) -> Result<Cloud64> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        Some((l, _)) => return Err(Error::parse(l, "missing `ply` magic")),
        None => return Err(Error::EmptyInput),
    }
    // (element name, count, property names) in header order.
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    let mut ascii = false;
    let mut body_start = None;
    for (l, line) in lines.by_ref() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => ascii = true,
            ["format", ..] => return Err(Error::parse(l, "only ascii PLY is supported")),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push((name.to_string(), number(count, l, "a count")?, Vec::new())),
            ["property", "list", _, _, name] | ["property", _, name] => match elements.last_mut() {
                Some(e) => e.2.push(name.to_string()),
                None => return Err(Error::parse(l, "property before any element")),
            },
            ["end_header"] => {
                body_start = Some(l);
                break;
            }
            _ => return Err(Error::parse(l, format!("unrecognized header line `{line}`"))),
        }
    }
    let header_end = body_start.ok_or_else(|| Error::parse(0, "missing `end_header`"))?;
    if !ascii {
        return Err(Error::parse(header_end, "missing ascii format line"));
    }
    let mut points = Vec::new();
    let mut body = lines.filter(|(_, l)| !l.is_empty());
    for (name, count, props) in &elements {
        if name != "vertex" {
            for _ in 0..*count {
                body.next()
                    .ok_or_else(|| Error::parse(header_end, format!("truncated `{name}` element")))?;
            }
            continue;
        }
        let col = |axis: &str| {
            props
                .iter()
                .position(|p| p == axis)
                .ok_or_else(|| Error::parse(header_end, format!("vertex element lacks `{axis}`")))
        };
        let (ix, iy, iz) = (col("x")?, col("y")?, col("z")?);
        for _ in 0..*count {
            let (l, line) = body
                .next()
                .ok_or_else(|| Error::parse(header_end, "fewer vertices than declared"))?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() < props.len() {
                return Err(Error::parse(l, "vertex line has fewer values than properties"));
            }
            points.push(point(&[tokens[ix], tokens[iy], tokens[iz]], l)?);
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(PointCloud::new(points))
}

pub fn load_ply_ascii(path: &Path) -> Result<Cloud64> {
    parse_ply_ascii(&fs::read_to_string(path)?)
}

/// Loads a cloud from `.xyz`, `.ply` or `.off` (sampling `n` surface points).
pub fn load_cloud(path: &Path, n: usize, seed: u64) -> Result<Cloud64> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("xyz") | Some("txt") => load_xyz(path),
        Some("ply") => load_ply_ascii(path),
        Some("off") => sample_mesh_surface(&load_off(path)?, n, seed),
        _ => Err(Error::invalid(format!("unsupported file type: {}", path.display()))),
    }
}
