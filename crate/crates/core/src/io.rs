//! Text formats: OBJ and OFF meshes, NRIC files, coordinate constraints and per-face sidecars.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::generators::Shape;
use crate::mesh::{NricVector, SimplicialSurface, VertexPositions};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

/// Raw triangle soup as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub positions: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates the connectivity.
    pub fn into_shape(self) -> Result<Shape> {
        let surface = SimplicialSurface::new(self.positions.len(), self.faces)?;
        Ok(Shape {
            surface,
            positions: VertexPositions::new(self.positions),
        })
    }
}

/// OBJ subset: `v` and `f` records; `f` may use `i/t/n` forms and negative indices. Other
/// records are ignored. Faces with more than three corners are rejected.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut toks = raw.split('#').next().unwrap().split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = number(toks.next(), line, "x coordinate")?;
                let y = number(toks.next(), line, "y coordinate")?;
                let z = number(toks.next(), line, "z coordinate")?;
                positions.push(Vector3::new(x, y, z));
            }
            Some("f") => {
                let corners: Vec<&str> = toks.collect();
                if corners.len() != 3 {
                    return Err(parse_err(line, format!("only triangles are supported, face has {} corners", corners.len())));
                }
                let mut face = [0; 3];
                for (k, c) in corners.iter().enumerate() {
                    let idx: i64 = number(c.split('/').next(), line, "vertex index")?;
                    let resolved = match idx {
                        i if i > 0 => i - 1,
                        i if i < 0 => positions.len() as i64 + i,
                        _ => return Err(parse_err(line, "vertex index 0 is invalid")),
                    };
                    if resolved < 0 || resolved as usize >= positions.len() {
                        return Err(parse_err(line, format!("vertex index {idx} out of range")));
                    }
                    face[k] = resolved as usize;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Ok(TriangleMesh { positions, faces })
}

/// OFF with optional `#` comments; the counts may share the header line.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty());
    let (first_line, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(first_line, "missing OFF header"))?
        .trim();
    let (count_line, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| parse_err(first_line, "missing counts"))?
    } else {
        (first_line, rest)
    };
    let mut toks = counts.split_whitespace();
    let nv: usize = number(toks.next(), count_line, "vertex count")?;
    let nf: usize = number(toks.next(), count_line, "face count")?;
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| parse_err(count_line, "unexpected end of file in vertices"))?;
        let mut t = l.split_whitespace();
        let x = number(t.next(), line, "x coordinate")?;
        let y = number(t.next(), line, "y coordinate")?;
        let z = number(t.next(), line, "z coordinate")?;
        positions.push(Vector3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines.next().ok_or_else(|| parse_err(count_line, "unexpected end of file in faces"))?;
        let mut t = l.split_whitespace();
        let k: usize = number(t.next(), line, "corner count")?;
        if k != 3 {
            return Err(parse_err(line, format!("only triangles are supported, face has {k} corners")));
        }
        let mut face = [0; 3];
        for c in face.iter_mut() {
            *c = number(t.next(), line, "vertex index")?;
            if *c >= nv {
                return Err(parse_err(line, format!("vertex index {c} out of range")));
            }
        }
        faces.push(face);
    }
    Ok(TriangleMesh { positions, faces })
}

/// Reads `.obj` or `.off` by extension.
pub fn read_mesh(path: &Path) -> Result<Shape> {
    let text = fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let mesh = match ext.as_deref() {
        Some("obj") => parse_obj(&text)?,
        Some("off") => parse_off(&text)?,
        _ => return Err(Error::InvalidArgument(format!("unknown mesh format: {}", path.display()))),
    };
    mesh.into_shape()
}

pub fn obj_string(surface: &SimplicialSurface, positions: &VertexPositions) -> String {
    let mut out = String::new();
    for p in positions.as_slice() {
        writeln!(out, "v {:.17e} {:.17e} {:.17e}", p.x, p.y, p.z).unwrap();
    }
    for f in surface.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    out
}

pub fn write_obj(path: &Path, surface: &SimplicialSurface, positions: &VertexPositions) -> Result<()> {
    fs::write(path, obj_string(surface, positions))?;
    Ok(())
}

/// NRIC text: `NRIC <V> <E> <F>`, then per edge `<v0> <v1> <length> <angle|NA>` in edge order.
/// Values carry 17 significant digits so they read back bit-exactly.
pub fn nric_string(surface: &SimplicialSurface, z: &NricVector) -> String {
    let mut out = format!("NRIC {} {} {}\n", surface.vertex_count(), surface.edge_count(), surface.face_count());
    for (e, edge) in surface.edges().iter().enumerate() {
        let [a, b] = edge.vertices;
        let l = z.lengths()[e];
        match surface.angle_slot(e) {
            Some(s) => writeln!(out, "{a} {b} {:.16e} {:.16e}", l, z.angles()[s]).unwrap(),
            None => writeln!(out, "{a} {b} {l:.16e} NA").unwrap(),
        }
    }
    out
}

pub fn write_nric(path: &Path, surface: &SimplicialSurface, z: &NricVector) -> Result<()> {
    fs::write(path, nric_string(surface, z))?;
    Ok(())
}

/// Parsed NRIC file, not yet tied to a connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct NricRecords {
    pub vertex_count: usize,
    pub face_count: usize,
    /// `(v0, v1, length, angle)`; `None` for `NA`.
    pub edges: Vec<(usize, usize, f64, Option<f64>)>,
}

pub fn parse_nric(text: &str) -> Result<NricRecords> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut t = header.split_whitespace();
    if t.next() != Some("NRIC") {
        return Err(parse_err(hl, "missing NRIC header"));
    }
    let vertex_count = number(t.next(), hl, "vertex count")?;
    let edge_count: usize = number(t.next(), hl, "edge count")?;
    let face_count = number(t.next(), hl, "face count")?;
    let mut edges = Vec::with_capacity(edge_count);
    for (line, l) in lines {
        let mut t = l.split_whitespace();
        let a = number(t.next(), line, "vertex index")?;
        let b = number(t.next(), line, "vertex index")?;
        let len = number(t.next(), line, "length")?;
        let angle = match t.next() {
            Some("NA") => None,
            tok => Some(number(tok, line, "angle")?),
        };
        if t.next().is_some() {
            return Err(parse_err(line, "trailing tokens"));
        }
        edges.push((a, b, len, angle));
    }
    if edges.len() != edge_count {
        return Err(parse_err(hl, format!("header announces {edge_count} edges, file has {}", edges.len())));
    }
    Ok(NricRecords {
        vertex_count,
        face_count,
        edges,
    })
}

impl NricRecords {
    /// Matches records to the edges of `surface` by their vertex pair, in any order and either
    /// direction.
    pub fn to_nric(&self, surface: &SimplicialSurface) -> Result<NricVector> {
        let (nv, ne, nf) = (surface.vertex_count(), surface.edge_count(), surface.face_count());
        if (self.vertex_count, self.edges.len(), self.face_count) != (nv, ne, nf) {
            return Err(Error::InvalidArgument(format!(
                "NRIC counts ({}, {}, {}) do not match the mesh ({nv}, {ne}, {nf})",
                self.vertex_count,
                self.edges.len(),
                self.face_count
            )));
        }
        let lookup: HashMap<(usize, usize), usize> = surface
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| ((edge.vertices[0].min(edge.vertices[1]), edge.vertices[0].max(edge.vertices[1])), e))
            .collect();
        let mut lengths = vec![f64::NAN; ne];
        let mut angles = vec![f64::NAN; surface.interior_edge_count()];
        for (i, &(a, b, l, theta)) in self.edges.iter().enumerate() {
            let record = i + 2;
            let e = *lookup
                .get(&(a.min(b), a.max(b)))
                .ok_or_else(|| parse_err(record, format!("({a}, {b}) is not an edge of the mesh")))?;
            if !lengths[e].is_nan() {
                return Err(parse_err(record, format!("edge ({a}, {b}) listed twice")));
            }
            lengths[e] = l;
            match (surface.angle_slot(e), theta) {
                (Some(s), Some(t)) => angles[s] = t,
                (None, None) => {}
                (Some(_), None) => return Err(parse_err(record, format!("interior edge ({a}, {b}) has no angle"))),
                (None, Some(_)) => return Err(parse_err(record, format!("boundary edge ({a}, {b}) carries an angle"))),
            }
        }
        Ok(NricVector::new(lengths, angles))
    }
}

pub fn read_nric(path: &Path, surface: &SimplicialSurface) -> Result<NricVector> {
    parse_nric(&fs::read_to_string(path)?)?.to_nric(surface)
}

/// Fixed coordinates from a constraint file: `L <edge> <value>`, `A <edge> <value>`, and `L*` /
/// `A*` to fix every length / angle at its starting value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSpec {
    pub all_lengths: bool,
    pub all_angles: bool,
    pub lengths: Vec<(usize, f64)>,
    pub angles: Vec<(usize, f64)>,
}

pub fn parse_constraints(text: &str) -> Result<ConstraintSpec> {
    let mut spec = ConstraintSpec::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut t = raw.split('#').next().unwrap().split_whitespace();
        let Some(kind) = t.next() else { continue };
        match kind {
            "L*" => spec.all_lengths = true,
            "A*" => spec.all_angles = true,
            "L" | "A" => {
                let e = number(t.next(), line, "edge index")?;
                let v: f64 = number(t.next(), line, "value")?;
                if !v.is_finite() {
                    return Err(parse_err(line, "value must be finite"));
                }
                if kind == "L" { &mut spec.lengths } else { &mut spec.angles }.push((e, v));
            }
            other => return Err(parse_err(line, format!("unknown constraint `{other}`"))),
        }
        if t.next().is_some() {
            return Err(parse_err(line, "trailing tokens"));
        }
    }
    Ok(spec)
}

pub fn read_constraints(path: &Path) -> Result<ConstraintSpec> {
    parse_constraints(&fs::read_to_string(path)?)
}

impl ConstraintSpec {
    pub fn is_empty(&self) -> bool {
        !self.all_lengths && !self.all_angles && self.lengths.is_empty() && self.angles.is_empty()
    }

    /// Writes the prescribed values into `z` and returns the fixed mask. Out-of-range edges,
    /// angles on boundary edges and one coordinate given two different values are rejected.
    pub fn apply(&self, surface: &SimplicialSurface, z: &mut [f64]) -> Result<Vec<bool>> {
        let ne = surface.edge_count();
        if z.len() != surface.nric_dim() {
            return Err(Error::DimensionMismatch {
                expected: surface.nric_dim(),
                actual: z.len(),
            });
        }
        let mut fixed = vec![false; z.len()];
        if self.all_lengths {
            fixed[..ne].fill(true);
        }
        if self.all_angles {
            fixed[ne..].fill(true);
        }
        let mut seen: HashMap<usize, f64> = HashMap::new();
        let entries = self.lengths.iter().map(|&(e, v)| (e, v, false)).chain(self.angles.iter().map(|&(e, v)| (e, v, true)));
        for (e, v, is_angle) in entries {
            if e >= ne {
                return Err(Error::InvalidArgument(format!("edge {e} out of range (mesh has {ne} edges)")));
            }
            let idx = if is_angle {
                surface
                    .angle_index(e)
                    .ok_or_else(|| Error::InvalidArgument(format!("edge {e} is a boundary edge and has no angle")))?
            } else {
                surface.length_index(e)
            };
            if let Some(&prev) = seen.get(&idx) {
                if prev != v {
                    let what = if is_angle { "angle" } else { "length" };
                    return Err(Error::InvalidArgument(format!("contradictory values {prev} and {v} for the {what} of edge {e}")));
                }
            }
            seen.insert(idx, v);
            z[idx] = v;
            fixed[idx] = true;
        }
        Ok(fixed)
    }
}

/// One integer per face, one per line, after a `# <name>` comment line.
pub fn face_attribute_string(name: &str, values: &[usize]) -> String {
    let mut out = format!("# {name}\n");
    for v in values {
        writeln!(out, "{v}").unwrap();
    }
    out
}

pub fn write_face_attribute(path: &Path, name: &str, values: &[usize]) -> Result<()> {
    fs::write(path, face_attribute_string(name, values))?;
    Ok(())
}

pub fn parse_face_attribute(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(line, l)| number(Some(l), line, "face value"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::nric_from_positions;
    use crate::generators;

    #[test]
    fn obj_round_trip_is_bit_exact() {
        let s = generators::icosphere(1, 1.3);
        let text = obj_string(&s.surface, &s.positions);
        let back = parse_obj(&text).unwrap().into_shape().unwrap();
        assert_eq!(back.surface.faces(), s.surface.faces());
        assert_eq!(back.positions.as_slice(), s.positions.as_slice());
    }

    #[test]
    fn obj_accepts_slashes_negative_indices_and_comments() {
        let text = "# c\nv 0 0 0\nv 1 0 0\nvn 0 0 1\nv 0 1 0 # apex\nf 1/1/1 2//1 -1\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
        assert_eq!(m.positions[2], Vector3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn obj_rejects_quads_and_bad_indices() {
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(parse_obj(quad), Err(Error::Parse { line: 5, .. })));
        assert!(matches!(parse_obj("v 0 0 0\nf 1 2 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_obj("v 0 x 0\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn off_with_counts_on_header_line() {
        let a = "OFF\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n";
        let b = "OFF 4 2 0\n# comment\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2 255 0 0\n3 0 2 3\n";
        let (ma, mb) = (parse_off(a).unwrap(), parse_off(b).unwrap());
        assert_eq!(ma, mb);
        assert_eq!(ma.faces.len(), 2);
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 0\n").is_err());
        assert!(parse_off("PLY\n").is_err());
    }

    #[test]
    fn torus_is_rejected_on_load() {
        let (nv, faces) = generators::torus_faces(6, 4);
        let mut text = String::new();
        for i in 0..nv {
            writeln!(text, "v {} {} 0", i, i * i).unwrap();
        }
        for f in faces {
            writeln!(text, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
        }
        assert!(matches!(parse_obj(&text).unwrap().into_shape(), Err(Error::Topology(_))));
    }

    #[test]
    fn nric_round_trip_is_bit_exact() {
        let s = generators::bumpy_plate(4);
        let z = nric_from_positions(&s.surface, &s.positions).unwrap();
        let text = nric_string(&s.surface, &z);
        assert!(text.starts_with(&format!("NRIC {} {} {}\n", s.surface.vertex_count(), s.surface.edge_count(), s.surface.face_count())));
        assert!(text.contains(" NA\n"));
        let back = parse_nric(&text).unwrap().to_nric(&s.surface).unwrap();
        assert_eq!(back.as_slice(), z.as_slice());
    }

    #[test]
    fn nric_lines_may_be_permuted_and_reversed() {
        let s = generators::tetrahedron();
        let z = nric_from_positions(&s.surface, &s.positions).unwrap();
        let text = nric_string(&s.surface, &z);
        let mut lines: Vec<&str> = text.lines().collect();
        let header = lines.remove(0);
        lines.reverse();
        let swapped: Vec<String> = lines
            .iter()
            .map(|l| {
                let t: Vec<&str> = l.split_whitespace().collect();
                format!("{} {} {} {}", t[1], t[0], t[2], t[3])
            })
            .collect();
        let permuted = format!("{header}\n{}\n", swapped.join("\n"));
        let back = parse_nric(&permuted).unwrap().to_nric(&s.surface).unwrap();
        assert_eq!(back.as_slice(), z.as_slice());
    }

    #[test]
    fn nric_mismatches_are_rejected() {
        let s = generators::tetrahedron();
        let z = nric_from_positions(&s.surface, &s.positions).unwrap();
        let text = nric_string(&s.surface, &z);
        let other = generators::icosahedron();
        assert!(parse_nric(&text).unwrap().to_nric(&other.surface).is_err());
        let na = text.replacen(text.lines().nth(1).unwrap().rsplit(' ').next().unwrap(), "NA", 1);
        assert!(parse_nric(&na).unwrap().to_nric(&s.surface).is_err());
        assert!(matches!(parse_nric("NRIC 4 6 4\n0 1 1.0 0.5\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_nric("MESH 4 6 4\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn constraint_file_parses_all_forms() {
        let spec = parse_constraints("# folds\nL* \nA 3 1.5707963267948966\nL 2 0.5\n\nA 7 -0.25 # inward\n").unwrap();
        assert!(spec.all_lengths && !spec.all_angles);
        assert_eq!(spec.angles, vec![(3, std::f64::consts::FRAC_PI_2), (7, -0.25)]);
        assert_eq!(spec.lengths, vec![(2, 0.5)]);
        assert!(matches!(parse_constraints("A 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_constraints("X 1 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_constraints("").unwrap().is_empty());
    }

    #[test]
    fn constraints_apply_and_reject_contradictions() {
        let s = generators::grid(2, 2, 1.0, 1.0);
        let z0 = nric_from_positions(&s.surface, &s.positions).unwrap().into_vec();
        let interior = s.surface.interior_edges()[0];
        let boundary = (0..s.surface.edge_count()).find(|&e| s.surface.angle_slot(e).is_none()).unwrap();
        let mut z = z0.clone();
        let spec = parse_constraints(&format!("L*\nA {interior} 0.7\n")).unwrap();
        let fixed = spec.apply(&s.surface, &mut z).unwrap();
        let ai = s.surface.angle_index(interior).unwrap();
        assert_eq!(z[ai], 0.7);
        assert_eq!(fixed.iter().filter(|&&f| f).count(), s.surface.edge_count() + 1);
        let bad = [
            format!("A {boundary} 0.1\n"),
            format!("L {} 1.0\n", s.surface.edge_count()),
            format!("A {interior} 0.1\nA {interior} 0.2\n"),
        ];
        for text in bad {
            let mut z = z0.clone();
            assert!(matches!(parse_constraints(&text).unwrap().apply(&s.surface, &mut z), Err(Error::InvalidArgument(_))), "{text}");
        }
        let mut z = z0.clone();
        parse_constraints(&format!("A {interior} 0.1\nA {interior} 0.1\n")).unwrap().apply(&s.surface, &mut z).unwrap();
    }

    #[test]
    fn face_attribute_round_trip() {
        let text = face_attribute_string("traversal order", &[2, 0, 1]);
        assert_eq!(text, "# traversal order\n2\n0\n1\n");
        assert_eq!(parse_face_attribute(&text).unwrap(), vec![2, 0, 1]);
    }
}
