//! Mesh and report file I/O.
//!
//! Meshes are exchanged as MEDIT `.mesh` ASCII (primary) or VTK legacy
//! ASCII unstructured grids with cell type 10 (secondary). Coordinates are
//! written with 17 significant digits, so a write/read round trip restores
//! every `f64` bit-exactly. Reports are a single versioned JSON document
//! holding the quality metrics and the run trace.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::mesh::TetMesh;
use crate::pipeline::RunTrace;
use crate::quality::QualityReport;
use crate::Point3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Medit,
    Vtk,
}

impl FromStr for MeshFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "medit" | "mesh" => Ok(MeshFormat::Medit),
            "vtk" => Ok(MeshFormat::Vtk),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

impl MeshFormat {
    /// Guesses the format from a file extension, defaulting to MEDIT.
    pub fn from_path(path: &Path) -> MeshFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("vtk") => MeshFormat::Vtk,
            _ => MeshFormat::Medit,
        }
    }
}

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a mesh to MEDIT ASCII. Boundary triangles carry reference 1;
/// vertices and tets carry reference 0.
pub fn medit_string(mesh: &TetMesh) -> String {
    let (positions, tets, tris) = mesh.compact();
    let mut s = String::new();
    s.push_str("MeshVersionFormatted 2\n");
    s.push_str("Dimension 3\n");
    let _ = writeln!(s, "Vertices {}", positions.len());
    for p in &positions {
        let _ = writeln!(s, "{} {} {} 0", fmt_real(p.x), fmt_real(p.y), fmt_real(p.z));
    }
    let _ = writeln!(s, "Triangles {}", tris.len());
    for t in &tris {
        let _ = writeln!(s, "{} {} {} 1", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    let _ = writeln!(s, "Tetrahedra {}", tets.len());
    for t in &tets {
        let _ = writeln!(s, "{} {} {} {} 0", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
    }
    s.push_str("End\n");
    s
}

struct Tokens<'a> {
    iter: std::iter::Peekable<std::vec::IntoIter<(usize, &'a str)>>,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut toks = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            // MEDIT comments start with '#'.
            let body = line.split('#').next().unwrap_or("");
            for tok in body.split_whitespace() {
                toks.push((ln + 1, tok));
            }
        }
        Tokens {
            iter: toks.into_iter().peekable(),
            last_line: 1,
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.iter.next();
        if let Some((ln, _)) = t {
            self.last_line = ln;
        }
        t
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), Error> {
        self.next().ok_or_else(|| Error::Parse {
            line: self.last_line,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn parse<T: FromStr>(&mut self, what: &str) -> Result<T, Error> {
        let (line, tok) = self.expect(what)?;
        tok.parse::<T>().map_err(|_| Error::Parse {
            line,
            message: format!("expected {what}, found {tok:?}"),
        })
    }
}

/// Parses MEDIT ASCII. Boundary flags are rederived from face multiplicity,
/// so the Triangles section is read and discarded.
pub fn parse_medit(text: &str) -> Result<TetMesh, Error> {
    let mut toks = Tokens::new(text);
    let mut positions: Vec<Point3> = Vec::new();
    let mut tets: Vec<[usize; 4]> = Vec::new();
    let mut saw_end = false;
    while let Some((line, keyword)) = toks.next() {
        match keyword {
            "MeshVersionFormatted" => {
                let _version: i64 = toks.parse("format version")?;
            }
            "Dimension" => {
                let dim: usize = toks.parse("dimension")?;
                if dim != 3 {
                    return Err(Error::Parse {
                        line,
                        message: format!("unsupported dimension {dim}"),
                    });
                }
            }
            "Vertices" => {
                let n: usize = toks.parse("vertex count")?;
                positions.reserve(n);
                for _ in 0..n {
                    let x: f64 = toks.parse("x coordinate")?;
                    let y: f64 = toks.parse("y coordinate")?;
                    let z: f64 = toks.parse("z coordinate")?;
                    let _reference: i64 = toks.parse("vertex reference")?;
                    positions.push(Point3::new(x, y, z));
                }
            }
            "Triangles" => {
                let n: usize = toks.parse("triangle count")?;
                for _ in 0..n {
                    for what in ["i", "j", "k", "reference"] {
                        let _: i64 = toks.parse(what)?;
                    }
                }
            }
            "Tetrahedra" => {
                let n: usize = toks.parse("tet count")?;
                tets.reserve(n);
                for _ in 0..n {
                    let mut q = [0usize; 4];
                    for slot in &mut q {
                        let idx: usize = toks.parse("vertex index")?;
                        if idx == 0 || idx > positions.len() {
                            return Err(Error::Parse {
                                line: toks.last_line,
                                message: format!("vertex index {idx} out of range"),
                            });
                        }
                        *slot = idx - 1;
                    }
                    let _reference: i64 = toks.parse("tet reference")?;
                    tets.push(q);
                }
            }
            "End" => {
                saw_end = true;
                break;
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown keyword {other:?}"),
                })
            }
        }
    }
    if !saw_end {
        return Err(Error::Parse {
            line: toks.last_line,
            message: "missing End keyword".into(),
        });
    }
    TetMesh::from_parts(positions, tets)
}

/// Serializes a mesh as a VTK legacy ASCII unstructured grid (cell type 10).
pub fn vtk_string(mesh: &TetMesh) -> String {
    let (positions, tets, _) = mesh.compact();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 2.0\n");
    s.push_str("tetrahedral mesh\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", positions.len());
    for p in &positions {
        let _ = writeln!(s, "{} {} {}", fmt_real(p.x), fmt_real(p.y), fmt_real(p.z));
    }
    let _ = writeln!(s, "CELLS {} {}", tets.len(), tets.len() * 5);
    for t in &tets {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", tets.len());
    for _ in &tets {
        s.push_str("10\n");
    }
    s
}

/// Parses a VTK legacy ASCII unstructured grid containing tets only.
pub fn parse_vtk(text: &str) -> Result<TetMesh, Error> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, line)) if line.starts_with("# vtk DataFile") => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "not a VTK legacy file".into(),
            })
        }
    }
    let _title = lines.next();
    for expect in ["ASCII", "DATASET UNSTRUCTURED_GRID"] {
        match lines.next() {
            Some((_, line)) if line.trim().eq_ignore_ascii_case(expect) => {}
            Some((ln, line)) => {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: format!("expected {expect:?}, found {line:?}"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("missing header line {expect:?}"),
                })
            }
        }
    }

    let mut toks = Tokens::new(text);
    // Skip forward to the POINTS keyword in token space.
    loop {
        let (line, tok) = toks.expect("POINTS")?;
        if tok == "POINTS" {
            let _ = line;
            break;
        }
    }
    let n: usize = toks.parse("point count")?;
    let _dtype = toks.expect("point data type")?;
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = toks.parse("x coordinate")?;
        let y: f64 = toks.parse("y coordinate")?;
        let z: f64 = toks.parse("z coordinate")?;
        positions.push(Point3::new(x, y, z));
    }
    let (_, kw) = toks.expect("CELLS")?;
    if kw != "CELLS" {
        return Err(Error::Parse {
            line: toks.last_line,
            message: format!("expected CELLS, found {kw:?}"),
        });
    }
    let m: usize = toks.parse("cell count")?;
    let _total: usize = toks.parse("cell index total")?;
    let mut tets = Vec::with_capacity(m);
    for _ in 0..m {
        let k: usize = toks.parse("cell arity")?;
        if k != 4 {
            return Err(Error::Parse {
                line: toks.last_line,
                message: format!("only tetrahedral cells supported, found arity {k}"),
            });
        }
        let mut q = [0usize; 4];
        for slot in &mut q {
            let idx: usize = toks.parse("vertex index")?;
            if idx >= positions.len() {
                return Err(Error::Parse {
                    line: toks.last_line,
                    message: format!("vertex index {idx} out of range"),
                });
            }
            *slot = idx;
        }
        tets.push(q);
    }
    let (_, kw) = toks.expect("CELL_TYPES")?;
    if kw != "CELL_TYPES" {
        return Err(Error::Parse {
            line: toks.last_line,
            message: format!("expected CELL_TYPES, found {kw:?}"),
        });
    }
    let mt: usize = toks.parse("cell type count")?;
    for _ in 0..mt {
        let ty: usize = toks.parse("cell type")?;
        if ty != 10 {
            return Err(Error::Parse {
                line: toks.last_line,
                message: format!("unsupported cell type {ty}"),
            });
        }
    }
    TetMesh::from_parts(positions, tets)
}

pub fn write_mesh(mesh: &TetMesh, path: &Path, format: MeshFormat) -> Result<(), Error> {
    let text = match format {
        MeshFormat::Medit => medit_string(mesh),
        MeshFormat::Vtk => vtk_string(mesh),
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_mesh(path: &Path, format: MeshFormat) -> Result<TetMesh, Error> {
    let text = std::fs::read_to_string(path)?;
    match format {
        MeshFormat::Medit => parse_medit(&text),
        MeshFormat::Vtk => parse_vtk(&text),
    }
}

/// The versioned report document: quality metrics plus the run trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub schema_version: u32,
    pub quality: QualityReport,
    pub trace: RunTrace,
}

impl ReportDoc {
    pub fn new(quality: QualityReport, trace: RunTrace) -> Self {
        Self {
            schema_version: 1,
            quality,
            trace,
        }
    }
}

pub fn report_string(doc: &ReportDoc) -> String {
    serde_json::to_string_pretty(doc).expect("report serializes") + "\n"
}

pub fn write_report(doc: &ReportDoc, path: &Path) -> Result<(), Error> {
    std::fs::write(path, report_string(doc))?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ReportDoc, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    #[test]
    fn medit_round_trip_is_bit_exact() {
        let mesh = samples::cube_grid_mesh(2);
        let text = medit_string(&mesh);
        let back = parse_medit(&text).unwrap();
        assert_eq!(mesh.topology_hash(), back.topology_hash());
        // Byte-identical re-serialization.
        assert_eq!(text, medit_string(&back));
    }

    #[test]
    fn medit_missing_end_is_parse_error() {
        let mesh = samples::octahedron_mesh();
        let text = medit_string(&mesh).replace("End\n", "");
        match parse_medit(&text) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("End")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn medit_reports_line_numbers() {
        let text = "MeshVersionFormatted 2\nDimension 3\nVertices 1\n0.0 bad 0.0 0\nEnd\n";
        match parse_medit(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn vtk_cross_format_preserves_topology() {
        let mesh = samples::cube_grid_mesh(2);
        let vtk = vtk_string(&mesh);
        let from_vtk = parse_vtk(&vtk).unwrap();
        // Convert through the MEDIT path and compare topology hashes.
        let medit = medit_string(&from_vtk);
        let back = parse_medit(&medit).unwrap();
        assert_eq!(mesh.topology_hash(), back.topology_hash());
    }

    #[test]
    fn vtk_rejects_non_tet_cells() {
        let text = "# vtk DataFile Version 2.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 3 double\n0 0 0\n1 0 0\n0 1 0\nCELLS 1 4\n3 0 1 2\nCELL_TYPES 1\n5\n";
        assert!(matches!(parse_vtk(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn report_document_round_trips() {
        let mesh = samples::cube_grid_mesh(2);
        let doc = ReportDoc::new(
            crate::quality::build_report(&mesh).unwrap(),
            RunTrace::default(),
        );
        let text = report_string(&doc);
        assert!(text.contains("\"schema_version\": 1"));
        let back: ReportDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(doc, back);
    }

    #[test]
    fn format_parsing() {
        assert_eq!("medit".parse::<MeshFormat>().unwrap(), MeshFormat::Medit);
        assert_eq!("VTK".parse::<MeshFormat>().unwrap(), MeshFormat::Vtk);
        assert!(matches!(
            "obj".parse::<MeshFormat>(),
            Err(Error::UnsupportedFormat(_))
        ));
    }
}
