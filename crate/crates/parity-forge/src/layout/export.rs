use super::{Role, StabilizerKind, UnfoldedLayout};
use crate::error::{invalid, Error, Result};
use std::fmt::Write;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Svg,
}

impl FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => invalid(format!("unknown layout format '{other}'")),
        }
    }
}

pub fn export_layout(layout: &UnfoldedLayout, format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Json => serde_json::to_string_pretty(layout).map_err(|e| Error::Parse(e.to_string())),
        ExportFormat::Svg => Ok(render_svg(layout)),
    }
}

pub fn import_layout(text: &str) -> Result<UnfoldedLayout> {
    let layout: UnfoldedLayout = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if layout.grid.m() != layout.m {
        return Err(Error::Parse(format!(
            "grid {}x{} exponents do not add up to m = {}",
            layout.grid.h, layout.grid.l, layout.m
        )));
    }
    for (i, q) in layout.qubits.iter().enumerate() {
        if q.id != i {
            return Err(Error::Parse(format!("qubit at position {i} has id {}", q.id)));
        }
    }
    let n = layout.qubits.len();
    for (i, s) in layout.stabilizers.iter().enumerate() {
        if s.support.iter().chain(s.ancilla.iter()).any(|&q| q >= n) {
            return Err(Error::Parse(format!("stabilizer {i} references a missing qubit")));
        }
        if s.parent.is_some_and(|p| p >= layout.stabilizers.len()) {
            return Err(Error::Parse(format!("stabilizer {i} has a missing parent")));
        }
    }
    Ok(layout)
}

const SCALE: f64 = 48.0;
const MARGIN: f64 = 40.0;

fn render_svg(layout: &UnfoldedLayout) -> String {
    let (mut r0, mut r1, mut c0, mut c1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for q in &layout.qubits {
        r0 = r0.min(q.row);
        r1 = r1.max(q.row);
        c0 = c0.min(q.col);
        c1 = c1.max(q.col);
    }
    let x = |c: f64| MARGIN + (c - c0) * SCALE;
    let y = |r: f64| MARGIN + (r - r0) * SCALE;
    let width = 2.0 * MARGIN + (c1 - c0) * SCALE;
    let height = 2.0 * MARGIN + (r1 - r0) * SCALE;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="9">"#
    );
    let _ = writeln!(out, r#"<title>uRM({}) layout</title>"#, layout.m);
    for s in &layout.stabilizers {
        let pts: Vec<(f64, f64)> = s
            .support
            .iter()
            .map(|&q| (x(layout.qubits[q].col), y(layout.qubits[q].row)))
            .collect();
        match s.kind {
            StabilizerKind::Bulk => {
                let (minx, miny) = pts.iter().fold((f64::MAX, f64::MAX), |a, p| (a.0.min(p.0), a.1.min(p.1)));
                let _ = writeln!(
                    out,
                    r##"<rect class="plaquette" x="{minx:.1}" y="{miny:.1}" width="{SCALE:.1}" height="{SCALE:.1}" fill="#dfe8f5" stroke="#7a8fb0"/>"##
                );
            }
            StabilizerKind::BoundaryCompositePart | StabilizerKind::Repetition => {
                let centre = s
                    .ancilla
                    .map(|a| (x(layout.qubits[a].col), y(layout.qubits[a].row)))
                    .unwrap_or(pts[0]);
                for p in &pts {
                    let _ = writeln!(
                        out,
                        r##"<line class="part" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#c9803a"/>"##,
                        centre.0, centre.1, p.0, p.1
                    );
                }
            }
            StabilizerKind::BoundaryLogical => {
                let has_parts = layout.stabilizers.iter().any(|o| o.parent.is_some())
                    && layout.connectivity == crate::cost::Connectivity::NearestNeighbour;
                if has_parts {
                    continue;
                }
                let path: Vec<String> = pts.iter().map(|p| format!("{:.1},{:.1}", p.0, p.1)).collect();
                let _ = writeln!(
                    out,
                    r##"<polyline class="boundary" points="{}" fill="none" stroke="#b03a48" stroke-dasharray="4 3"/>"##,
                    path.join(" ")
                );
            }
        }
    }
    for q in &layout.qubits {
        let (fill, radius) = match q.role {
            Role::BulkData => ("#ffffff", 11.0),
            Role::TargetInterface => ("#f2d16b", 11.0),
            Role::BoundaryAncillaData => ("#f3c9a0", 8.0),
            Role::RepetitionChain => ("#c7e3b5", 8.0),
            Role::MeasureAncilla => ("#555555", 3.0),
        };
        let _ = writeln!(
            out,
            r##"<circle class="{:?}" cx="{:.1}" cy="{:.1}" r="{radius}" fill="{fill}" stroke="#333333"/>"##,
            q.role,
            x(q.col),
            y(q.row)
        );
        if let Some(l) = q.label {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{l}</text>"#,
                x(q.col),
                y(q.row) + 3.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
