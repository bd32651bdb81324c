//! The planar `uRM(m)` layout: qubits on a `2^h x 2^l` grid, weight-4 bulk
//! plaquettes, boundary stabilizers `S(w,t)`, parity labels and target attachment.
//!
//! Build a complete layout with [`build_layout`], or run the stages one at a time:
//! [`build_bulk`], [`attach_boundaries`], [`distribute_boundaries`],
//! [`realize_nearest_neighbour`] (or [`attach_long_range_ancillas`]),
//! [`assign_parity_labels`] and [`attach_target`].

mod boundary;
mod export;
mod labels;
mod nn;

pub use boundary::{attach_boundaries, boundary_stabilizers, distribute_boundaries, BoundaryStabilizer};
pub use export::{export_layout, import_layout, ExportFormat};
pub use labels::assign_parity_labels;
pub use nn::{attach_long_range_ancillas, realize_nearest_neighbour};

use crate::bits::BitMatrix;
use crate::cost::Connectivity;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Grid exponents; the grid has `2^h` rows and `2^l` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: u32,
    pub l: u32,
}

impl GridSpec {
    /// `h = floor(m/2)`, `l = ceil(m/2)`.
    pub fn for_m(m: u32) -> Self {
        Self { h: m / 2, l: m - m / 2 }
    }

    pub fn m(&self) -> u32 {
        self.h + self.l
    }

    pub fn rows(&self) -> usize {
        1 << self.h
    }

    pub fn cols(&self) -> usize {
        1 << self.l
    }

    /// Id of the bulk qubit at `(row, col)`.
    pub fn bulk_id(&self, row: usize, col: usize) -> usize {
        row * self.cols() + col
    }
}

/// An odd-size subset of `{0..=m}` stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<u32>", try_from = "Vec<u32>")]
pub struct ParityLabel(pub u64);

impl ParityLabel {
    pub fn single(i: u32) -> Self {
        Self(1 << i)
    }

    pub fn contains(&self, i: u32) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn len(&self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn indices(&self) -> Vec<u32> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }
}

impl std::ops::BitXor for ParityLabel {
    type Output = ParityLabel;
    fn bitxor(self, rhs: Self) -> Self {
        Self(self.0 ^ rhs.0)
    }
}

impl From<ParityLabel> for Vec<u32> {
    fn from(l: ParityLabel) -> Self {
        l.indices()
    }
}

impl TryFrom<Vec<u32>> for ParityLabel {
    type Error = String;
    fn try_from(v: Vec<u32>) -> std::result::Result<Self, String> {
        let mut mask = 0u64;
        for i in v {
            if i >= 64 {
                return Err(format!("label index {i} out of range"));
            }
            if mask >> i & 1 == 1 {
                return Err(format!("duplicate label index {i}"));
            }
            mask |= 1 << i;
        }
        Ok(Self(mask))
    }
}

impl fmt::Display for ParityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    BulkData,
    BoundaryAncillaData,
    MeasureAncilla,
    TargetInterface,
    RepetitionChain,
}

impl Role {
    /// Qubits that carry code information (everything but measure ancillas).
    pub fn is_data(&self) -> bool {
        !matches!(self, Role::MeasureAncilla)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitNode {
    pub id: usize,
    pub row: f64,
    pub col: f64,
    pub layer: i32,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<ParityLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilizerKind {
    Bulk,
    BoundaryLogical,
    BoundaryCompositePart,
    Repetition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Edge {
    Top,
    Bottom,
    Left,
    Right,
}

impl Edge {
    pub fn is_horizontal(&self) -> bool {
        matches!(self, Edge::Top | Edge::Bottom)
    }

    /// Layers beyond this edge are numbered negative for top/left.
    pub fn layer_sign(&self) -> i32 {
        match self {
            Edge::Top | Edge::Left => -1,
            Edge::Bottom | Edge::Right => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizerSpec {
    pub support: Vec<usize>,
    pub kind: StabilizerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<Edge>,
    /// Index of the boundary-logical stabilizer a composite part belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
    /// Measure-ancilla qubit id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla: Option<usize>,
    /// Parts of inner stabilizers that link a representative ancilla in this
    /// part back to its code-qubit pair.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub borrows: Vec<usize>,
}

impl StabilizerSpec {
    fn new(support: Vec<usize>, kind: StabilizerKind) -> Self {
        Self {
            support,
            kind,
            w: None,
            t: None,
            edge: None,
            parent: None,
            ancilla: None,
            borrows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "distance")]
pub enum TargetMode {
    Ideal,
    Repetition(u32),
}

impl TargetMode {
    /// Parses `ideal`, `repetition` (distance `2^(m-1)`) or `repetition:<d>`.
    pub fn parse_for_m(s: &str, m: u32) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        if s == "ideal" {
            return Ok(Self::Ideal);
        }
        if let Some(rest) = s.strip_prefix("repetition") {
            let rest = rest.trim_start_matches([':', '(']).trim_end_matches(')');
            if rest.is_empty() {
                return Ok(Self::Repetition(1 << (m.max(1) - 1)));
            }
            return rest
                .parse()
                .map(Self::Repetition)
                .map_err(|_| Error::InvalidParameter(format!("bad repetition distance '{rest}'")));
        }
        invalid(format!("unknown target mode '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedLayout {
    pub m: u32,
    pub grid: GridSpec,
    pub connectivity: Connectivity,
    pub qubits: Vec<QubitNode>,
    pub stabilizers: Vec<StabilizerSpec>,
    pub target_mode: TargetMode,
}

impl UnfoldedLayout {
    fn push_qubit(&mut self, row: f64, col: f64, layer: i32, role: Role) -> usize {
        let id = self.qubits.len();
        self.qubits.push(QubitNode {
            id,
            row,
            col,
            layer,
            role,
            label: None,
        });
        id
    }

    /// Adds a measure ancilla at the centre of the unit square with top-left corner
    /// `(row, col)` and records it on stabilizer `s`.
    fn attach_square_ancilla(&mut self, s: usize, row: i64, col: i64, layer: i32) {
        let id = self.push_qubit(row as f64 + 0.5, col as f64 + 0.5, layer, Role::MeasureAncilla);
        self.stabilizers[s].ancilla = Some(id);
    }

    pub fn n_bulk(&self) -> usize {
        1 << self.m
    }

    /// Qubits that hold code data (bulk, ancilla-data, interface, chain).
    pub fn data_qubits(&self) -> Vec<usize> {
        self.qubits.iter().filter(|q| q.role.is_data()).map(|q| q.id).collect()
    }

    pub fn labelled_qubits(&self) -> Vec<usize> {
        self.qubits.iter().filter(|q| q.label.is_some()).map(|q| q.id).collect()
    }

    pub fn target_interface(&self) -> Option<usize> {
        self.qubits.iter().find(|q| q.role == Role::TargetInterface).map(|q| q.id)
    }

    pub fn repetition_chain(&self) -> Vec<usize> {
        self.qubits
            .iter()
            .filter(|q| q.role == Role::RepetitionChain)
            .map(|q| q.id)
            .collect()
    }

    /// Indices of the bulk and boundary-logical stabilizers (composites collapsed).
    pub fn logical_stabilizers(&self) -> Vec<usize> {
        self.stabilizers
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s.kind, StabilizerKind::Bulk | StabilizerKind::BoundaryLogical))
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices of the stabilizers that are measured directly: bulk plaquettes,
    /// composite parts (or boundary-logical stabilizers without parts) and
    /// repetition checks.
    pub fn measured_stabilizers(&self) -> Vec<usize> {
        let mut has_parts = vec![false; self.stabilizers.len()];
        for s in &self.stabilizers {
            if let Some(p) = s.parent {
                has_parts[p] = true;
            }
        }
        self.stabilizers
            .iter()
            .enumerate()
            .filter(|(i, s)| !(s.kind == StabilizerKind::BoundaryLogical && has_parts[*i]))
            .map(|(i, _)| i)
            .collect()
    }

    /// Parts whose product is boundary-logical stabilizer `parent`: its own parts
    /// plus the inner parts they borrow.
    pub fn composite_group(&self, parent: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, s) in self.stabilizers.iter().enumerate() {
            if s.parent == Some(parent) {
                out.push(i);
                out.extend(s.borrows.iter().copied());
            }
        }
        out
    }

    /// Z-check matrix of the bulk and boundary-logical stabilizers over the
    /// labelled qubits, together with the qubit id of each column.
    pub fn logical_check_matrix(&self) -> (Vec<usize>, BitMatrix) {
        let cols = self.labelled_qubits();
        let mut index = vec![usize::MAX; self.qubits.len()];
        for (c, &q) in cols.iter().enumerate() {
            index[q] = c;
        }
        let supports: Vec<Vec<usize>> = self
            .logical_stabilizers()
            .into_iter()
            .map(|s| {
                self.stabilizers[s]
                    .support
                    .iter()
                    .filter(|&&q| index[q] != usize::MAX)
                    .map(|&q| index[q])
                    .collect()
            })
            .collect();
        let n = cols.len();
        (cols, BitMatrix::from_supports(&supports, n))
    }

    /// Labelled qubits whose label contains each logical index `0..=m`.
    pub fn logical_x_supports(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut out = BTreeMap::new();
        for k in 0..=self.m {
            out.insert(
                k,
                self.qubits
                    .iter()
                    .filter(|q| q.label.is_some_and(|l| l.contains(k)))
                    .map(|q| q.id)
                    .collect(),
            );
        }
        out
    }

    /// Qubits carrying bulk grid position `(row, col)`.
    pub fn bulk_at(&self, row: usize, col: usize) -> usize {
        self.grid.bulk_id(row, col)
    }
}

/// Places `2^m` bulk qubits and one weight-4 plaquette per interior face.
///
/// # Errors
///
/// `Unsupported` for `m < 4`, `InvalidParameter` for `m > 20`.
pub fn build_bulk(m: u32) -> Result<UnfoldedLayout> {
    if m < 4 {
        return Err(Error::Unsupported(format!("m = {m}: layouts start at m = 4 (the T gate)")));
    }
    if m > 20 {
        return invalid(format!("m = {m} too large for a grid layout"));
    }
    let grid = GridSpec::for_m(m);
    let mut layout = UnfoldedLayout {
        m,
        grid,
        connectivity: Connectivity::LongRange,
        qubits: Vec::new(),
        stabilizers: Vec::new(),
        target_mode: TargetMode::Ideal,
    };
    let (rows, cols) = (grid.rows(), grid.cols());
    for r in 0..rows {
        for c in 0..cols {
            layout.push_qubit(r as f64, c as f64, 0, Role::BulkData);
        }
    }
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let support = vec![
                grid.bulk_id(r, c),
                grid.bulk_id(r, c + 1),
                grid.bulk_id(r + 1, c),
                grid.bulk_id(r + 1, c + 1),
            ];
            layout.stabilizers.push(StabilizerSpec::new(support, StabilizerKind::Bulk));
            let s = layout.stabilizers.len() - 1;
            layout.attach_square_ancilla(s, r as i64, c as i64, 0);
        }
    }
    Ok(layout)
}

/// Marks the qubit labelled `{0}` as target interface and, for repetition mode,
/// hangs a diagonal chain of `d - 1` qubits with weight-2 checks off it.
pub fn attach_target(mut layout: UnfoldedLayout, mode: TargetMode) -> Result<UnfoldedLayout> {
    let interface = layout
        .qubits
        .iter()
        .position(|q| q.label == Some(ParityLabel::single(0)))
        .ok_or_else(|| Error::InvalidParameter("layout has no qubit labelled {0}".into()))?;
    if layout.target_interface().is_some() {
        return invalid("target already attached");
    }
    if mode == TargetMode::Repetition(0) {
        return invalid("repetition distance must be at least 1");
    }
    layout.qubits[interface].role = Role::TargetInterface;
    layout.target_mode = mode;
    if let TargetMode::Repetition(d) = mode {
        let (r0, c0) = (layout.qubits[interface].row as i64, layout.qubits[interface].col as i64);
        let mut prev = interface;
        for k in 1..d as i64 {
            let q = layout.push_qubit((r0 + k) as f64, (c0 - k) as f64, 0, Role::RepetitionChain);
            layout
                .stabilizers
                .push(StabilizerSpec::new(vec![prev, q], StabilizerKind::Repetition));
            let s = layout.stabilizers.len() - 1;
            layout.attach_square_ancilla(s, r0 + k - 1, c0 - k, 0);
            prev = q;
        }
    }
    Ok(layout)
}

/// Runs every construction stage.
pub fn build_layout(m: u32, connectivity: Connectivity, target: TargetMode) -> Result<UnfoldedLayout> {
    let layout = attach_boundaries(build_bulk(m)?);
    let layout = distribute_boundaries(layout);
    let layout = match connectivity {
        Connectivity::NearestNeighbour => realize_nearest_neighbour(layout)?,
        Connectivity::LongRange => attach_long_range_ancillas(layout),
    };
    let layout = assign_parity_labels(layout)?;
    attach_target(layout, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_serde_is_sorted_indices() {
        let l = ParityLabel(0b10110);
        assert_eq!(serde_json::to_string(&l).unwrap(), "[1,2,4]");
        let back: ParityLabel = serde_json::from_str("[4,1,2]").unwrap();
        assert_eq!(back, l);
        assert!(serde_json::from_str::<ParityLabel>("[1,1]").is_err());
    }

    #[test]
    fn target_mode_parsing() {
        assert_eq!(TargetMode::parse_for_m("ideal", 6).unwrap(), TargetMode::Ideal);
        assert_eq!(TargetMode::parse_for_m("repetition:5", 6).unwrap(), TargetMode::Repetition(5));
        assert_eq!(TargetMode::parse_for_m("repetition", 6).unwrap(), TargetMode::Repetition(32));
        assert!(TargetMode::parse_for_m("surface", 6).is_err());
    }
}
