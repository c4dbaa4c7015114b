//! Square precinct grid and gateway detection.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::geom::Vec2;
use crate::phy::{in_range, LinkModel};
use crate::NodeId;

/// Grid coordinates of a precinct. Rows follow y, columns follow x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PrecinctId {
    pub row: u32,
    pub col: u32,
}

impl PrecinctId {
    pub const fn new(row: u32, col: u32) -> Self {
        PrecinctId { row, col }
    }
}

impl fmt::Display for PrecinctId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

impl FromStr for PrecinctId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (r, c) = s.split_once(',').ok_or_else(|| format!("precinct id `{s}` lacks a comma"))?;
        Ok(PrecinctId {
            row: r.parse().map_err(|e| format!("precinct row `{r}`: {e}"))?,
            col: c.parse().map_err(|e| format!("precinct col `{c}`: {e}"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecinctGrid {
    field_side: f64,
    dim: u32,
    cell: f64,
}

impl PrecinctGrid {
    pub fn new(field_side: f64, grid_dim: usize) -> Result<Self, ClusterError> {
        if grid_dim == 0 {
            return Err(ClusterError::ZeroGrid);
        }
        if !(field_side > 0.0) {
            return Err(ClusterError::BadField(field_side));
        }
        let dim = u32::try_from(grid_dim).map_err(|_| ClusterError::ZeroGrid)?;
        Ok(PrecinctGrid { field_side, dim, cell: field_side / grid_dim as f64 })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn cell_side(&self) -> f64 {
        self.cell
    }

    pub fn len(&self) -> usize {
        (self.dim as usize).pow(2)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn axis(&self, v: f64) -> u32 {
        let k = (v / self.cell).floor();
        if k.is_nan() || k < 0.0 {
            0
        } else {
            (k as u64).min(u64::from(self.dim - 1)) as u32
        }
    }

    /// Precinct containing `p`. Cells are half-open `[k c, (k+1) c)` on both
    /// axes; the far field edge folds into the last cell.
    pub fn locate(&self, p: Vec2) -> PrecinctId {
        PrecinctId { row: self.axis(p.y), col: self.axis(p.x) }
    }

    pub fn index(&self, id: PrecinctId) -> usize {
        id.row as usize * self.dim as usize + id.col as usize
    }

    pub fn id_at(&self, index: usize) -> PrecinctId {
        let d = self.dim as usize;
        PrecinctId::new((index / d) as u32, (index % d) as u32)
    }

    pub fn bounds(&self, id: PrecinctId) -> (Vec2, Vec2) {
        let min = Vec2::new(id.col as f64 * self.cell, id.row as f64 * self.cell);
        let upper = |k: u32| if k + 1 == self.dim { self.field_side } else { (k + 1) as f64 * self.cell };
        (min, Vec2::new(upper(id.col), upper(id.row)))
    }

    pub fn ids(&self) -> impl Iterator<Item = PrecinctId> + '_ {
        (0..self.len()).map(|i| self.id_at(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precinct {
    pub id: PrecinctId,
    pub bounds: (Vec2, Vec2),
    pub members: BTreeSet<NodeId>,
    pub fusion_head: Option<NodeId>,
    pub gateways: BTreeSet<NodeId>,
}

impl Precinct {
    pub fn empty(grid: &PrecinctGrid, id: PrecinctId) -> Self {
        Precinct { id, bounds: grid.bounds(id), members: BTreeSet::new(), fusion_head: None, gateways: BTreeSet::new() }
    }
}

/// Cuts the field into `grid_dim`² precincts and files every position
/// (indexed by node id) into one of them. Returned in row-major order.
pub fn build_precinct_grid(field_side: f64, grid_dim: usize, positions: &[Vec2]) -> Result<Vec<Precinct>, ClusterError> {
    let grid = PrecinctGrid::new(field_side, grid_dim)?;
    let mut precincts: Vec<Precinct> = grid.ids().map(|id| Precinct::empty(&grid, id)).collect();
    for (i, &p) in positions.iter().enumerate() {
        precincts[grid.index(grid.locate(p))].members.insert(NodeId::from_index(i));
    }
    Ok(precincts)
}

/// Marks as gateway every member with at least one in-range node in a
/// different precinct.
pub fn identify_gateways(precincts: &mut [Precinct], positions: &[Vec2], link: &LinkModel) {
    let owner: Vec<(NodeId, usize)> = precincts
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| p.members.iter().map(move |&n| (n, pi)))
        .collect();
    let mut gateway = vec![false; owner.len()];
    for a in 0..owner.len() {
        if gateway[a] {
            continue;
        }
        let (na, pa) = owner[a];
        for b in (a + 1)..owner.len() {
            let (nb, pb) = owner[b];
            if pa != pb && in_range(positions[na.index()], positions[nb.index()], link) {
                gateway[a] = true;
                gateway[b] = true;
                break;
            }
        }
    }
    for p in precincts.iter_mut() {
        p.gateways.clear();
    }
    for (k, &(n, pi)) in owner.iter().enumerate() {
        if gateway[k] {
            precincts[pi].gateways.insert(n);
        }
    }
}
