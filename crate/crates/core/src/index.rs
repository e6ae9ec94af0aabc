//! Uniform-grid spatial index over an agent snapshot.
//!
//! Cells are stored densely over the bounding box of the snapshot in a
//! compressed layout: `cell_start[c]..cell_start[c + 1]` indexes `entries`,
//! which holds positions into the agent slice the index was built from.
//! Cells are ordered row-major by `(cy, cx)` and entries within a cell by
//! agent id, so every query visits agents in a fixed order.

use crate::agent::{AgentId, AgentState};
use crate::error::{invalid, Error, Result};
use crate::geom::Vec2;

/// Upper bound on dense cells; sparse outliers coarsen the grid instead of
/// blowing up memory.
const MAX_CELLS: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cell_size: f64,
    origin: (i64, i64),
    nx: usize,
    ny: usize,
    cell_start: Vec<u32>,
    entries: Vec<u32>,
}

impl SpatialIndex {
    pub fn build(agents: &[AgentState], cell_size: f64) -> Result<Self> {
        Self::build_filtered(agents, cell_size, |_| true)
    }

    /// Indexes only the agents accepted by `include`; stored positions still
    /// refer to the full slice.
    pub fn build_filtered<F>(agents: &[AgentState], cell_size: f64, include: F) -> Result<Self>
    where
        F: Fn(&AgentState) -> bool,
    {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(invalid("cell_size", format!("must be positive, got {cell_size}")));
        }
        let members: Vec<usize> = (0..agents.len()).filter(|&i| include(&agents[i])).collect();
        if members.iter().any(|&i| !agents[i].position.is_finite()) {
            return Err(Error::NonFinite("agent position"));
        }
        if members.is_empty() {
            return Ok(Self {
                cell_size,
                origin: (0, 0),
                nx: 0,
                ny: 0,
                cell_start: vec![0],
                entries: Vec::new(),
            });
        }

        let mut cell_size = cell_size;
        let (origin, nx, ny) = loop {
            let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
            for &i in &members {
                let (cx, cy) = cell_coord(agents[i].position, cell_size);
                lo_x = lo_x.min(cx);
                lo_y = lo_y.min(cy);
                hi_x = hi_x.max(cx);
                hi_y = hi_y.max(cy);
            }
            let nx = (hi_x - lo_x + 1) as usize;
            let ny = (hi_y - lo_y + 1) as usize;
            if nx.saturating_mul(ny) <= MAX_CELLS {
                break ((lo_x, lo_y), nx, ny);
            }
            cell_size *= 2.0;
        };

        let flat = |p: Vec2| {
            let (cx, cy) = cell_coord(p, cell_size);
            (cy - origin.1) as usize * nx + (cx - origin.0) as usize
        };

        let mut counts = vec![0u32; nx * ny + 1];
        let keys: Vec<usize> = members.iter().map(|&i| flat(agents[i].position)).collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let cell_start = counts.clone();
        let mut cursor = counts;
        let mut entries = vec![0u32; members.len()];
        for (&i, &k) in members.iter().zip(&keys) {
            entries[cursor[k] as usize] = i as u32;
            cursor[k] += 1;
        }
        for c in 0..nx * ny {
            let (s, e) = (cell_start[c] as usize, cell_start[c + 1] as usize);
            if e - s > 1 {
                entries[s..e].sort_unstable_by_key(|&i| agents[i as usize].id);
            }
        }

        Ok(Self {
            cell_size,
            origin,
            nx,
            ny,
            cell_start,
            entries,
        })
    }

    /// Effective cell size (may exceed the requested one for very sparse snapshots).
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cell_coord(&self, p: Vec2) -> (i64, i64) {
        cell_coord(p, self.cell_size)
    }

    /// Non-empty cells with the slice positions they hold, in storage order.
    pub fn cells(&self) -> impl Iterator<Item = ((i64, i64), &[u32])> + '_ {
        (0..self.nx * self.ny).filter_map(move |c| {
            let (s, e) = (self.cell_start[c] as usize, self.cell_start[c + 1] as usize);
            (e > s).then(|| {
                let cx = self.origin.0 + (c % self.nx) as i64;
                let cy = self.origin.1 + (c / self.nx) as i64;
                ((cx, cy), &self.entries[s..e])
            })
        })
    }

    /// Calls `visit(slice_index, distance_squared)` for every agent with
    /// `|position - center| <= radius`.
    pub fn for_each_within<F>(&self, agents: &[AgentState], center: Vec2, radius: f64, mut visit: F)
    where
        F: FnMut(usize, f64),
    {
        if self.entries.is_empty() {
            return;
        }
        let r_sq = radius * radius;
        let (lo_x, lo_y) = cell_coord(center - Vec2::new(radius, radius), self.cell_size);
        let (hi_x, hi_y) = cell_coord(center + Vec2::new(radius, radius), self.cell_size);
        let x0 = lo_x.max(self.origin.0);
        let y0 = lo_y.max(self.origin.1);
        let x1 = hi_x.min(self.origin.0 + self.nx as i64 - 1);
        let y1 = hi_y.min(self.origin.1 + self.ny as i64 - 1);
        if x0 > x1 || y0 > y1 {
            return;
        }
        for cy in y0..=y1 {
            let row = (cy - self.origin.1) as usize * self.nx;
            let s = self.cell_start[row + (x0 - self.origin.0) as usize] as usize;
            let e = self.cell_start[row + (x1 - self.origin.0) as usize + 1] as usize;
            for &i in &self.entries[s..e] {
                let d_sq = (agents[i as usize].position - center).length_squared();
                if d_sq <= r_sq {
                    visit(i as usize, d_sq);
                }
            }
        }
    }

    /// Agents within the closed ball of radius `radius` around `center`,
    /// with their exact distances.
    pub fn neighbors_within(
        &self,
        agents: &[AgentState],
        center: Vec2,
        radius: f64,
        exclude: Option<AgentId>,
    ) -> Vec<(AgentId, f64)> {
        let mut out = Vec::new();
        self.for_each_within(agents, center, radius, |i, d_sq| {
            let id = agents[i].id;
            if Some(id) != exclude {
                out.push((id, d_sq.sqrt()));
            }
        });
        out
    }
}

fn cell_coord(p: Vec2, cell_size: f64) -> (i64, i64) {
    ((p.x / cell_size).floor() as i64, (p.y / cell_size).floor() as i64)
}
