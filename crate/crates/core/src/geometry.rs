//! Cut-out patch parameterization.
//!
//! The optimizer works on a 5-vector in the unit cube ordered as
//! `(L, W, w1, h1, h2)`. [`denormalize`] turns it into millimetres: the patch
//! outline is an affine map of `L` and `W`, and the cut-out is expressed as
//! fractions of the realized patch so every point of the cube is feasible.
//! [`rasterize`] then samples the patch-minus-slot shape on a uniform cell
//! grid for the moment-method solver.
//!
//! Coordinates: `x` runs along the patch length from the feed edge (`x = 0`),
//! `y` runs across the width. The slot is centered in `y` and starts
//! `slot_offset_mm` away from the feed edge.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of design variables.
pub const N_PARAMS: usize = 5;

/// Fraction of the available room a slot dimension may occupy.
const SLOT_MARGIN: f64 = 0.9;

/// Minimum number of metal cells for a usable mask.
const MIN_METAL_CELLS: usize = 4;

/// Design vector in `[0, 1]^5`, ordered `(L, W, w1, h1, h2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; N_PARAMS]", into = "[f64; N_PARAMS]")]
pub struct NormalizedParams([f64; N_PARAMS]);

impl NormalizedParams {
    pub fn new(values: [f64; N_PARAMS]) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 || *v > 1.0 {
                return Err(Error::InvalidParams(format!(
                    "component {i} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self(values))
    }

    /// Builds a vector from values already known to be in the unit cube,
    /// clamping away rounding excursions.
    pub(crate) fn from_unit(values: [f64; N_PARAMS]) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values.map(|v| v.clamp(0.0, 1.0)))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; N_PARAMS] = values.try_into().map_err(|_| {
            Error::InvalidParams(format!(
                "expected {N_PARAMS} components, got {}",
                values.len()
            ))
        })?;
        Self::new(arr)
    }

    pub fn values(&self) -> &[f64; N_PARAMS] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

impl TryFrom<[f64; N_PARAMS]> for NormalizedParams {
    type Error = Error;

    fn try_from(values: [f64; N_PARAMS]) -> Result<Self> {
        Self::new(values)
    }
}

impl From<NormalizedParams> for [f64; N_PARAMS] {
    fn from(p: NormalizedParams) -> Self {
        p.0
    }
}

/// Dielectric stack-up and feed line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubstrateSpec {
    pub epsilon_r: f64,
    pub height_mm: f64,
    pub z0_ohm: f64,
}

impl Default for SubstrateSpec {
    /// 1.6 mm FR-4 with a 50 Ω feed.
    fn default() -> Self {
        Self {
            epsilon_r: 4.4,
            height_mm: 1.6,
            z0_ohm: 50.0,
        }
    }
}

impl SubstrateSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_r >= 1.0) {
            return Err(Error::Config(format!(
                "epsilon_r must be >= 1, got {}",
                self.epsilon_r
            )));
        }
        if !(self.height_mm > 0.0) || !self.height_mm.is_finite() {
            return Err(Error::Config(format!(
                "substrate height must be positive, got {}",
                self.height_mm
            )));
        }
        if !(self.z0_ohm > 0.0) || !self.z0_ohm.is_finite() {
            return Err(Error::Config(format!(
                "z0 must be positive, got {}",
                self.z0_ohm
            )));
        }
        Ok(())
    }
}

/// Physical bounds of the search and the discretization density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignSpace {
    pub l_range_mm: (f64, f64),
    pub w_range_mm: (f64, f64),
    pub substrate: SubstrateSpec,
    pub grid_cells_per_side: usize,
    pub l_max_norm: f64,
}

impl Default for DesignSpace {
    fn default() -> Self {
        Self {
            l_range_mm: (20.0, 50.0),
            w_range_mm: (15.0, 40.0),
            substrate: SubstrateSpec::default(),
            grid_cells_per_side: 16,
            l_max_norm: 1.0,
        }
    }
}

impl DesignSpace {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("l_range_mm", self.l_range_mm), ("w_range_mm", self.w_range_mm)] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must satisfy 0 < min < max, got ({lo}, {hi})"
                )));
            }
        }
        if self.grid_cells_per_side < 8 {
            return Err(Error::Config(format!(
                "grid_cells_per_side must be >= 8, got {}",
                self.grid_cells_per_side
            )));
        }
        if !(self.l_max_norm > 0.0 && self.l_max_norm <= 1.0) {
            return Err(Error::Config(format!(
                "l_max_norm must lie in (0, 1], got {}",
                self.l_max_norm
            )));
        }
        self.substrate.validate()
    }

    /// Same space with a different grid density.
    pub fn with_grid(mut self, cells_per_side: usize) -> Self {
        self.grid_cells_per_side = cells_per_side;
        self
    }
}

/// Cell index `(ix, iy)` on the rasterization grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeedCell {
    pub ix: usize,
    pub iy: usize,
}

/// Patch outline and cut-out in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalGeometry {
    pub patch_l_mm: f64,
    pub patch_w_mm: f64,
    pub slot_w_mm: f64,
    pub slot_offset_mm: f64,
    pub slot_h_mm: f64,
    pub feed: FeedCell,
}

impl PhysicalGeometry {
    /// Plain rectangular patch fed at the center of its `x = 0` edge.
    pub fn rectangle(patch_l_mm: f64, patch_w_mm: f64, space: &DesignSpace) -> Self {
        Self {
            patch_l_mm,
            patch_w_mm,
            slot_w_mm: 0.0,
            slot_offset_mm: 0.0,
            slot_h_mm: 0.0,
            feed: nominal_feed(space.grid_cells_per_side),
        }
    }

    pub fn validate(&self, space: &DesignSpace) -> Result<()> {
        let dims = [
            self.patch_l_mm,
            self.patch_w_mm,
            self.slot_w_mm,
            self.slot_offset_mm,
            self.slot_h_mm,
        ];
        if dims.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidParams(format!(
                "geometry dimensions must be finite and non-negative: {dims:?}"
            )));
        }
        if self.patch_l_mm <= 0.0 || self.patch_w_mm <= 0.0 {
            return Err(Error::InvalidParams("patch outline must be non-empty".into()));
        }
        if self.slot_offset_mm + self.slot_h_mm > self.patch_l_mm * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "slot extends past the patch length: {} + {} > {}",
                self.slot_offset_mm, self.slot_h_mm, self.patch_l_mm
            )));
        }
        if self.slot_w_mm > self.patch_w_mm {
            return Err(Error::InvalidParams(format!(
                "slot wider than patch: {} > {}",
                self.slot_w_mm, self.patch_w_mm
            )));
        }
        let n = space.grid_cells_per_side;
        if self.feed.ix >= n || self.feed.iy >= n {
            return Err(Error::InvalidParams(format!(
                "feed cell {:?} outside the {n}x{n} grid",
                self.feed
            )));
        }
        Ok(())
    }

    pub fn has_slot(&self) -> bool {
        self.slot_w_mm > 0.0 && self.slot_h_mm > 0.0
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Center cell of the feed edge.
pub fn nominal_feed(cells_per_side: usize) -> FeedCell {
    FeedCell {
        ix: 0,
        iy: cells_per_side / 2,
    }
}

/// Maps a normalized design vector to physical dimensions.
pub fn denormalize(p: &NormalizedParams, space: &DesignSpace) -> PhysicalGeometry {
    let [l, w, w1, h1, h2] = *p.values();
    let lerp = |(lo, hi): (f64, f64), t: f64| lo + t * (hi - lo);
    let patch_l_mm = lerp(space.l_range_mm, l);
    let patch_w_mm = lerp(space.w_range_mm, w);
    let slot_w_mm = w1 * patch_w_mm * SLOT_MARGIN;
    let slot_offset_mm = h1 * patch_l_mm * SLOT_MARGIN;
    let slot_h_mm = h2 * (patch_l_mm - slot_offset_mm) * SLOT_MARGIN;
    PhysicalGeometry {
        patch_l_mm,
        patch_w_mm,
        slot_w_mm,
        slot_offset_mm,
        slot_h_mm,
        feed: nominal_feed(space.grid_cells_per_side),
    }
}

/// Conductor occupancy of the rasterization grid, row-major in `iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMask {
    pub nx: usize,
    pub ny: usize,
    pub metal: Vec<bool>,
    pub cell_dx_mm: f64,
    pub cell_dy_mm: f64,
    pub feed: FeedCell,
}

impl CellMask {
    pub fn is_metal(&self, ix: usize, iy: usize) -> bool {
        self.metal[iy * self.nx + ix]
    }

    pub fn metal_count(&self) -> usize {
        self.metal.iter().filter(|m| **m).count()
    }

    /// Cell-center coordinates in millimetres.
    pub fn cell_center_mm(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            (ix as f64 + 0.5) * self.cell_dx_mm,
            (iy as f64 + 0.5) * self.cell_dy_mm,
        )
    }

    /// Stable FNV-1a fingerprint used to identify geometries in error reports.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(&(self.nx as u64).to_le_bytes());
        eat(&(self.ny as u64).to_le_bytes());
        eat(&self.cell_dx_mm.to_bits().to_le_bytes());
        eat(&self.cell_dy_mm.to_bits().to_le_bytes());
        for m in &self.metal {
            eat(&[u8::from(*m)]);
        }
        h
    }
}

/// Samples the patch-minus-slot shape on a `n x n` grid spanning the patch.
///
/// A cell is metal iff its center lies outside the (closed) slot rectangle.
/// If the nominal feed cell was cut away or cut off from the rest of the
/// patch, the feed moves along the edge to the nearest connected metal cell.
pub fn rasterize(g: &PhysicalGeometry, space: &DesignSpace) -> Result<CellMask> {
    g.validate(space)?;
    let n = space.grid_cells_per_side;
    let dx = g.patch_l_mm / n as f64;
    let dy = g.patch_w_mm / n as f64;
    let half_slot = 0.5 * g.slot_w_mm;
    let x_lo = g.slot_offset_mm;
    let x_hi = g.slot_offset_mm + g.slot_h_mm;
    let has_slot = g.has_slot();

    let mut metal = Vec::with_capacity(n * n);
    for iy in 0..n {
        // Offset from the patch's center line; exact in sign so the mask is
        // mirror-symmetric for a centered slot.
        let yc = (iy as f64 + 0.5 - 0.5 * n as f64) * dy;
        for ix in 0..n {
            let xc = (ix as f64 + 0.5) * dx;
            let in_slot = has_slot && xc >= x_lo && xc <= x_hi && yc.abs() <= half_slot;
            metal.push(!in_slot);
        }
    }

    let mut mask = CellMask {
        nx: n,
        ny: n,
        metal,
        cell_dx_mm: dx,
        cell_dy_mm: dy,
        feed: g.feed,
    };
    let count = mask.metal_count();
    if count < MIN_METAL_CELLS {
        return Err(Error::DegenerateGeometry(format!(
            "only {count} metal cells after rasterization"
        )));
    }
    mask.feed = place_feed(&mask, g.feed).ok_or_else(|| {
        Error::DegenerateGeometry("no connected metal cell on the feed edge".into())
    })?;
    Ok(mask)
}

fn place_feed(mask: &CellMask, nominal: FeedCell) -> Option<FeedCell> {
    let ix = nominal.ix;
    let connected = |iy: usize| {
        let metal = |x: usize, y: usize| x < mask.nx && y < mask.ny && mask.is_metal(x, y);
        metal(ix, iy)
            && (metal(ix + 1, iy)
                || (ix > 0 && metal(ix - 1, iy))
                || metal(ix, iy + 1)
                || (iy > 0 && metal(ix, iy - 1)))
    };
    (0..mask.ny)
        .filter(|&iy| connected(iy))
        .min_by_key(|&iy| (iy.abs_diff(nominal.iy), iy))
        .map(|iy| FeedCell { ix, iy })
}
