use crate::error::{Error, Result};
use crate::geometry::CellMask;

/// Orientation of a rooftop's current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    X,
    Y,
}

/// Rooftop spanning two adjacent metal cells.
///
/// Current flows from `tail` to `head`; it ramps linearly from zero at the far
/// side of `tail` to one on the shared edge and back to zero across `head`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rooftop {
    pub dir: Direction,
    pub tail: (usize, usize),
    pub head: (usize, usize),
}

/// Rooftop discretization of a cell mask plus the feed probe.
///
/// Unknowns are the rooftop currents in `basis` order followed by one
/// vertical probe current that runs from the ground plane up into the center
/// of `probe_cell`; `feed_basis_index` points at that last unknown.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    /// Cell size along `x` and `y` in metres.
    pub dx: f64,
    pub dy: f64,
    /// Metal cells `(ix, iy)`, row-major.
    pub cells: Vec<(usize, usize)>,
    pub basis: Vec<Rooftop>,
    pub probe_cell: (usize, usize),
    pub feed_basis_index: usize,
    pub geometry_hash: u64,
}

impl Mesh {
    /// Number of unknowns: rooftops plus the probe.
    pub fn len(&self) -> usize {
        self.basis.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rooftop_count(&self) -> usize {
        self.basis.len()
    }

    pub fn patch_length(&self) -> f64 {
        self.dx * self.nx as f64
    }

    pub fn patch_width(&self) -> f64 {
        self.dy * self.ny as f64
    }
}

/// One `x` rooftop per interior vertical edge and one `y` rooftop per
/// interior horizontal edge between metal cells. Ordering is row-major with
/// every `x` rooftop ahead of every `y` rooftop.
pub fn build_mesh(mask: &CellMask) -> Result<Mesh> {
    let (nx, ny) = (mask.nx, mask.ny);
    let mut basis = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx.saturating_sub(1) {
            if mask.is_metal(ix, iy) && mask.is_metal(ix + 1, iy) {
                basis.push(Rooftop {
                    dir: Direction::X,
                    tail: (ix, iy),
                    head: (ix + 1, iy),
                });
            }
        }
    }
    for iy in 0..ny.saturating_sub(1) {
        for ix in 0..nx {
            if mask.is_metal(ix, iy) && mask.is_metal(ix, iy + 1) {
                basis.push(Rooftop {
                    dir: Direction::Y,
                    tail: (ix, iy),
                    head: (ix, iy + 1),
                });
            }
        }
    }
    if basis.is_empty() {
        return Err(Error::DegenerateGeometry(
            "no two metal cells share an edge".into(),
        ));
    }

    let feed = (mask.feed.ix, mask.feed.iy);
    if !basis.iter().any(|b| b.tail == feed || b.head == feed) {
        return Err(Error::DegenerateGeometry(format!(
            "feed cell {feed:?} is not connected to the patch"
        )));
    }
    let feed_basis_index = basis.len();

    let cells = (0..ny)
        .flat_map(|iy| (0..nx).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| mask.is_metal(ix, iy))
        .collect();

    Ok(Mesh {
        nx,
        ny,
        dx: mask.cell_dx_mm * 1e-3,
        dy: mask.cell_dy_mm * 1e-3,
        cells,
        basis,
        probe_cell: feed,
        feed_basis_index,
        geometry_hash: mask.fingerprint(),
    })
}
