//! Structured hexahedral grid on an axis-aligned box.
//!
//! Cells, nodes and faces are numbered lexicographically with x fastest, then
//! y, then z. Faces are grouped by normal axis (all x-normal faces first, then
//! y, then z); every face carries a global normal pointing in the positive
//! axis direction.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One of the six outer planes of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Plane {
    pub const ALL: [Plane; 6] = [
        Plane::XMin,
        Plane::XMax,
        Plane::YMin,
        Plane::YMax,
        Plane::ZMin,
        Plane::ZMax,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn axis(self) -> Axis {
        match self {
            Plane::XMin | Plane::XMax => Axis::X,
            Plane::YMin | Plane::YMax => Axis::Y,
            Plane::ZMin | Plane::ZMax => Axis::Z,
        }
    }

    pub fn is_max(self) -> bool {
        matches!(self, Plane::XMax | Plane::YMax | Plane::ZMax)
    }

    /// Outward unit normal.
    pub fn normal(self) -> Vector3<f64> {
        let mut n = Vector3::zeros();
        n[self.axis().index()] = if self.is_max() { 1.0 } else { -1.0 };
        n
    }
}

/// Flow boundary condition on a plane. A no-flow plane has `z . n = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowBc {
    NoFlow,
    Dirichlet(f64),
}

/// Mechanics boundary condition on a plane.
///
/// Prescribed displacements and tractions are multiplied by the load ramp
/// factor of the current time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechBc {
    /// Prescribed traction `sigma n = t`.
    Traction(Vector3<f64>),
    /// `u = 0`.
    Fixed,
    /// Normal displacement component is zero, tangential directions are free.
    Roller,
    /// Selected displacement components prescribed to constant values.
    Displacement([Option<f64>; 3]),
    /// All components prescribed as the linear field `u = G x`.
    LinearDisplacement(Matrix3<f64>),
}

impl MechBc {
    pub fn free() -> Self {
        MechBc::Traction(Vector3::zeros())
    }

    pub fn is_dirichlet(&self) -> bool {
        !matches!(self, MechBc::Traction(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneBc {
    pub flow: FlowBc,
    pub mech: MechBc,
}

/// Boundary tagging of the six outer planes; every plane must be tagged
/// before a grid can be built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundarySpec {
    planes: [Option<PlaneBc>; 6],
}

impl BoundarySpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform(flow: FlowBc, mech: MechBc) -> Self {
        Self {
            planes: [Some(PlaneBc { flow, mech }); 6],
        }
    }

    pub fn with(mut self, plane: Plane, flow: FlowBc, mech: MechBc) -> Self {
        self.planes[plane.index()] = Some(PlaneBc { flow, mech });
        self
    }

    pub fn set(&mut self, plane: Plane, bc: PlaneBc) {
        self.planes[plane.index()] = Some(bc);
    }

    pub fn get(&self, plane: Plane) -> Option<&PlaneBc> {
        self.planes[plane.index()].as_ref()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub axis: Axis,
    /// Cell on the negative and positive side of the face (global normal
    /// points from the first to the second).
    pub cells: [Option<usize>; 2],
    /// Outer plane for boundary faces.
    pub plane: Option<Plane>,
    pub area: f64,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.cells[0].is_some() && self.cells[1].is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Cell edge lengths.
    pub h: Vector3<f64>,
    pub origin: Vector3<f64>,
    boundary: [PlaneBc; 6],
    faces: Vec<Face>,
}

/// Builds the grid on `[0, lengths]`.
pub fn build_grid(
    nx: usize,
    ny: usize,
    nz: usize,
    lengths: [f64; 3],
    boundary: &BoundarySpec,
) -> Result<Grid> {
    Grid::new([nx, ny, nz], lengths, Vector3::zeros(), boundary)
}

impl Grid {
    pub fn new(
        counts: [usize; 3],
        lengths: [f64; 3],
        origin: Vector3<f64>,
        boundary: &BoundarySpec,
    ) -> Result<Self> {
        if counts.contains(&0) {
            return Err(Error::InvalidGrid(format!(
                "cell counts must be positive, got {counts:?}"
            )));
        }
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "lengths must be positive and finite, got {lengths:?}"
            )));
        }
        let mut planes = [PlaneBc {
            flow: FlowBc::NoFlow,
            mech: MechBc::Fixed,
        }; 6];
        for plane in Plane::ALL {
            planes[plane.index()] = *boundary
                .get(plane)
                .ok_or(Error::IncompleteBoundary(plane))?;
        }
        let [nx, ny, nz] = counts;
        let h = Vector3::new(
            lengths[0] / nx as f64,
            lengths[1] / ny as f64,
            lengths[2] / nz as f64,
        );
        let mut grid = Grid {
            nx,
            ny,
            nz,
            h,
            origin,
            boundary: planes,
            faces: Vec::new(),
        };
        grid.faces = grid.build_faces();
        Ok(grid)
    }

    fn build_faces(&self) -> Vec<Face> {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let mut faces = Vec::with_capacity(self.num_faces());
        for axis in Axis::ALL {
            let dims = self.face_dims(axis);
            let area = self.face_area(axis);
            let n_axis = [nx, ny, nz][axis.index()];
            for k in 0..dims[2] {
                for j in 0..dims[1] {
                    for i in 0..dims[0] {
                        let ijk = [i, j, k];
                        let pos = ijk[axis.index()];
                        let mut minus = ijk;
                        let cell_minus = if pos > 0 {
                            minus[axis.index()] -= 1;
                            Some(self.cell_index(minus[0], minus[1], minus[2]))
                        } else {
                            None
                        };
                        let cell_plus = if pos < n_axis {
                            Some(self.cell_index(i, j, k))
                        } else {
                            None
                        };
                        let plane = match (cell_minus, cell_plus) {
                            (None, _) => Some(min_plane(axis)),
                            (_, None) => Some(max_plane(axis)),
                            _ => None,
                        };
                        faces.push(Face {
                            axis,
                            cells: [cell_minus, cell_plus],
                            plane,
                            area,
                        });
                    }
                }
            }
        }
        faces
    }

    fn face_dims(&self, axis: Axis) -> [usize; 3] {
        let mut d = [self.nx, self.ny, self.nz];
        d[axis.index()] += 1;
        d
    }

    fn face_offset(&self, axis: Axis) -> usize {
        Axis::ALL[..axis.index()]
            .iter()
            .map(|&a| self.face_dims(a).iter().product::<usize>())
            .sum()
    }

    pub fn face_area(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.h.y * self.h.z,
            Axis::Y => self.h.x * self.h.z,
            Axis::Z => self.h.x * self.h.y,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1) * (self.nz + 1)
    }

    pub fn num_faces(&self) -> usize {
        Axis::ALL
            .iter()
            .map(|&a| self.face_dims(a).iter().product::<usize>())
            .sum()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.x * self.h.y * self.h.z
    }

    pub fn domain_volume(&self) -> f64 {
        self.cell_volume() * self.num_cells() as f64
    }

    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    pub fn cell_ijk(&self, cell: usize) -> [usize; 3] {
        [
            cell % self.nx,
            (cell / self.nx) % self.ny,
            cell / (self.nx * self.ny),
        ]
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.nx + 1) * (j + (self.ny + 1) * k)
    }

    pub fn node_ijk(&self, node: usize) -> [usize; 3] {
        [
            node % (self.nx + 1),
            (node / (self.nx + 1)) % (self.ny + 1),
            node / ((self.nx + 1) * (self.ny + 1)),
        ]
    }

    pub fn node_position(&self, node: usize) -> Vector3<f64> {
        let [i, j, k] = self.node_ijk(node);
        self.origin
            + Vector3::new(
                i as f64 * self.h.x,
                j as f64 * self.h.y,
                k as f64 * self.h.z,
            )
    }

    pub fn cell_center(&self, cell: usize) -> Vector3<f64> {
        let [i, j, k] = self.cell_ijk(cell);
        self.origin
            + Vector3::new(
                (i as f64 + 0.5) * self.h.x,
                (j as f64 + 0.5) * self.h.y,
                (k as f64 + 0.5) * self.h.z,
            )
    }

    /// The 8 nodes of a cell in local lexicographic order: local index
    /// `a + 2b + 4c` is the node at offset `(a, b, c)`.
    pub fn cell_nodes(&self, cell: usize) -> [usize; 8] {
        let [i, j, k] = self.cell_ijk(cell);
        std::array::from_fn(|l| self.node_index(i + (l & 1), j + ((l >> 1) & 1), k + (l >> 2)))
    }

    pub fn face(&self, face: usize) -> &Face {
        &self.faces[face]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face_index(&self, axis: Axis, i: usize, j: usize, k: usize) -> usize {
        let d = self.face_dims(axis);
        self.face_offset(axis) + i + d[0] * (j + d[1] * k)
    }

    /// The six faces of a cell ordered (-x, +x, -y, +y, -z, +z), each with the
    /// sign that turns the global face normal into the outward normal.
    pub fn cell_to_faces(&self, cell: usize) -> Result<[(usize, f64); 6]> {
        if cell >= self.num_cells() {
            return Err(Error::IndexOutOfRange {
                what: "cell",
                index: cell,
                len: self.num_cells(),
            });
        }
        let [i, j, k] = self.cell_ijk(cell);
        Ok([
            (self.face_index(Axis::X, i, j, k), -1.0),
            (self.face_index(Axis::X, i + 1, j, k), 1.0),
            (self.face_index(Axis::Y, i, j, k), -1.0),
            (self.face_index(Axis::Y, i, j + 1, k), 1.0),
            (self.face_index(Axis::Z, i, j, k), -1.0),
            (self.face_index(Axis::Z, i, j, k + 1), 1.0),
        ])
    }

    pub fn boundary(&self, plane: Plane) -> &PlaneBc {
        &self.boundary[plane.index()]
    }

    pub fn boundary_planes(&self) -> impl Iterator<Item = (Plane, &PlaneBc)> {
        Plane::ALL.iter().map(move |&p| (p, &self.boundary[p.index()]))
    }

    /// Nodes lying on an outer plane, in ascending order.
    pub fn plane_nodes(&self, plane: Plane) -> Vec<usize> {
        let a = plane.axis().index();
        let fixed = if plane.is_max() {
            [self.nx, self.ny, self.nz][a]
        } else {
            0
        };
        (0..self.num_nodes())
            .filter(|&n| self.node_ijk(n)[a] == fixed)
            .collect()
    }

    /// Boundary faces on an outer plane, in ascending order.
    pub fn plane_faces(&self, plane: Plane) -> Vec<usize> {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.plane == Some(plane))
            .map(|(i, _)| i)
            .collect()
    }

    /// Corner nodes of a face.
    pub fn face_nodes(&self, face: usize) -> [usize; 4] {
        let f = &self.faces[face];
        let local = face - self.face_offset(f.axis);
        let d = self.face_dims(f.axis);
        let ijk = [local % d[0], (local / d[0]) % d[1], local / (d[0] * d[1])];
        let (t1, t2) = match f.axis {
            Axis::X => (1, 2),
            Axis::Y => (0, 2),
            Axis::Z => (0, 1),
        };
        std::array::from_fn(|l| {
            let mut n = ijk;
            n[t1] += l & 1;
            n[t2] += l >> 1;
            self.node_index(n[0], n[1], n[2])
        })
    }
}

fn min_plane(axis: Axis) -> Plane {
    match axis {
        Axis::X => Plane::XMin,
        Axis::Y => Plane::YMin,
        Axis::Z => Plane::ZMin,
    }
}

fn max_plane(axis: Axis) -> Plane {
    match axis {
        Axis::X => Plane::XMax,
        Axis::Y => Plane::YMax,
        Axis::Z => Plane::ZMax,
    }
}
