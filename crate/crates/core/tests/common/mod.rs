#![allow(dead_code)]

use std::f64::consts::PI;

use fss_core::coupling::{Loads, Problem};
use fss_core::element::HexQ1;
use fss_core::materials::{ElasticityTensor, FlowProps, MaterialSet, YieldModel};
use fss_core::mesh::{build_grid, Axis, BoundarySpec, FlowBc, MechBc, Plane};
use fss_core::tensor::{self, SymTensor};
use nalgebra::{DMatrix, DVector, Vector3};

pub struct Column {
    pub problem: Problem,
    pub length: f64,
    pub traction: f64,
    /// Undrained pressure `p0`.
    pub p0: f64,
    /// Consolidation coefficient `c_v`.
    pub cv: f64,
}

/// Column along x: drained and loaded at x-max, sealed rollers elsewhere.
pub fn terzaghi_column(cells: usize) -> Column {
    let (young, poisson, alpha, m, k) = (10.0, 0.25, 0.8, 20.0, 1.0);
    let length = 1.0;
    let traction = 1.0;
    let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Roller).with(
        Plane::XMax,
        FlowBc::Dirichlet(0.0),
        MechBc::Traction(Vector3::new(-traction, 0.0, 0.0)),
    );
    let h = length / cells as f64;
    let grid = build_grid(cells, 1, 1, [length, h, h], &bc).unwrap();
    let flow = FlowProps {
        permeability: Vector3::repeat(k),
        viscosity: 1.0,
        compressibility: 0.0,
        reference_density: 1.0,
        rock_density: 2.0,
        initial_porosity: 0.2,
        gravity: Vector3::zeros(),
    };
    let mat = MaterialSet::new(
        ElasticityTensor::isotropic(young, poisson).unwrap(),
        SymTensor::identity() * alpha,
        m,
        None,
        flow,
        None,
    )
    .unwrap();
    // oedometric modulus lambda + 2G from the closed-form Lame constants
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let shear = young / (2.0 * (1.0 + poisson));
    let m_oed = lambda + 2.0 * shear;
    let storage = 1.0 / m + alpha * alpha / m_oed;
    Column {
        problem: Problem::new(grid, mat).unwrap(),
        length,
        traction,
        p0: alpha * traction / (storage * m_oed),
        cv: k / storage,
    }
}

/// Terzaghi series at `x` (drained end at `x = length`), `terms` terms.
pub fn terzaghi_pressure(col: &Column, x: f64, time: f64, terms: usize) -> f64 {
    let xi = x / col.length;
    let td = col.cv * time / (col.length * col.length);
    let mut sum = 0.0;
    for m in 0..terms {
        let n = (2 * m + 1) as f64;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        sum += 4.0 / PI * sign / n * (n * PI * xi / 2.0).cos() * (-(n * n) * PI * PI * td / 4.0).exp();
    }
    col.p0 * sum
}

pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Elastic test problem on an n^3 grid: rollers on the min planes, tractions
/// on x-max and y-max, drainage at x-max, a source, gravity and a
/// compressible fluid.
pub fn block_problem(n: usize, orthotropic: bool) -> Problem {
    let side = 100.0;
    let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Roller)
        .with(
            Plane::XMax,
            FlowBc::Dirichlet(0.05),
            MechBc::Traction(Vector3::new(-0.12, 0.03, 0.0)),
        )
        .with(
            Plane::YMax,
            FlowBc::NoFlow,
            MechBc::Traction(Vector3::new(0.0, -0.06, 0.02)),
        )
        .with(Plane::ZMax, FlowBc::NoFlow, MechBc::Traction(Vector3::zeros()));
    let grid = build_grid(n, n, n, [side, side, side], &bc).unwrap();
    let elasticity = if orthotropic {
        ElasticityTensor::orthotropic([1.2, 0.8, 0.6], 0.2, 0.25, 0.3, [0.3, 0.35, 0.4]).unwrap()
    } else {
        ElasticityTensor::isotropic(1.0, 0.25).unwrap()
    };
    let alpha = if orthotropic {
        SymTensor::from_diagonal(&Vector3::new(0.6, 0.5, 0.4))
    } else {
        SymTensor::identity() * 0.5
    };
    let flow = FlowProps {
        permeability: Vector3::new(200.0, 100.0, 50.0),
        viscosity: 1.0,
        compressibility: 0.1,
        reference_density: 0.1,
        rock_density: 0.25,
        initial_porosity: 0.2,
        gravity: Vector3::new(0.0, 0.0, -1e-3),
    };
    let mat = MaterialSet::new(elasticity, alpha, 1.0, None, flow, None).unwrap();
    Problem::new(grid, mat).unwrap()
}

pub fn block_loads(problem: &Problem) -> Loads {
    let grid = &problem.grid;
    let source = (0..grid.num_cells())
        .map(|c| if c % 3 == 0 { 2e-3 } else { 0.0 })
        .collect();
    Loads {
        source,
        ramp: fss_core::coupling::Ramp::Constant,
    }
}

/// Sealed single cell sheared by prescribed linear displacement, with
/// `beta != alpha` so plastic dilatancy moves the pressure.
pub fn shear_cell(model: YieldModel) -> Problem {
    let mut g = nalgebra::Matrix3::zeros();
    g[(0, 1)] = 0.04;
    let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::LinearDisplacement(g));
    let grid = build_grid(1, 1, 1, [1.0, 1.0, 1.0], &bc).unwrap();
    let flow = FlowProps {
        permeability: Vector3::repeat(1.0),
        viscosity: 1.0,
        compressibility: 0.0,
        reference_density: 1.0,
        rock_density: 2.0,
        initial_porosity: 0.2,
        gravity: Vector3::zeros(),
    };
    let mat = MaterialSet::new(
        ElasticityTensor::isotropic(10.0, 0.25).unwrap(),
        SymTensor::identity() * 0.8,
        20.0,
        Some(SymTensor::identity() * 0.3),
        flow,
        Some(model),
    )
    .unwrap();
    Problem::new(grid, mat).unwrap()
}

/// Plastic column: a Drucker-Prager column compressed and sheared by
/// prescribed displacement of the drained x-max end.
pub fn plastic_column(cells: usize) -> Problem {
    let end = MechBc::Displacement([Some(-0.03), Some(0.04), Some(0.0)]);
    let bc = BoundarySpec::uniform(FlowBc::NoFlow, MechBc::Roller)
        .with(Plane::XMin, FlowBc::NoFlow, MechBc::Fixed)
        .with(Plane::XMax, FlowBc::Dirichlet(0.0), end)
        .with(Plane::YMax, FlowBc::NoFlow, MechBc::Traction(Vector3::zeros()));
    let grid = build_grid(cells, 2, 1, [cells as f64, 2.0, 1.0], &bc).unwrap();
    let flow = FlowProps {
        permeability: Vector3::repeat(1.0),
        viscosity: 1.0,
        compressibility: 0.0,
        reference_density: 1.0,
        rock_density: 2.0,
        initial_porosity: 0.2,
        gravity: Vector3::zeros(),
    };
    let mat = MaterialSet::new(
        ElasticityTensor::isotropic(10.0, 0.25).unwrap(),
        SymTensor::identity() * 0.8,
        20.0,
        None,
        flow,
        Some(YieldModel::DruckerPrager {
            sigma_y: 0.03,
            eta: 0.3,
        }),
    )
    .unwrap();
    Problem::new(grid, mat).unwrap()
}

pub struct MonolithicSolution {
    pub pressure: Vec<f64>,
    pub displacement: Vec<f64>,
}

/// Backward-Euler monolithic solve of the elastic two-field system with a
/// dense LU factorization, marching over `times`.
///
/// Mechanics rows: `K u - G p = f_traction + f_body(p)`; flow rows:
/// `V p / M + sum_q w alpha:eps(u) + dt sum_f s_f F_f(p) = dt q V + (same at t_n)`.
/// Only zero-valued displacement constraints (fixed, roller) are supported.
pub fn monolithic_elastic(
    problem: &Problem,
    loads: &Loads,
    initial_pressure: f64,
    times: &[f64],
) -> MonolithicSolution {
    let grid = &problem.grid;
    let mat = &problem.materials;
    let nu = 3 * grid.num_nodes();
    let np = grid.num_cells();
    let n = nu + np;
    let vol = grid.cell_volume();
    let element = HexQ1::new(grid.h);
    let bmats = element.strain_matrices();
    let w = element.weight();
    let ke = element.stiffness(mat.elasticity.voigt());
    let alpha_v = tensor::voigt_stress(&mat.coupling.alpha);
    let inv_m = 1.0 / mat.coupling.biot_modulus;

    let mut constrained = vec![false; nu];
    for plane in Plane::ALL {
        let dofs: Vec<usize> = match grid.boundary(plane).mech {
            MechBc::Fixed => (0..3).collect(),
            MechBc::Roller => vec![plane.axis().index()],
            MechBc::Traction(_) => vec![],
            other => panic!("oracle does not support {other:?}"),
        };
        for node in grid.plane_nodes(plane) {
            for &d in &dofs {
                constrained[3 * node + d] = true;
            }
        }
    }

    // matrix parts that do not depend on the time step
    let mut k_glob = DMatrix::<f64>::zeros(nu, nu);
    let mut g_glob = DMatrix::<f64>::zeros(nu, np);
    for cell in 0..np {
        let nodes = grid.cell_nodes(cell);
        let dof = |i: usize| 3 * nodes[i / 3] + i % 3;
        for a in 0..24 {
            for b in 0..24 {
                k_glob[(dof(a), dof(b))] += ke[(a, b)];
            }
            let mut g = 0.0;
            for bq in &bmats {
                g += (bq.transpose() * alpha_v)[a] * w;
            }
            g_glob[(dof(a), cell)] += g;
        }
    }

    let mut traction = DVector::<f64>::zeros(nu);
    for plane in Plane::ALL {
        if let MechBc::Traction(t) = grid.boundary(plane).mech {
            for face in grid.plane_faces(plane) {
                let share = grid.face(face).area / 4.0;
                for node in grid.face_nodes(face) {
                    for d in 0..3 {
                        traction[3 * node + d] += t[d] * share;
                    }
                }
            }
        }
    }

    // body force f = (rho phi0 + rho_r (1 - phi0)) g with rho = rho0 (1 + c p)
    let fp = &mat.flow;
    let body_const = (fp.reference_density * fp.initial_porosity
        + fp.rock_density * (1.0 - fp.initial_porosity))
        * fp.gravity;
    let body_slope = fp.reference_density * fp.compressibility * fp.initial_porosity * fp.gravity;

    // two-point fluxes F = T (p_minus - p_plus + rho0 g_a L)
    struct Link {
        minus: Option<usize>,
        plus: Option<usize>,
        trans: f64,
        head: f64,
        value: f64,
    }
    let kappa = fp.permeability / fp.viscosity;
    let mut links = Vec::new();
    for face in grid.faces() {
        let a = match face.axis {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        };
        let h = grid.h[a];
        let interior = face.cells[0].is_some() && face.cells[1].is_some();
        let value = match face.plane {
            Some(p) => match grid.boundary(p).flow {
                FlowBc::NoFlow => continue,
                FlowBc::Dirichlet(v) => v,
            },
            None => 0.0,
        };
        let (trans, dist) = if interior {
            (kappa[a] * face.area / h, h)
        } else {
            (2.0 * kappa[a] * face.area / h, h / 2.0)
        };
        links.push(Link {
            minus: face.cells[0],
            plus: face.cells[1],
            trans,
            head: fp.reference_density * fp.gravity[a] * dist,
            value,
        });
    }

    let strain_row = |cell: usize| -> Vec<(usize, f64)> {
        let nodes = grid.cell_nodes(cell);
        let mut row = [0.0; 24];
        for bq in &bmats {
            let r = bq.transpose() * alpha_v * w;
            for i in 0..24 {
                row[i] += r[i];
            }
        }
        (0..24).map(|i| (3 * nodes[i / 3] + i % 3, row[i])).collect()
    };

    let mut u = DVector::<f64>::zeros(nu);
    let mut p = DVector::<f64>::from_element(np, initial_pressure);
    let mut t_prev = 0.0;
    for &t in times {
        let dt = t - t_prev;
        let lf = loads.ramp.factor(t);
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..nu {
            if constrained[i] {
                a[(i, i)] = 1.0;
                continue;
            }
            for j in 0..nu {
                if !constrained[j] {
                    a[(i, j)] = k_glob[(i, j)];
                }
            }
            for c in 0..np {
                a[(i, nu + c)] = -g_glob[(i, c)];
            }
            rhs[i] = traction[i] * lf;
        }
        for cell in 0..np {
            for node in grid.cell_nodes(cell) {
                for d in 0..3 {
                    let dof = 3 * node + d;
                    if constrained[dof] {
                        continue;
                    }
                    rhs[dof] += body_const[d] * vol / 8.0;
                    a[(dof, nu + cell)] -= body_slope[d] * vol / 8.0;
                }
            }
        }
        for cell in 0..np {
            let row = nu + cell;
            a[(row, row)] += vol * inv_m;
            let mut content_n = vol * inv_m * p[cell];
            for (dof, v) in strain_row(cell) {
                a[(row, dof)] += v;
                content_n += v * u[dof];
            }
            rhs[row] = content_n + dt * loads.source[cell] * vol;
        }
        for l in &links {
            let dtt = dt * l.trans;
            match (l.minus, l.plus) {
                (Some(m), Some(q)) => {
                    a[(nu + m, nu + m)] += dtt;
                    a[(nu + m, nu + q)] -= dtt;
                    a[(nu + q, nu + q)] += dtt;
                    a[(nu + q, nu + m)] -= dtt;
                    rhs[nu + m] -= dtt * l.head;
                    rhs[nu + q] += dtt * l.head;
                }
                (Some(m), None) => {
                    a[(nu + m, nu + m)] += dtt;
                    rhs[nu + m] += dtt * (l.value - l.head);
                }
                (None, Some(q)) => {
                    a[(nu + q, nu + q)] += dtt;
                    rhs[nu + q] += dtt * (l.value + l.head);
                }
                (None, None) => unreachable!(),
            }
        }
        let x = a.lu().solve(&rhs).expect("monolithic system is singular");
        u = x.rows(0, nu).into_owned();
        p = x.rows(nu, np).into_owned();
        t_prev = t;
    }
    MonolithicSolution {
        pressure: p.iter().copied().collect(),
        displacement: u.iter().copied().collect(),
    }
}
