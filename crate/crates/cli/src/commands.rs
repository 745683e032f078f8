//! One driver per subcommand. Each returns the report text and a status deciding the exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nric::energy::{DeformationEnergy, EnergyKind, QuadraticWeights};
use nric::forward::{angle_defects, nric_from_positions};
use nric::integrability::{max_violation, ConstraintSystem};
use nric::io;
use nric::mesh::{triangle_admissible, NricVector, SimplicialSurface, VertexPositions};
use nric::objectives::{initialize_geodesic, solve_geodesic, solve_objective, DissimilarityObjective, ElasticAverageObjective};
use nric::optim::SolveOutcome;
use nric::reconstruction::{align_rigidly, reconstruct, ReconstructOptions, ReconstructionReport, TreeStrategy};
use nric::tangent::{extrapolate, rigidity_test, RigidityOutcome, INTEGRABILITY_TOLERANCE};
use nric::{Error, Result};

use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NotConverged,
    Infeasible,
}

#[derive(Debug)]
pub struct Outcome {
    pub report: String,
    pub status: Status,
}

/// Connectivity with NRIC, plus positions when the input was a mesh.
struct Coordinates {
    surface: SimplicialSurface,
    z: Vec<f64>,
    positions: Option<VertexPositions>,
}

fn is_nric(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("nric"))
}

/// A mesh file, or an NRIC file together with a mesh supplying the connectivity.
fn load_coordinates(input: &Path, mesh: Option<&Path>) -> Result<Coordinates> {
    if is_nric(input) {
        let mesh = mesh.ok_or_else(|| Error::InvalidArgument("NRIC input needs --mesh for the connectivity".into()))?;
        let shape = io::read_mesh(mesh)?;
        let z = io::read_nric(input, &shape.surface)?.into_vec();
        Ok(Coordinates {
            surface: shape.surface,
            z,
            positions: None,
        })
    } else {
        let shape = io::read_mesh(input)?;
        let z = nric_from_positions(&shape.surface, &shape.positions)?.into_vec();
        Ok(Coordinates {
            surface: shape.surface,
            z,
            positions: Some(shape.positions),
        })
    }
}

fn make_energy<'a>(surface: &'a SimplicialSurface, settings: &Settings, reference: &[f64]) -> Result<DeformationEnergy<'a>> {
    Ok(match settings.energy {
        EnergyKind::Nonlinear => DeformationEnergy::nonlinear(surface, settings.params),
        EnergyKind::Quadratic => {
            let r = NricVector::from_flat(surface, reference.to_vec())?;
            let w = QuadraticWeights::from_reference(surface, &r, settings.recipe)?;
            DeformationEnergy::quadratic(surface, settings.params, w)
        }
    })
}

fn options(settings: &Settings, samples: Vec<Vec<f64>>) -> ReconstructOptions {
    ReconstructOptions {
        strategy: settings.strategy,
        gn_steps: settings.gn_steps,
        params: settings.params,
        seed: None,
        samples,
    }
}

fn solver_status(outcome: &SolveOutcome) -> Status {
    if outcome.report.converged() {
        Status::Success
    } else {
        Status::NotConverged
    }
}

fn section(out: &mut String, title: &str, body: &dyn std::fmt::Display) {
    writeln!(out, "[{title}]\n{body}").unwrap();
}

/// Positions for `z`, moved rigidly onto `align_to` when given.
fn positions_for(
    surface: &SimplicialSurface,
    z: &[f64],
    settings: &Settings,
    align_to: Option<&VertexPositions>,
) -> Result<(VertexPositions, ReconstructionReport)> {
    let (x, report) = reconstruct(surface, z, &options(settings, Vec::new()))?;
    let x = match align_to {
        Some(target) => align_rigidly(&x, target),
        None => x,
    };
    Ok((x, report))
}

pub fn check(input: &Path, mesh: Option<&Path>) -> Result<Outcome> {
    let start = Instant::now();
    let c = load_coordinates(input, mesh)?;
    let s = &c.surface;
    let ne = s.edge_count();
    let mut out = String::new();
    writeln!(out, "vertices = {}", s.vertex_count()).unwrap();
    writeln!(out, "edges = {}", ne).unwrap();
    writeln!(out, "faces = {}", s.face_count()).unwrap();
    writeln!(out, "interior_edges = {}", s.interior_edge_count()).unwrap();
    writeln!(out, "interior_vertices = {}", s.interior_vertices().len()).unwrap();
    writeln!(out, "boundary_loops = {}", s.boundary_loops()).unwrap();
    writeln!(out, "euler_characteristic = {}", s.euler_characteristic()).unwrap();
    let bad: Vec<usize> = (0..s.face_count())
        .filter(|&f| !triangle_admissible(s.face_lengths(f, &c.z[..ne])))
        .collect();
    if !bad.is_empty() {
        writeln!(out, "triangle_inequality = violated").unwrap();
        writeln!(out, "violating_faces = {}", bad.len()).unwrap();
        for f in bad.iter().take(10) {
            writeln!(out, "violating_face = {f}").unwrap();
        }
        writeln!(out, "time_evaluation_s = {:.6}", start.elapsed().as_secs_f64()).unwrap();
        return Ok(Outcome {
            report: out,
            status: Status::Infeasible,
        });
    }
    writeln!(out, "triangle_inequality = ok").unwrap();
    let system = ConstraintSystem::new(s);
    let q = system.residual_flat(&c.z);
    let rot = system.rotation_residual(&NricVector::from_flat(s, c.z.clone())?);
    let qmax = max_violation(&q);
    writeln!(out, "max_constraint_violation = {qmax:e}").unwrap();
    writeln!(out, "max_rotation_residual = {:e}", rot.iter().copied().fold(0.0, f64::max)).unwrap();
    writeln!(out, "integrable = {}", qmax <= INTEGRABILITY_TOLERANCE).unwrap();
    let mut per_vertex: Vec<(usize, f64, f64)> = (0..rot.len())
        .map(|r| (system.vertex_of_block(r), max_violation(&q[3 * r..3 * r + 3]), rot[r]))
        .filter(|&(_, v, _)| v > INTEGRABILITY_TOLERANCE)
        .collect();
    per_vertex.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (v, qv, rv) in per_vertex.iter().take(10) {
        writeln!(out, "violation = vertex {v} q {qv:e} rotation {rv:e}").unwrap();
    }
    writeln!(out, "time_evaluation_s = {:.6}", start.elapsed().as_secs_f64()).unwrap();
    Ok(Outcome {
        report: out,
        status: Status::Success,
    })
}

/// Edge indices, one per line, turned into a per-interior-slot mask.
fn read_selector(path: &Path, surface: &SimplicialSurface) -> Result<Vec<bool>> {
    let edges = io::parse_face_attribute(&fs::read_to_string(path)?)?;
    let mut mask = vec![false; surface.interior_edge_count()];
    for e in edges {
        if e >= surface.edge_count() {
            return Err(Error::InvalidArgument(format!("selector edge {e} out of range")));
        }
        let slot = surface
            .angle_slot(e)
            .ok_or_else(|| Error::InvalidArgument(format!("selector edge {e} is a boundary edge")))?;
        mask[slot] = true;
    }
    Ok(mask)
}

pub struct RigidityArgs<'a> {
    pub input: &'a Path,
    pub mesh: Option<&'a Path>,
    pub selector: Option<&'a Path>,
    pub threshold: f64,
    pub step: f64,
    pub output: Option<&'a Path>,
}

pub fn rigidity(args: &RigidityArgs, settings: &Settings) -> Result<Outcome> {
    let start = Instant::now();
    let c = load_coordinates(args.input, args.mesh)?;
    let s = &c.surface;
    let system = ConstraintSystem::new(s);
    let selector = args.selector.map(|p| read_selector(p, s)).transpose()?;
    let outcome = rigidity_test(&system, &c.z, selector.as_deref(), args.threshold)?;
    let mut out = String::new();
    let mut status = Status::Success;
    match outcome {
        RigidityOutcome::NoCandidateSubspace { kernel_dim } => {
            writeln!(out, "outcome = no_candidate_subspace").unwrap();
            writeln!(out, "kernel_dim = {kernel_dim}").unwrap();
        }
        RigidityOutcome::Tested(r) => {
            writeln!(out, "outcome = {}", if r.is_flexible() { "flexible" } else { "rigid" }).unwrap();
            writeln!(out, "kernel_dim = {}", r.kernel_dim).unwrap();
            writeln!(out, "candidate_angles = {}", r.candidate_angles).unwrap();
            writeln!(out, "lambda0 = {:e}", r.lambda0).unwrap();
            writeln!(out, "sigma_max = {:e}", r.sigma_max).unwrap();
            writeln!(out, "lambda0_normalized = {:e}", r.normalized_lambda0()).unwrap();
            writeln!(out, "threshold = {:e}", r.threshold).unwrap();
            let support: Vec<String> = r.support.iter().map(|e| e.to_string()).collect();
            writeln!(out, "support_edges = {}", support.join(" ")).unwrap();
            if let (Some(w), Some(path)) = (&r.variation, args.output) {
                let moved = extrapolate(&system, &c.z, w, args.step, &settings.params, &settings.solver)?;
                status = solver_status(&moved);
                section(&mut out, "extrapolation", &moved.report);
                let (x, rec) = positions_for(s, &moved.z, settings, c.positions.as_ref())?;
                section(&mut out, "reconstruction", &rec);
                io::write_obj(path, s, &x)?;
            }
        }
    }
    writeln!(out, "time_total_s = {:.6}", start.elapsed().as_secs_f64()).unwrap();
    Ok(Outcome { report: out, status })
}

pub struct DeformArgs<'a> {
    pub input: &'a Path,
    pub constraints: Option<&'a Path>,
    pub output: &'a Path,
    pub nric_output: Option<&'a Path>,
}

pub fn deform(args: &DeformArgs, settings: &Settings) -> Result<Outcome> {
    let shape = io::read_mesh(args.input)?;
    let s = &shape.surface;
    let reference = nric_from_positions(s, &shape.positions)?.into_vec();
    let pinned = match args.constraints {
        Some(p) => io::read_constraints(p)?,
        None => Default::default(),
    };
    let mut z0 = reference.clone();
    let fixed = pinned.apply(s, &mut z0)?;
    let energy = make_energy(s, settings, &reference)?;
    let objective = DissimilarityObjective::new(energy, reference)?;
    let system = ConstraintSystem::new(s);
    let solved = solve_objective(&objective, &system, z0, &fixed, &settings.solver)?;
    let mut out = String::new();
    writeln!(out, "fixed_coordinates = {}", fixed.iter().filter(|&&f| f).count()).unwrap();
    section(&mut out, "solver", &solved.report);
    let (x, rec) = positions_for(s, &solved.z, settings, Some(&shape.positions))?;
    section(&mut out, "reconstruction", &rec);
    io::write_obj(args.output, s, &x)?;
    if let Some(p) = args.nric_output {
        io::write_nric(p, s, &NricVector::from_flat(s, solved.z.clone())?)?;
    }
    let defects = angle_defects(s, &x);
    writeln!(out, "[angle_defect]").unwrap();
    writeln!(out, "max_angle_defect = {:e}", defects.iter().fold(0.0_f64, |m, d| m.max(d.abs()))).unwrap();
    for (v, d) in s.interior_vertices().iter().zip(&defects) {
        writeln!(out, "vertex {v} = {:e}", d.abs()).unwrap();
    }
    Ok(Outcome {
        report: out,
        status: solver_status(&solved),
    })
}

pub struct AverageArgs<'a> {
    pub inputs: &'a [PathBuf],
    pub weights: Option<&'a [f64]>,
    pub output: &'a Path,
}

/// Loads meshes that must share one connectivity.
fn load_family(paths: &[PathBuf]) -> Result<(SimplicialSurface, Vec<VertexPositions>, Vec<Vec<f64>>)> {
    let first = io::read_mesh(&paths[0])?;
    let mut positions = vec![first.positions];
    for p in &paths[1..] {
        let shape = io::read_mesh(p)?;
        if shape.surface.faces() != first.surface.faces() {
            return Err(Error::InvalidArgument(format!("{} does not share the connectivity of {}", p.display(), paths[0].display())));
        }
        positions.push(shape.positions);
    }
    let s = first.surface;
    let zs = positions
        .iter()
        .map(|x| nric_from_positions(&s, x).map(NricVector::into_vec))
        .collect::<Result<Vec<_>>>()?;
    Ok((s, positions, zs))
}

pub fn average(args: &AverageArgs, settings: &Settings) -> Result<Outcome> {
    if args.inputs.is_empty() {
        return Err(Error::InvalidArgument("average needs at least one mesh".into()));
    }
    let (s, positions, zs) = load_family(args.inputs)?;
    let n = zs.len();
    let weights = match args.weights {
        Some(w) if w.len() != n => {
            return Err(Error::InvalidArgument(format!("{} weights for {n} meshes", w.len())));
        }
        Some(w) => w.to_vec(),
        None => vec![1.0 / n as f64; n],
    };
    let start: Vec<f64> = (0..zs[0].len()).map(|i| zs.iter().zip(&weights).map(|(z, w)| w * z[i]).sum()).collect();
    let energy = make_energy(&s, settings, &zs[0])?;
    let objective = ElasticAverageObjective::new(energy.clone(), zs.clone(), weights.clone())?;
    let system = ConstraintSystem::new(&s);
    let solved = solve_objective(&objective, &system, start, &vec![false; zs[0].len()], &settings.solver)?;
    let mut out = String::new();
    section(&mut out, "solver", &solved.report);
    for (i, z) in zs.iter().enumerate() {
        writeln!(out, "energy_to_input_{i} = {:e}", energy.value(z, &solved.z)).unwrap();
    }
    let (x, rec) = positions_for(&s, &solved.z, settings, Some(&positions[0]))?;
    section(&mut out, "reconstruction", &rec);
    io::write_obj(args.output, &s, &x)?;
    Ok(Outcome {
        report: out,
        status: solver_status(&solved),
    })
}

pub struct GeodesicArgs<'a> {
    pub start: &'a Path,
    pub end: &'a Path,
    pub segments: usize,
    pub fix_lengths: bool,
    pub out_dir: &'a Path,
}

fn relative_spread(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

pub fn geodesic(args: &GeodesicArgs, settings: &Settings) -> Result<Outcome> {
    if args.segments < 2 {
        return Err(Error::InvalidArgument("a geodesic needs at least two segments".into()));
    }
    let (s, positions, zs) = load_family(&[args.start.to_path_buf(), args.end.to_path_buf()])?;
    let ne = s.edge_count();
    let (za, mut zb) = (zs[0].clone(), zs[1].clone());
    if args.fix_lengths {
        let gap = za[..ne].iter().zip(&zb[..ne]).map(|(a, b)| (a - b).abs() / a).fold(0.0, f64::max);
        if gap > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "--fix-lengths needs endpoints with equal edge lengths (relative gap {gap:e})"
            )));
        }
        zb[..ne].copy_from_slice(&za[..ne]);
    }
    let mut path = initialize_geodesic(&s, &za, &zb, args.segments)?;
    if args.fix_lengths {
        for shape in &mut path.shapes {
            shape[..ne].copy_from_slice(&za[..ne]);
        }
    }
    let energy = make_energy(&s, settings, &za)?;
    let initial = path.segment_energies(&energy);
    let fixed: Vec<bool> = (0..za.len()).map(|i| args.fix_lengths && i < ne).collect();
    let (path, solved) = solve_geodesic(energy.clone(), &path, &fixed, &settings.solver)?;
    let energies = path.segment_energies(&energy);
    let mut out = String::new();
    section(&mut out, "solver", &solved.report);
    writeln!(out, "[segments]").unwrap();
    writeln!(out, "path_energy = {:e}", path.path_energy(&energy)).unwrap();
    writeln!(out, "relative_spread = {:e}", relative_spread(&energies)).unwrap();
    writeln!(out, "relative_spread_initial = {:e}", relative_spread(&initial)).unwrap();
    for (k, (e, e0)) in energies.iter().zip(&initial).enumerate() {
        writeln!(out, "segment {} = {e:e} initial {e0:e}", k + 1).unwrap();
    }
    fs::create_dir_all(args.out_dir)?;
    let mut previous = positions[0].clone();
    let mut worst = 0.0_f64;
    for (k, z) in path.shapes.iter().enumerate() {
        let x = if k == 0 {
            positions[0].clone()
        } else if k == path.segments() {
            positions[1].clone()
        } else {
            let (x, rec) = positions_for(&s, z, settings, Some(&previous))?;
            worst = worst.max(rec.nric_error);
            x
        };
        io::write_obj(&args.out_dir.join(format!("shape_{k:03}.obj")), &s, &x)?;
        previous = x;
    }
    writeln!(out, "max_reconstruction_error = {worst:e}").unwrap();
    Ok(Outcome {
        report: out,
        status: solver_status(&solved),
    })
}

pub struct ReconstructArgs<'a> {
    pub input: &'a Path,
    pub mesh: &'a Path,
    pub samples: &'a [PathBuf],
    pub output: &'a Path,
    pub order: Option<&'a Path>,
}

pub fn reconstruct_cmd(args: &ReconstructArgs, settings: &Settings) -> Result<Outcome> {
    let shape = io::read_mesh(args.mesh)?;
    let s = &shape.surface;
    let z = io::read_nric(args.input, s)?.into_vec();
    let samples = args
        .samples
        .iter()
        .map(|p| io::read_nric(p, s).map(NricVector::into_vec))
        .collect::<Result<Vec<_>>>()?;
    if !samples.is_empty() && settings.strategy != TreeStrategy::Preassembled {
        return Err(Error::InvalidArgument("--sample is only used with --strategy pre".into()));
    }
    let start = Instant::now();
    let (x, report) = reconstruct(s, &z, &options(settings, samples))?;
    let elapsed = start.elapsed();
    io::write_obj(args.output, s, &x)?;
    if let Some(p) = args.order {
        io::write_face_attribute(p, "traversal order", &report.traversal_rank)?;
    }
    let mut out = report.to_string();
    writeln!(out, "\ntime_total_s = {:.6}", elapsed.as_secs_f64()).unwrap();
    let status = if report.degenerate_faces.is_empty() {
        Status::Success
    } else {
        Status::Infeasible
    };
    Ok(Outcome { report: out, status })
}

/// Mesh to NRIC, NRIC to mesh, or mesh to OBJ, chosen by the file extensions.
pub fn convert(input: &Path, output: &Path, mesh: Option<&Path>, settings: &Settings) -> Result<Outcome> {
    let c = load_coordinates(input, mesh)?;
    let s = &c.surface;
    let out_ext = output.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let mut report = String::new();
    match out_ext.as_deref() {
        Some("nric") => io::write_nric(output, s, &NricVector::from_flat(s, c.z)?)?,
        Some("obj") => {
            let x = match c.positions {
                Some(x) => x,
                None => {
                    let (x, rec) = positions_for(s, &c.z, settings, None)?;
                    report = rec.to_string();
                    x
                }
            };
            io::write_obj(output, s, &x)?;
        }
        _ => return Err(Error::InvalidArgument(format!("cannot write {} (use .nric or .obj)", output.display()))),
    }
    writeln!(report, "\nwrote = {}", output.display()).unwrap();
    Ok(Outcome {
        report: report.trim_start().to_string(),
        status: Status::Success,
    })
}
