use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

use nric::energy::{DeformationEnergy, MaterialParameters, QuadraticWeights, WeightRecipe};
use nric::forward::nric_from_positions;
use nric::generators::{self, Shape};
use nric::integrability::{max_violation, ConstraintSystem};
use nric::io::{nric_string, parse_nric};
use nric::mesh::{NricVector, VertexPositions};
use nric::quaternion::transition_quaternion;
use nric::reconstruction::{procrustes_rms, reconstruct, ReconstructOptions, TreeStrategy};
use nric::sparse::Triplets;

const GRID: usize = 4;
const VERTICES: usize = (GRID + 1) * (GRID + 1);

/// A 4×4 plate over [-1, 1]² with every vertex moved by up to 0.08 in each direction. Grid
/// spacing is 0.5, so no face degenerates.
fn jittered(jitter: &[f64]) -> Shape {
    let base = generators::height_field(GRID, |x, y| 0.2 * x * y);
    let moved = base
        .positions
        .as_slice()
        .iter()
        .zip(jitter.chunks(3))
        .map(|(p, d)| p + Vector3::new(d[0], d[1], d[2]))
        .collect();
    Shape {
        surface: base.surface,
        positions: VertexPositions::new(moved),
    }
}

fn jitter() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-0.08..0.08f64, 3 * VERTICES)
}

fn nric(s: &Shape) -> Vec<f64> {
    nric_from_positions(&s.surface, &s.positions).unwrap().into_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rigid_motions_leave_coordinates_unchanged(
        j in jitter(),
        axis in (-1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64),
        angle in -3.1..3.1f64,
        shift in (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64),
    ) {
        let s = jittered(&j);
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(axis.0, axis.1, axis.2)), angle);
        let t = Vector3::new(shift.0, shift.1, shift.2);
        let moved = s.map_positions(|p| r * p + t);
        for (a, b) in nric(&s).iter().zip(nric(&moved)) {
            prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn coordinates_of_embedded_meshes_are_integrable(j in jitter()) {
        let s = jittered(&j);
        let q = max_violation(&ConstraintSystem::new(&s.surface).residual_flat(&nric(&s)));
        prop_assert!(q < 1e-10, "{q:e}");
    }

    #[test]
    fn reconstruction_recovers_the_shape(j in jitter(), which in 0..4usize, gn_steps in 0..3usize) {
        let s = jittered(&j);
        let strategy = [TreeStrategy::Bfs, TreeStrategy::Mst, TreeStrategy::Spt, TreeStrategy::Preassembled][which];
        let options = ReconstructOptions { strategy, gn_steps, ..Default::default() };
        let (x, report) = reconstruct(&s.surface, &nric(&s), &options).unwrap();
        prop_assert!(report.nric_error < 1e-8, "{:e}", report.nric_error);
        prop_assert!(procrustes_rms(&x, &s.positions) < 1e-8 * s.positions.diameter());
    }

    #[test]
    fn energies_vanish_on_the_diagonal_and_are_nonnegative(a in jitter(), b in jitter(), delta in 0.01..1.0f64) {
        let (sa, sb) = (jittered(&a), jittered(&b));
        let surface = &sa.surface;
        let (za, zb) = (nric(&sa), nric(&sb));
        let params = MaterialParameters { delta, ..Default::default() };
        let weights = QuadraticWeights::from_reference(surface, &NricVector::from_flat(surface, za.clone()).unwrap(), WeightRecipe::InverseLength).unwrap();
        let nonlinear = DeformationEnergy::nonlinear(surface, params);
        let quadratic = DeformationEnergy::quadratic(surface, params, weights);
        for e in [&nonlinear, &quadratic] {
            prop_assert!(e.value(&za, &za).abs() < 1e-12);
            prop_assert!(e.value(&za, &zb) >= 0.0);
        }
        prop_assert!(nonlinear.membrane(&za, &zb) >= 0.0);
        prop_assert!(nonlinear.bending(&za, &zb) >= 0.0);
    }

    #[test]
    fn nric_text_round_trip_is_bit_exact(j in jitter(), scale in 1e-3..1e3f64) {
        let s = jittered(&j).map_positions(|p| p * scale);
        let z = NricVector::from_flat(&s.surface, nric(&s)).unwrap();
        let back = parse_nric(&nric_string(&s.surface, &z)).unwrap().to_nric(&s.surface).unwrap();
        prop_assert_eq!(back.as_slice(), z.as_slice());
    }

    #[test]
    fn transition_quaternions_are_unit(theta in -3.1..3.1f64, a in 0.1..2.0f64, b in 0.1..2.0f64, t in 0.01..0.99f64) {
        // c strictly between |a − b| and a + b.
        let c = (a - b).abs() + t * (a + b - (a - b).abs());
        let q = transition_quaternion(theta, a, b, c).unwrap();
        prop_assert!((q.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triplet_conversion_sums_duplicates(entries in proptest::collection::vec((0..6usize, 0..5usize, -10.0..10.0f64), 0..40)) {
        let mut t = Triplets::new(6, 5);
        let mut dense = nalgebra::DMatrix::zeros(6, 5);
        for &(i, j, v) in &entries {
            t.push(i, j, v);
            dense[(i, j)] += v;
        }
        let csc = t.to_csc();
        prop_assert!((csc.to_dense() - dense).amax() < 1e-12);
        for j in 0..5 {
            let rows: Vec<usize> = csc.column(j).map(|(i, _)| i).collect();
            prop_assert!(rows.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
