//! Thin-plate-spline RBF morphing of point clouds.
//!
//! A map is fitted from original to displaced control points and then
//! evaluated at arbitrary nodes:
//!
//! `y(x) = Σ_j χ_j Φ(‖x − p_j‖) + c + x·k`, with `Φ(r) = r² ln r`.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, Matrix3, RowVector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fits whose estimated 2-norm condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e14;

const RESIDUAL_TOLERANCE: f64 = 1e-8;

pub type Point = [f64; 3];

/// `r² ln r`, continuous at 0.
pub fn tps_kernel(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPointSet {
    original: Vec<Point>,
    displaced: Vec<Point>,
}

impl ControlPointSet {
    pub fn new(original: Vec<Point>, displaced: Vec<Point>) -> Result<Self> {
        if original.len() != displaced.len() {
            return Err(Error::InvalidParameter(format!(
                "{} original but {} displaced control points",
                original.len(),
                displaced.len()
            )));
        }
        if original.len() < 4 {
            return Err(Error::InvalidParameter(format!(
                "at least 4 control points required, got {}",
                original.len()
            )));
        }
        if original.iter().chain(&displaced).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite control point coordinate".into()));
        }
        for i in 0..original.len() {
            for j in 0..i {
                if original[i] == original[j] {
                    return Err(Error::InvalidParameter(format!(
                        "control points {j} and {i} coincide"
                    )));
                }
            }
        }
        Ok(Self { original, displaced })
    }

    pub fn original(&self) -> &[Point] {
        &self.original
    }

    pub fn displaced(&self) -> &[Point] {
        &self.displaced
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphMap {
    pub original: Vec<Point>,
    /// χ, one row per control point.
    pub weights: Vec<Point>,
    /// k: row `i` multiplies input coordinate `i`.
    pub affine: [[f64; 3]; 3],
    /// c.
    pub offset: Point,
    /// Estimated condition number of the fitted system.
    pub condition: f64,
}

/// The `(n+4)×(n+4)` saddle-point matrix `[[A + λI, B], [Bᵀ, 0]]` with
/// `B = [1 X Y Z]`.
pub fn system_matrix(original: &[Point], regularization: f64) -> DMatrix<f64> {
    let n = original.len();
    let mut m = DMatrix::zeros(n + 4, n + 4);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = tps_kernel(dist(&original[i], &original[j]));
        }
        m[(i, i)] += regularization;
        m[(i, n)] = 1.0;
        m[(n, i)] = 1.0;
        for d in 0..3 {
            m[(i, n + 1 + d)] = original[i][d];
            m[(n + 1 + d, i)] = original[i][d];
        }
    }
    m
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

pub fn fit_morph(cps: &ControlPointSet) -> Result<MorphMap> {
    fit_morph_regularized(cps, 0.0)
}

/// Fits with `λ` added to the kernel diagonal; `λ = 0` interpolates exactly.
pub fn fit_morph_regularized(cps: &ControlPointSet, regularization: f64) -> Result<MorphMap> {
    if !(regularization >= 0.0 && regularization.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "regularization must be finite and >= 0, got {regularization}"
        )));
    }
    let n = cps.len();
    let m = system_matrix(&cps.original, regularization);
    let mut rhs = DMatrix::zeros(n + 4, 3);
    for (i, p) in cps.displaced.iter().enumerate() {
        for d in 0..3 {
            rhs[(i, d)] = p[d];
        }
    }

    let condition = condition_estimate(&m);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Conditioning { estimate: condition });
    }
    let lu = m.clone().lu();
    let mut sol = lu
        .solve(&rhs)
        .ok_or(Error::Conditioning { estimate: condition })?;
    // one step of iterative refinement
    let r = &rhs - &m * &sol;
    if let Some(dx) = lu.solve(&r) {
        sol += dx;
    }

    let residual = (&rhs - &m * &sol).norm();
    let scale = m.norm() * sol.norm() + rhs.norm();
    if !(residual <= RESIDUAL_TOLERANCE * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Conditioning { estimate: condition });
    }

    let weights = (0..n).map(|i| [sol[(i, 0)], sol[(i, 1)], sol[(i, 2)]]).collect();
    let offset = [sol[(n, 0)], sol[(n, 1)], sol[(n, 2)]];
    let mut affine = [[0.0; 3]; 3];
    for (i, row) in affine.iter_mut().enumerate() {
        for (d, v) in row.iter_mut().enumerate() {
            *v = sol[(n + 1 + i, d)];
        }
    }
    Ok(MorphMap {
        original: cps.original.clone(),
        weights,
        affine,
        offset,
        condition,
    })
}

impl MorphMap {
    pub fn eval(&self, x: &Point) -> Point {
        let k = Matrix3::from_fn(|i, d| self.affine[i][d]);
        let xv = RowVector3::new(x[0], x[1], x[2]);
        let lin = xv * k;
        let mut y = [
            self.offset[0] + lin[0],
            self.offset[1] + lin[1],
            self.offset[2] + lin[2],
        ];
        for (p, w) in self.original.iter().zip(&self.weights) {
            let phi = tps_kernel(dist(x, p));
            if phi != 0.0 {
                for d in 0..3 {
                    y[d] += phi * w[d];
                }
            }
        }
        y
    }
}

/// New node coordinates; rows are evaluated in parallel, order preserved.
pub fn apply_morph(map: &MorphMap, nodes: &[Point]) -> Vec<Point> {
    nodes.par_iter().map(|x| map.eval(x)).collect()
}

/// Reads an `id,x,y,z` CSV, keeping row order.
pub fn read_points(reader: impl Read, source: &str) -> Result<Vec<(String, Point)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Ingestion {
        path: source.into(),
        row: 1,
        column: String::new(),
        message: e.to_string(),
    })?;
    let expected = ["id", "x", "y", "z"];
    if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Ingestion {
            path: source.into(),
            row: 1,
            column: String::new(),
            message: "header must be id,x,y,z".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Ingestion {
            path: source.into(),
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        let mut p = [0.0; 3];
        for d in 0..3 {
            let cell = &rec[d + 1];
            p[d] = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Ingestion {
                    path: source.into(),
                    row,
                    column: expected[d + 1].into(),
                    message: format!("'{cell}' is not a finite number"),
                })?;
        }
        out.push((rec[0].to_string(), p));
    }
    Ok(out)
}

pub fn load_points(path: impl AsRef<Path>) -> Result<Vec<(String, Point)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_points(file, &path.display().to_string())
}

pub fn points_csv(points: &[(String, Point)]) -> String {
    let mut out = String::from("id,x,y,z\n");
    for (id, p) in points {
        out.push_str(&format!("{id},{},{},{}\n", p[0], p[1], p[2]));
    }
    out
}

/// Pairs original and displaced control-point files row by row; ids must
/// agree.
pub fn control_points(
    original: Vec<(String, Point)>,
    displaced: Vec<(String, Point)>,
) -> Result<ControlPointSet> {
    if original.len() != displaced.len() {
        return Err(Error::Format(format!(
            "{} original vs {} displaced control points",
            original.len(),
            displaced.len()
        )));
    }
    for (row, ((a, _), (b, _))) in original.iter().zip(&displaced).enumerate() {
        if a != b {
            return Err(Error::Format(format!(
                "control point row {}: id '{a}' vs '{b}'",
                row + 2
            )));
        }
    }
    ControlPointSet::new(
        original.into_iter().map(|(_, p)| p).collect(),
        displaced.into_iter().map(|(_, p)| p).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cube() -> Vec<Point> {
        vec![
            [0.0, 0.0, 0.0],
            [100.0, 0.0, 0.0],
            [0.0, 100.0, 0.0],
            [0.0, 0.0, 100.0],
            [100.0, 100.0, 100.0],
            [50.0, 20.0, 70.0],
        ]
    }

    fn max_abs(m: &MorphMap) -> f64 {
        m.weights.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn kernel_values() {
        assert_eq!(tps_kernel(0.0), 0.0);
        assert_eq!(tps_kernel(1.0), 0.0);
        let e = std::f64::consts::E;
        assert!((tps_kernel(e) - e * e).abs() < 1e-14);
        assert!(tps_kernel(1e-300).abs() < 1e-300);
    }

    #[test]
    fn identity_and_translation() {
        let p = cube();
        let id = fit_morph(&ControlPointSet::new(p.clone(), p.clone()).unwrap()).unwrap();
        assert!(max_abs(&id) < 1e-12);
        for i in 0..3 {
            for d in 0..3 {
                let want = if i == d { 1.0 } else { 0.0 };
                assert!((id.affine[i][d] - want).abs() < 1e-12);
            }
        }
        assert!(id.offset.iter().all(|v| v.abs() < 1e-9));

        let v = [3.0, -7.5, 12.0];
        let moved: Vec<Point> = p.iter().map(|x| [x[0] + v[0], x[1] + v[1], x[2] + v[2]]).collect();
        let tr = fit_morph(&ControlPointSet::new(p.clone(), moved).unwrap()).unwrap();
        assert!(max_abs(&tr) < 1e-12);
        for (o, w) in tr.offset.iter().zip(v) {
            assert!((o - w).abs() < 1e-9);
        }
        let out = apply_morph(&tr, &[[5.0, 5.0, 5.0], [-40.0, 300.0, 1.0]]);
        assert!((out[0][0] - 8.0).abs() < 1e-9 && (out[1][1] - 292.5).abs() < 1e-9);
    }

    #[test]
    fn lifted_patch() {
        // flat 5-point patch plus one off-plane anchor, centre lifted by 10
        let original = vec![
            [0.0, 0.0, 0.0],
            [100.0, 0.0, 0.0],
            [0.0, 100.0, 0.0],
            [100.0, 100.0, 0.0],
            [50.0, 50.0, 0.0],
            [50.0, 50.0, -100.0],
        ];
        let mut displaced = original.clone();
        displaced[4][2] = 10.0;
        let map = fit_morph(&ControlPointSet::new(original.clone(), displaced.clone()).unwrap()).unwrap();
        let at_cps = apply_morph(&map, &original);
        for (a, b) in at_cps.iter().zip(&displaced) {
            assert!(dist(a, b) < 1e-8 * 200.0);
        }
        // bump decays away from the lifted point
        let near = map.eval(&[45.0, 50.0, 0.0])[2];
        let far = map.eval(&[10.0, 50.0, 0.0])[2];
        assert!(near > far && near < 10.0 && near > 0.0);
    }

    #[test]
    fn side_conditions() {
        let p = cube();
        let d: Vec<Point> = p
            .iter()
            .enumerate()
            .map(|(i, x)| [x[0] + (i as f64).sin(), x[1] * 1.01, x[2] - (i * i) as f64 * 0.1])
            .collect();
        let m = fit_morph(&ControlPointSet::new(p.clone(), d).unwrap()).unwrap();
        let scale = max_abs(&m).max(1.0);
        for col in 0..3 {
            let s0: f64 = m.weights.iter().map(|w| w[col]).sum();
            assert!(s0.abs() < 1e-8 * scale);
            for axis in 0..3 {
                let s: f64 = m.weights.iter().zip(&p).map(|(w, x)| w[col] * x[axis]).sum();
                assert!(s.abs() < 1e-8 * scale * 100.0);
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        let p = cube();
        let mut dup = p.clone();
        dup[1] = dup[0];
        assert!(ControlPointSet::new(dup.clone(), dup).is_err());
        assert!(ControlPointSet::new(p[..3].to_vec(), p[..3].to_vec()).is_err());
        let coplanar = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.5, 0.3, 0.0]];
        let cps = ControlPointSet::new(coplanar.clone(), coplanar).unwrap();
        assert!(matches!(fit_morph(&cps), Err(Error::Conditioning { .. })));
    }

    #[test]
    fn point_csv_round_trip() {
        let text = "id,x,y,z\nn7,1.5,-2,3e-3\nn2,0.1,0.2,0.30000000000000004\n";
        let pts = read_points(text.as_bytes(), "mem").unwrap();
        assert_eq!(pts[0].0, "n7");
        assert_eq!(points_csv(&pts), "id,x,y,z\nn7,1.5,-2,0.003\nn2,0.1,0.2,0.30000000000000004\n");
        let bad = "id,x,y,z\na,1,zz,3\n";
        match read_points(bad.as_bytes(), "mem") {
            Err(Error::Ingestion { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "y")),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn interpolates_and_reproduces_affine(
            pts in proptest::collection::vec(proptest::array::uniform3(-50.0f64..50.0), 5..30),
            disp in proptest::collection::vec(proptest::array::uniform3(-5.0f64..5.0), 30),
            l in proptest::array::uniform9(-1.0f64..1.0),
        ) {
            let displaced: Vec<Point> = pts.iter().zip(&disp).map(|(p, d)| [p[0] + d[0], p[1] + d[1], p[2] + d[2]]).collect();
            let map = fit_morph(&ControlPointSet::new(pts.clone(), displaced.clone()).unwrap()).unwrap();
            let diag = 100.0 * 3f64.sqrt();
            for (a, b) in apply_morph(&map, &pts).iter().zip(&displaced) {
                prop_assert!(dist(a, b) < 1e-8 * diag);
            }

            let lin = |x: &Point| -> Point {
                let mut y = [1.0, 2.0, 3.0];
                for d in 0..3 {
                    for i in 0..3 {
                        y[d] += x[i] * (l[3 * i + d] + if i == d { 1.0 } else { 0.0 });
                    }
                }
                y
            };
            let affine: Vec<Point> = pts.iter().map(lin).collect();
            let map = fit_morph(&ControlPointSet::new(pts.clone(), affine).unwrap()).unwrap();
            for x in [[0.0, 0.0, 0.0], [80.0, -60.0, 10.0], [1.0, 2.0, 3.0]] {
                let got = map.eval(&x);
                let want = lin(&x);
                let norm = want.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
                prop_assert!(dist(&got, &want) < 1e-8 * norm);
            }
        }
    }
}
