//! Shape checks on a computed curve: monotone, convex, zero beyond `D_max`.

use serde::Serialize;

use super::RDCurve;
use crate::distortion::{d_max_min_sequence, d_max_product, DistortionModel};
use crate::error::{Error, Result};
use crate::prob::SourceModel;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub passed: bool,
    /// Largest violation found, zero when none.
    pub worst: f64,
    pub detail: String,
}

impl PropertyCheck {
    fn new(worst: f64, tol: f64, what: &str) -> Self {
        PropertyCheck {
            passed: worst <= tol,
            worst,
            detail: format!("{what}: worst {worst:.3e}, tolerance {tol:.0e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertiesReport {
    pub points_used: usize,
    pub monotone: PropertyCheck,
    pub convex: PropertyCheck,
    pub zero_beyond_dmax: PropertyCheck,
    pub positive_below_dmax: PropertyCheck,
    pub d_max_min_sequence: f64,
    /// Product-measure form at the output law of the `s = 0` point, if present.
    pub d_max_product: Option<f64>,
}

impl PropertiesReport {
    pub fn passed(&self) -> bool {
        self.monotone.passed && self.convex.passed && self.zero_beyond_dmax.passed && self.positive_below_dmax.passed
    }
}

pub fn properties_report(curve: &RDCurve, source: &SourceModel, dist: &DistortionModel) -> Result<PropertiesReport> {
    let mut pts: Vec<(f64, f64)> = curve.converged().map(|p| (p.distortion, p.rate)).collect();
    if pts.len() < 3 {
        return Err(Error::invalid(
            "curve",
            format!("needs at least 3 converged points, has {}", pts.len()),
        ));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let dmax = d_max_min_sequence(source, dist)?.value;

    let rise = pts.windows(2).map(|w| w[1].1 - w[0].1).fold(0.0, f64::max);

    let mut bulge = 0.0f64;
    for w in pts.windows(3) {
        let ((d1, r1), (d2, r2), (d3, r3)) = (w[0], w[1], w[2]);
        if d3 - d1 > 1e-12 {
            let chord = r1 + (r3 - r1) * (d2 - d1) / (d3 - d1);
            bulge = bulge.max(r2 - chord);
        }
    }

    let beyond = pts
        .iter()
        .filter(|(d, _)| *d >= dmax)
        .map(|(_, r)| *r)
        .fold(0.0, f64::max);

    let deficit = pts
        .iter()
        .filter(|(d, _)| *d < dmax - 1e-3)
        .map(|(_, r)| if *r > 0.0 { 0.0 } else { 1.0 })
        .fold(0.0, f64::max);

    let d_max_product = match curve.points.iter().find(|p| p.s == 0.0) {
        Some(p) => Some(d_max_product(source, &p.output, dist)?),
        None => None,
    };

    Ok(PropertiesReport {
        points_used: pts.len(),
        monotone: PropertyCheck::new(rise, 1e-8, "largest rate increase between neighbours"),
        convex: PropertyCheck::new(bulge, 1e-6, "largest rise above the chord"),
        zero_beyond_dmax: PropertyCheck::new(beyond, 1e-6, "largest rate at D >= D_max"),
        positive_below_dmax: PropertyCheck {
            passed: deficit == 0.0,
            worst: deficit,
            detail: if deficit == 0.0 {
                "every point below D_max - 1e-3 has positive rate".into()
            } else {
                "a point below D_max - 1e-3 has zero rate".into()
            },
        },
        d_max_min_sequence: dmax,
        d_max_product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{FinitePmf, Shape};
    use crate::solver::{sweep, SolverOptions, SweepMode};

    #[test]
    fn too_few_points() {
        let src = SourceModel::iid(FinitePmf::uniform(2), 0).unwrap();
        let dist = DistortionModel::hamming(Shape::new(2, 2, 0).unwrap());
        let c = sweep(&src, &dist, &[0.0], &SolverOptions::default(), SweepMode::Sequential).unwrap();
        assert!(properties_report(&c, &src, &dist).is_err());
    }

    #[test]
    fn zero_distortion_curve() {
        let shape = Shape::new(2, 2, 1).unwrap();
        let src = SourceModel::symmetric_markov(2, 0.2, 1).unwrap();
        let dist = DistortionModel::single_letter(shape, vec![vec![0.0; 2]; 2]).unwrap();
        let c = sweep(
            &src,
            &dist,
            &[-1.0, -5.0],
            &SolverOptions::default(),
            SweepMode::Sequential,
        )
        .unwrap();
        let r = properties_report(&c, &src, &dist).unwrap();
        assert!(r.passed());
        assert!(c.points.iter().all(|p| p.rate.abs() < 1e-12));
    }

    #[test]
    fn binary_curve_passes() {
        let src = SourceModel::iid(FinitePmf::uniform(2), 1).unwrap();
        let dist = DistortionModel::hamming(Shape::new(2, 2, 1).unwrap());
        let grid: Vec<f64> = (1..=10).map(|k| -(k as f64) * 0.8).collect();
        let c = sweep(&src, &dist, &grid, &SolverOptions::default(), SweepMode::Sequential).unwrap();
        let r = properties_report(&c, &src, &dist).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.d_max_product, Some(0.5));
    }
}
