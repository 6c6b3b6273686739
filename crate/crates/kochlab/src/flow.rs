//! The special flow under a roof function over an irrational rotation, the
//! product flow, and matched-pair geometry.

use crate::error::{Error, Result};
use crate::roof::{birkhoff_sum, DerivOrder, RoofFunction};
use crate::rotation::{orbit_point, CirclePos, Rotation};

/// A point (x_h, x_v) of the flow space, with 0 <= x_v < f(x_h).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowPoint {
    pub x_h: CirclePos,
    pub x_v: f64,
}

impl FlowPoint {
    /// Validates the vertical invariant against the given roof.
    pub fn new(f: &RoofFunction, x_h: CirclePos, x_v: f64) -> Result<FlowPoint> {
        let roof = f.eval(x_h, DerivOrder::Value)?;
        if !(0.0..roof).contains(&x_v) {
            return Err(Error::VerticalInvariant { value: x_v, roof });
        }
        Ok(FlowPoint { x_h, x_v })
    }

    pub fn new_unchecked(x_h: CirclePos, x_v: f64) -> FlowPoint {
        FlowPoint { x_h, x_v }
    }
}

/// A pair of flow points, one in each factor of the product system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductPoint {
    pub first: FlowPoint,
    pub second: FlowPoint,
}

/// Horizontal and full-metric separation of a matched pair of product points.
#[derive(Clone, Copy, Debug)]
pub struct PairGeometry {
    /// max of the two horizontal distances, in [0, 1/2]
    pub l_h: f64,
    /// max of the two flow-space distances; always >= l_h
    pub l: f64,
}

/// Result of one flow step: the moved point, the crossing count N, the
/// margin to the vertical invariant boundary, and whether the sandwich was
/// decided within 1e-12 of a boundary.
#[derive(Clone, Copy, Debug)]
pub struct FlowStep {
    pub point: FlowPoint,
    pub n: i64,
    pub boundary_margin: f64,
    pub near_boundary: bool,
}

const BOUNDARY_TOL: f64 = 1e-12;

/// T_t(p) = (x_h + N alpha, x_v + t - f^{(N)}(x_h)) with N the unique
/// integer with f^{(N)}(x_h) <= x_v + t < f^{(N+1)}(x_h).
///
/// The search is seeded at round(t/mean) and walks monotonically; it never
/// scans from zero, so t of order 10^7 stays affordable.
pub fn flow(f: &RoofFunction, rot: &Rotation, p: &FlowPoint, t: f64) -> Result<FlowStep> {
    if !t.is_finite() {
        return Err(Error::Precondition("t must be finite".into()));
    }
    let target = p.x_v + t;
    let mut n = (t / f.mean()).round() as i64;
    let mut s = birkhoff_sum(f, rot, p.x_h, n, DerivOrder::Value)?.value;
    loop {
        if target < s {
            let (prev, _) = orbit_point(rot, p.x_h, n - 1)?;
            s -= f.eval(prev, DerivOrder::Value)?;
            n -= 1;
        } else {
            let (base, _) = orbit_point(rot, p.x_h, n)?;
            let roof = f.eval(base, DerivOrder::Value)?;
            if target < s + roof {
                let x_v = target - s;
                let margin = x_v.min(roof - x_v);
                return Ok(FlowStep {
                    point: FlowPoint { x_h: base, x_v },
                    n,
                    boundary_margin: margin,
                    near_boundary: margin < BOUNDARY_TOL,
                });
            }
            s += roof;
            n += 1;
        }
    }
}

/// The time-one map of the product flow, applied componentwise. Returns the
/// moved pair and both crossing counts.
pub fn time_one_product(
    f1: &RoofFunction,
    f2: &RoofFunction,
    rot1: &Rotation,
    rot2: &Rotation,
    pp: &ProductPoint,
) -> Result<(ProductPoint, i64, i64)> {
    let a = flow(f1, rot1, &pp.first, 1.0)?;
    let b = flow(f2, rot2, &pp.second, 1.0)?;
    Ok((
        ProductPoint {
            first: a.point,
            second: b.point,
        },
        a.n,
        b.n,
    ))
}

/// d_H(p, q) + |p_v - q_v|, the sum metric on the flow space.
pub fn flow_distance(p: &FlowPoint, q: &FlowPoint) -> f64 {
    p.x_h.dist(q.x_h).value() + (p.x_v - q.x_v).abs()
}

/// L_H and L for a pair of product points.
pub fn pair_geometry(a: &ProductPoint, b: &ProductPoint) -> PairGeometry {
    let dh1 = a.first.x_h.dist(b.first.x_h).value();
    let dh2 = a.second.x_h.dist(b.second.x_h).value();
    let d1 = flow_distance(&a.first, &b.first);
    let d2 = flow_distance(&a.second, &b.second);
    PairGeometry {
        l_h: dh1.max(dh2),
        l: d1.max(d2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (RoofFunction, Rotation) {
        (
            RoofFunction::new(-0.5, true).unwrap(),
            Rotation::golden(40).unwrap(),
        )
    }

    #[test]
    fn short_flow_stays_in_fiber() {
        let (f, rot) = setup();
        let p = FlowPoint::new(&f, CirclePos::from_f64(0.3), 0.1).unwrap();
        let roof = f.eval(p.x_h, DerivOrder::Value).unwrap();
        let step = flow(&f, &rot, &p, (roof - 0.1) / 2.0).unwrap();
        assert_eq!(step.n, 0);
        assert_eq!(step.point.x_h, p.x_h);
        assert!((step.point.x_v - (0.1 + (roof - 0.1) / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_time_is_identity() {
        let (f, rot) = setup();
        let p = FlowPoint::new(&f, CirclePos::from_f64(0.71), 0.05).unwrap();
        let step = flow(&f, &rot, &p, 0.0).unwrap();
        assert_eq!(step.n, 0);
        assert_eq!(step.point.x_h, p.x_h);
        assert_eq!(step.point.x_v, p.x_v);
    }

    #[test]
    fn group_property_and_n_additivity() {
        let (f, rot) = setup();
        let p = FlowPoint::new(&f, CirclePos::from_f64(0.123), 0.02).unwrap();
        let ab = flow(&f, &rot, &p, 4.2).unwrap();
        let a = flow(&f, &rot, &p, 1.3).unwrap();
        let b = flow(&f, &rot, &a.point, 2.9).unwrap();
        assert_eq!(ab.n, a.n + b.n);
        assert!(flow_distance(&ab.point, &b.point) < 1e-9);
    }

    #[test]
    fn reversibility() {
        let (f, rot) = setup();
        let p = FlowPoint::new(&f, CirclePos::from_f64(0.456), 0.3).unwrap();
        let fwd = flow(&f, &rot, &p, 17.3).unwrap();
        let back = flow(&f, &rot, &fwd.point, -17.3).unwrap();
        assert!(flow_distance(&back.point, &p) < 1e-9);
    }

    #[test]
    fn sandwich_recheck() {
        let (f, rot) = setup();
        let p = FlowPoint::new(&f, CirclePos::from_f64(0.9), 0.4).unwrap();
        for &t in &[0.7, 3.3, -5.1, 42.0] {
            let step = flow(&f, &rot, &p, t).unwrap();
            let lo = birkhoff_sum(&f, &rot, p.x_h, step.n, DerivOrder::Value)
                .unwrap()
                .value;
            let hi = birkhoff_sum(&f, &rot, p.x_h, step.n + 1, DerivOrder::Value)
                .unwrap()
                .value;
            let target = p.x_v + t;
            assert!(lo <= target && target < hi);
        }
    }

    #[test]
    fn product_componentwise() {
        let f1 = RoofFunction::new(-0.3, true).unwrap();
        let f2 = RoofFunction::new(-0.7, true).unwrap();
        let rot1 = Rotation::golden(40).unwrap();
        let rot2 = Rotation::sqrt2m1(30).unwrap();
        let pp = ProductPoint {
            first: FlowPoint::new(&f1, CirclePos::from_f64(0.21), 0.1).unwrap(),
            second: FlowPoint::new(&f2, CirclePos::from_f64(0.68), 0.2).unwrap(),
        };
        let (next, n, m) = time_one_product(&f1, &f2, &rot1, &rot2, &pp).unwrap();
        let a = flow(&f1, &rot1, &pp.first, 1.0).unwrap();
        let b = flow(&f2, &rot2, &pp.second, 1.0).unwrap();
        assert_eq!(next.first, a.point);
        assert_eq!(next.second, b.point);
        assert_eq!((n, m), (a.n, b.n));
    }

    #[test]
    fn iterated_time_one_matches_single_call() {
        let (f, rot) = setup();
        let mut p = FlowPoint::new(&f, CirclePos::from_f64(0.345), 0.12).unwrap();
        let mut total_n = 0i64;
        for _ in 0..1000 {
            let s = flow(&f, &rot, &p, 1.0).unwrap();
            p = s.point;
            total_n += s.n;
        }
        let single = flow(
            &f,
            &rot,
            &FlowPoint::new(&f, CirclePos::from_f64(0.345), 0.12).unwrap(),
            1000.0,
        )
        .unwrap();
        assert_eq!(single.n, total_n);
        assert!(flow_distance(&single.point, &p) < 1e-7);
    }

    #[test]
    fn metric_basics() {
        let (f, _) = setup();
        let p = FlowPoint::new(&f, CirclePos::from_f64(0.1), 0.2).unwrap();
        let q = FlowPoint::new(&f, CirclePos::from_f64(0.9), 0.2).unwrap();
        assert_eq!(flow_distance(&p, &p), 0.0);
        assert!((flow_distance(&p, &q) - 0.2).abs() < 1e-12);
        assert_eq!(flow_distance(&p, &q), flow_distance(&q, &p));
    }

    #[test]
    fn pair_geometry_vertical_only() {
        let f2 = RoofFunction::new(-0.5, true).unwrap();
        let shared = FlowPoint::new(&f2, CirclePos::from_f64(0.3), 0.1).unwrap();
        let a = ProductPoint {
            first: shared,
            second: FlowPoint::new(&f2, CirclePos::from_f64(0.6), 0.1).unwrap(),
        };
        let b = ProductPoint {
            first: shared,
            second: FlowPoint::new(&f2, CirclePos::from_f64(0.6), 0.4).unwrap(),
        };
        let g = pair_geometry(&a, &b);
        assert_eq!(g.l_h, 0.0);
        assert!((g.l - 0.3).abs() < 1e-12);
        let gg = pair_geometry(&a, &a);
        assert_eq!((gg.l_h, gg.l), (0.0, 0.0));
    }
}
