use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioConfig;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Union of equal hexagonal cells, one per RU.
///
/// Cells have flat sides facing their neighbours: apothem `d_RU / 2`,
/// circumradius `d_RU / sqrt(3)`, vertices at 30 + 60k degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRegion {
    pub centers: Vec<Point>,
    pub apothem_km: f64,
}

impl CellRegion {
    pub fn circumradius_km(&self) -> f64 {
        self.apothem_km * 2.0 / 3f64.sqrt()
    }

    pub fn cell_area(&self) -> f64 {
        2.0 * 3f64.sqrt() * self.apothem_km * self.apothem_km
    }

    pub fn area(&self) -> f64 {
        self.cell_area() * self.centers.len() as f64
    }

    pub fn centroid(&self) -> Point {
        let n = self.centers.len() as f64;
        let (sx, sy) = self
            .centers
            .iter()
            .fold((0.0, 0.0), |(x, y), c| (x + c[0], y + c[1]));
        [sx / n, sy / n]
    }

    /// Vertices of cell `i`, counter-clockwise.
    pub fn hexagon(&self, i: usize) -> Vec<Point> {
        let c = self.centers[i];
        let r = self.circumradius_km();
        (0..6)
            .map(|k| {
                let a = (30.0 + 60.0 * k as f64).to_radians();
                [c[0] + r * a.cos(), c[1] + r * a.sin()]
            })
            .collect()
    }

    fn in_cell(&self, i: usize, p: Point) -> bool {
        let dx = p[0] - self.centers[i][0];
        let dy = p[1] - self.centers[i][1];
        (0..6).all(|k| {
            let a = (60.0 * k as f64).to_radians();
            dx * a.cos() + dy * a.sin() <= self.apothem_km * (1.0 + 1e-12)
        })
    }

    pub fn contains(&self, p: Point) -> bool {
        (0..self.centers.len()).any(|i| self.in_cell(i, p))
    }

    /// One point uniformly distributed over the region.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let cell = rng.random_range(0..self.centers.len());
        let r = self.circumradius_km();
        let a = self.apothem_km;
        let c = self.centers[cell];
        loop {
            let dx = rng.random_range(-a..a);
            let dy = rng.random_range(-r..r);
            let p = [c[0] + dx, c[1] + dy];
            if self.in_cell(cell, p) {
                return p;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub ru_positions: Vec<Point>,
    pub cell_region: CellRegion,
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Deterministic RU layout: one RU at the origin plus a ring of six at
/// distance `d_RU` for N = 7, a single RU for N = 1, or the explicit
/// positions from the configuration.
pub fn build_topology(config: &ScenarioConfig) -> Result<Topology> {
    let n = config.num_rus;
    let d = config.inter_ru_distance_km;
    let positions: Vec<Point> = match (&config.ru_positions_km, n) {
        (Some(p), _) => p.clone(),
        (None, 1) => vec![[0.0, 0.0]],
        (None, 7) => std::iter::once([0.0, 0.0])
            .chain((0..6).map(|k| {
                let a = (60.0 * k as f64).to_radians();
                [d * a.cos(), d * a.sin()]
            }))
            .collect(),
        (None, _) => {
            return Err(Error::Layout(format!(
                "{n} RUs need explicit ru_positions_km (only 1 and 7 are built in)"
            )))
        }
    };
    if positions.len() != n {
        return Err(Error::Layout(format!("{} positions for {n} RUs", positions.len())));
    }
    if n > 1 {
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                min = min.min(distance(positions[i], positions[j]));
            }
        }
        if (min - d).abs() > 1e-6 * d {
            return Err(Error::Layout(format!(
                "closest RU pair is {min} km apart, expected {d} km"
            )));
        }
    }
    Ok(Topology {
        cell_region: CellRegion { centers: positions.clone(), apothem_km: d / 2.0 },
        ru_positions: positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn seven_cell_layout() {
        let t = build_topology(&ScenarioConfig::default()).unwrap();
        assert_eq!(t.ru_positions.len(), 7);
        assert_eq!(t.ru_positions[0], [0.0, 0.0]);
        for k in 1..7 {
            let p = t.ru_positions[k];
            assert!((distance(p, [0.0, 0.0]) - 0.5).abs() < 1e-12);
            let next = t.ru_positions[if k == 6 { 1 } else { k + 1 }];
            // adjacent ring RUs are 60 degrees apart, hence also d apart
            assert!((distance(p, next) - 0.5).abs() < 1e-12);
        }
        let mut min = f64::INFINITY;
        for i in 0..7 {
            for j in i + 1..7 {
                min = min.min(distance(t.ru_positions[i], t.ru_positions[j]));
            }
        }
        assert!((min - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_ru() {
        let cfg = ScenarioConfig {
            num_rus: 1,
            backhaul_capacity_bps: super::super::Capacities::Uniform(1e6),
            ..Default::default()
        };
        let t = build_topology(&cfg).unwrap();
        assert_eq!(t.ru_positions, vec![[0.0, 0.0]]);
    }

    #[test]
    fn unsupported_count_without_positions() {
        let cfg = ScenarioConfig { num_rus: 3, ..Default::default() };
        assert!(matches!(build_topology(&cfg), Err(Error::Layout(_))));
    }

    #[test]
    fn explicit_positions_checked() {
        let cfg = ScenarioConfig {
            num_rus: 2,
            ru_positions_km: Some(vec![[0.0, 0.0], [0.3, 0.0]]),
            ..Default::default()
        };
        assert!(build_topology(&cfg).is_err());
        let cfg = ScenarioConfig {
            num_rus: 2,
            ru_positions_km: Some(vec![[0.0, 0.0], [0.5, 0.0]]),
            ..Default::default()
        };
        assert!(build_topology(&cfg).is_ok());
    }

    #[test]
    fn hexagon_vertices_on_region_boundary() {
        let t = build_topology(&ScenarioConfig::default()).unwrap();
        let region = &t.cell_region;
        for v in region.hexagon(0) {
            assert!(region.contains(v));
            assert!((distance(v, [0.0, 0.0]) - region.circumradius_km()).abs() < 1e-12);
        }
        assert!(!region.contains([2.0, 0.0]));
        let total = region.area();
        assert!((total - 7.0 * 3f64.sqrt() / 2.0 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_inside() {
        let t = build_topology(&ScenarioConfig::default()).unwrap();
        let mut rng = stream(3, Stream::Drops);
        for _ in 0..2000 {
            assert!(t.cell_region.contains(t.cell_region.sample(&mut rng)));
        }
    }
}
