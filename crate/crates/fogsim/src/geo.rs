//! Geographic primitives: great-circle distance, convex hulls, polygon
//! centroids, and Hilbert-curve ordering for spatial clustering.
//!
//! Coordinates are WGS-ish (latitude, longitude) in degrees. Distances use a
//! spherical Earth of radius 6371 km; at city scale the error versus an
//! ellipsoid is far below the kilometer-scale quantities we report.

use serde::{Deserialize, Serialize};

/// Spherical Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Kilometers per degree of latitude (and of longitude at the equator).
pub const KM_PER_DEGREE: f64 = std::f64::consts::PI / 180.0 * EARTH_RADIUS_KM;

/// A geographic position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    /// True when latitude is within [-90, 90] and longitude within [-180, 180].
    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Haversine great-circle distance in kilometers.
pub fn great_circle_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians() / 2.0;
    let dlon = (b.lon - a.lon).to_radians() / 2.0;

    let h = dlat.sin().powi(2) + lat1.cos() * lat2.cos() * dlon.sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Sum of great-circle legs along an ordered path.
pub fn path_length_km(positions: &[GeoPoint]) -> f64 {
    positions
        .windows(2)
        .map(|w| great_circle_distance(w[0], w[1]))
        .sum()
}

fn cross(o: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon)
}

/// Convex hull via monotone chain, vertices in counterclockwise order in the
/// (lon, lat) plane. Degenerate inputs yield a point or a segment.
pub fn convex_hull(points: &[GeoPoint]) -> Vec<GeoPoint> {
    let mut pts: Vec<GeoPoint> = points.to_vec();
    pts.sort_by(|p, q| {
        p.lon
            .partial_cmp(&q.lon)
            .unwrap()
            .then(p.lat.partial_cmp(&q.lat).unwrap())
    });
    pts.dedup_by(|p, q| p.lon == q.lon && p.lat == q.lat);

    if pts.len() <= 2 {
        return pts;
    }

    let mut lower: Vec<GeoPoint> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<GeoPoint> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        // All input points were collinear; fall back to the extremes.
        return vec![pts[0], pts[pts.len() - 1]];
    }
    lower
}

/// Signed shoelace area in the (lon, lat) coordinate plane (degrees squared).
/// Positive for counterclockwise vertex order.
pub fn signed_area_deg2(polygon: &[GeoPoint]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..polygon.len() {
        let p = polygon[i];
        let q = polygon[(i + 1) % polygon.len()];
        acc += p.lon * q.lat - q.lon * p.lat;
    }
    acc / 2.0
}

/// Area centroid of a polygon in the coordinate plane. Degenerate polygons
/// (fewer than 3 vertices, or near-zero area) fall back to the vertex mean.
pub fn polygon_centroid(polygon: &[GeoPoint]) -> Option<GeoPoint> {
    if polygon.is_empty() {
        return None;
    }
    let area = signed_area_deg2(polygon);
    if polygon.len() < 3 || area.abs() < 1e-15 {
        let n = polygon.len() as f64;
        let lat = polygon.iter().map(|p| p.lat).sum::<f64>() / n;
        let lon = polygon.iter().map(|p| p.lon).sum::<f64>() / n;
        return Some(GeoPoint::new(lat, lon));
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..polygon.len() {
        let p = polygon[i];
        let q = polygon[(i + 1) % polygon.len()];
        let w = p.lon * q.lat - q.lon * p.lat;
        cx += (p.lon + q.lon) * w;
        cy += (p.lat + q.lat) * w;
    }
    Some(GeoPoint::new(cy / (6.0 * area), cx / (6.0 * area)))
}

/// Polygon area in km² using a local equirectangular projection around the
/// polygon's vertex mean. Degenerate polygons have zero area.
pub fn polygon_area_km2(polygon: &[GeoPoint]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let n = polygon.len() as f64;
    let lat0 = polygon.iter().map(|p| p.lat).sum::<f64>() / n;
    let lon0 = polygon.iter().map(|p| p.lon).sum::<f64>() / n;
    let scale_x = KM_PER_DEGREE * lat0.to_radians().cos();

    let mut acc = 0.0;
    for i in 0..polygon.len() {
        let p = polygon[i];
        let q = polygon[(i + 1) % polygon.len()];
        let (px, py) = ((p.lon - lon0) * scale_x, (p.lat - lat0) * KM_PER_DEGREE);
        let (qx, qy) = ((q.lon - lon0) * scale_x, (q.lat - lat0) * KM_PER_DEGREE);
        acc += px * qy - qx * py;
    }
    (acc / 2.0).abs()
}

/// True when `point` lies inside or on the boundary of a counterclockwise
/// convex polygon (within a small cross-product slack).
pub fn hull_contains(hull: &[GeoPoint], point: GeoPoint) -> bool {
    match hull.len() {
        0 => false,
        1 => (hull[0].lat - point.lat).abs() < 1e-9 && (hull[0].lon - point.lon).abs() < 1e-9,
        2 => {
            // On-segment check via collinearity plus bounding box.
            cross(hull[0], hull[1], point).abs() < 1e-9
                && point.lon >= hull[0].lon.min(hull[1].lon) - 1e-9
                && point.lon <= hull[0].lon.max(hull[1].lon) + 1e-9
                && point.lat >= hull[0].lat.min(hull[1].lat) - 1e-9
                && point.lat <= hull[0].lat.max(hull[1].lat) + 1e-9
        }
        _ => (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], point) >= -1e-9),
    }
}

/// Hilbert-curve index of a cell in a 2^order x 2^order grid.
pub fn hilbert_index(mut x: u32, mut y: u32, order: u32) -> u64 {
    let mut d: u64 = 0;
    let mut s: u32 = 1 << (order - 1);
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += (s as u64) * (s as u64) * ((3 * rx) ^ ry) as u64;
        // Confine to the quadrant, then rotate it so the curve stays contiguous.
        x &= s - 1;
        y &= s - 1;
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    d
}

/// Bounding box of a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBounds {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl GeoBounds {
    pub fn of(points: impl IntoIterator<Item = GeoPoint>) -> Option<GeoBounds> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = GeoBounds {
            lat_min: first.lat,
            lat_max: first.lat,
            lon_min: first.lon,
            lon_max: first.lon,
        };
        for p in it {
            b.lat_min = b.lat_min.min(p.lat);
            b.lat_max = b.lat_max.max(p.lat);
            b.lon_min = b.lon_min.min(p.lon);
            b.lon_max = b.lon_max.max(p.lon);
        }
        Some(b)
    }

    pub fn is_valid(&self) -> bool {
        self.lat_min <= self.lat_max
            && self.lon_min <= self.lon_max
            && GeoPoint::new(self.lat_min, self.lon_min).is_valid()
            && GeoPoint::new(self.lat_max, self.lon_max).is_valid()
    }
}

const HILBERT_ORDER: u32 = 16;

/// Hilbert key of a point within `bounds`, for locality-preserving sorting.
/// Collapsed bounds (a single point) map everything to key 0.
pub fn hilbert_key(point: GeoPoint, bounds: &GeoBounds) -> u64 {
    let side = (1u32 << HILBERT_ORDER) - 1;
    let fx = if bounds.lon_max > bounds.lon_min {
        (point.lon - bounds.lon_min) / (bounds.lon_max - bounds.lon_min)
    } else {
        0.0
    };
    let fy = if bounds.lat_max > bounds.lat_min {
        (point.lat - bounds.lat_min) / (bounds.lat_max - bounds.lat_min)
    } else {
        0.0
    };
    let x = (fx.clamp(0.0, 1.0) * side as f64).round() as u32;
    let y = (fy.clamp(0.0, 1.0) * side as f64).round() as u32;
    hilbert_index(x, y, HILBERT_ORDER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distance_zero_for_identical_points() {
        let p = GeoPoint::new(34.05, -118.25);
        assert_eq!(great_circle_distance(p, p), 0.0);
    }

    #[test]
    fn distance_one_degree_of_longitude_at_equator() {
        let d = great_circle_distance(GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 1.0));
        assert_abs_diff_eq!(d, 111.19, epsilon = 0.01);
    }

    #[test]
    fn distance_half_circumference() {
        let d = great_circle_distance(GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 180.0));
        assert_abs_diff_eq!(d, 20015.1, epsilon = 0.1);
    }

    #[test]
    fn distance_is_symmetric() {
        let a = GeoPoint::new(34.05, -118.25);
        let b = GeoPoint::new(40.71, -74.0);
        assert_abs_diff_eq!(
            great_circle_distance(a, b),
            great_circle_distance(b, a),
            epsilon = 1e-12
        );
    }

    #[test]
    fn hull_of_unit_square_has_four_ccw_vertices() {
        let pts = vec![
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 1.0),
            GeoPoint::new(1.0, 0.0),
            GeoPoint::new(1.0, 1.0),
            GeoPoint::new(0.5, 0.5),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(
            signed_area_deg2(&hull) > 0.0,
            "hull must be counterclockwise"
        );
        for p in &pts {
            assert!(hull_contains(&hull, *p));
        }
    }

    #[test]
    fn hull_degenerate_cases() {
        let single = convex_hull(&[GeoPoint::new(34.05, -118.25)]);
        assert_eq!(single.len(), 1);
        assert_eq!(polygon_area_km2(&single), 0.0);

        let collinear = convex_hull(&[
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 1.0),
            GeoPoint::new(0.0, 2.0),
        ]);
        assert_eq!(collinear.len(), 2);
        assert_eq!(polygon_area_km2(&collinear), 0.0);
    }

    #[test]
    fn centroid_of_unit_square_is_center() {
        let hull = convex_hull(&[
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 1.0),
            GeoPoint::new(1.0, 0.0),
            GeoPoint::new(1.0, 1.0),
        ]);
        let c = polygon_centroid(&hull).unwrap();
        assert_abs_diff_eq!(c.lat, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lon, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn centroid_of_right_triangle() {
        // Hand evaluation of the polygon centroid formula for the triangle
        // (0,0), (2,0), (0,2): A = 2, Cx = Cy = 2/3.
        let hull = convex_hull(&[
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(2.0, 0.0),
            GeoPoint::new(0.0, 2.0),
        ]);
        let c = polygon_centroid(&hull).unwrap();
        assert_abs_diff_eq!(c.lat, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lon, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn centroid_of_degenerate_hull_is_point_mean() {
        let c = polygon_centroid(&[GeoPoint::new(1.0, 3.0), GeoPoint::new(2.0, 5.0)]).unwrap();
        assert_abs_diff_eq!(c.lat, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lon, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn area_of_one_degree_square_at_equator() {
        let hull = convex_hull(&[
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 1.0),
            GeoPoint::new(1.0, 0.0),
            GeoPoint::new(1.0, 1.0),
        ]);
        let area = polygon_area_km2(&hull);
        // One degree is ~111.19 km at the equator; the local projection uses
        // cos(mean latitude 0.5 deg) for the east-west scale.
        let expected = KM_PER_DEGREE * KM_PER_DEGREE * 0.5f64.to_radians().cos();
        assert_abs_diff_eq!(area, expected, epsilon = 1.0);
    }

    #[test]
    fn hilbert_first_order_visits_quadrants_once() {
        let mut seen = [false; 4];
        for (x, y) in [(0u32, 0u32), (0, 1), (1, 0), (1, 1)] {
            let d = hilbert_index(x, y, 1) as usize;
            assert!(d < 4);
            assert!(!seen[d], "duplicate hilbert index {d}");
            seen[d] = true;
        }
    }

    #[test]
    fn hilbert_adjacent_indices_are_grid_neighbors() {
        // Consecutive curve positions always differ by one grid step.
        let order = 4;
        let side = 1u32 << order;
        let mut by_index = vec![(0u32, 0u32); (side * side) as usize];
        for x in 0..side {
            for y in 0..side {
                by_index[hilbert_index(x, y, order) as usize] = (x, y);
            }
        }
        for w in by_index.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let step = x0.abs_diff(x1) + y0.abs_diff(y1);
            assert_eq!(step, 1, "curve jumped from {:?} to {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn hilbert_key_handles_collapsed_bounds() {
        let b = GeoBounds {
            lat_min: 1.0,
            lat_max: 1.0,
            lon_min: 2.0,
            lon_max: 2.0,
        };
        assert_eq!(hilbert_key(GeoPoint::new(1.0, 2.0), &b), 0);
    }

    proptest::proptest! {
        #[test]
        fn triangle_inequality_holds(
            lat_a in -89.0f64..89.0, lon_a in -179.0f64..179.0,
            lat_b in -89.0f64..89.0, lon_b in -179.0f64..179.0,
            lat_c in -89.0f64..89.0, lon_c in -179.0f64..179.0,
        ) {
            let a = GeoPoint::new(lat_a, lon_a);
            let b = GeoPoint::new(lat_b, lon_b);
            let c = GeoPoint::new(lat_c, lon_c);
            let direct = great_circle_distance(a, c);
            let via = great_circle_distance(a, b) + great_circle_distance(b, c);
            proptest::prop_assert!(direct <= via + 1e-9);
        }
    }
}
