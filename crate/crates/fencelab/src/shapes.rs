//! Initial-region generators.
//!
//! All shapes are rasterized by testing cell centers against an analytic
//! membership predicate; no supersampling, since the downstream fields are
//! binary anyway. Every generated region must sit strictly inside the
//! domain, clear of the outermost two-cell ring, so the periodic wrap never
//! touches it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::IndicatorField;
use crate::grid::GridSpec;
use crate::rng::SplitMix64;

/// Mean vertex radius used by the random pentagon construction.
const PENTAGON_BASE_RADIUS: f64 = 0.8 * PI;

/// Analytic description of an initial region.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    /// Five-petal flower: rho^2 < pi^2 (0.4 + 0.2 sin 5 theta). 2D.
    Flower,
    /// Centered disc of the given radius. 2D.
    Disc { radius: f64 },
    /// Centered ball of the given radius. 3D.
    Ball { radius: f64 },
    /// Centered axis-aligned square with the given side. 2D.
    Square { side: f64 },
    /// Centered axis-aligned rectangle. 2D.
    Rectangle { width: f64, height: f64 },
    /// Centered equilateral triangle (one vertex up) with the given
    /// circumradius. 2D.
    Triangle { circumradius: f64 },
    /// Star-shaped pentagon around the origin; vertices sorted by angle.
    /// Built by [`random_pentagon`]. 2D.
    Pentagon { vertices: [[f64; 2]; 5] },
    /// Centered axis-aligned cube with the given side. 3D.
    Cube { side: f64 },
}

impl ShapeSpec {
    pub fn flower() -> Self {
        ShapeSpec::Flower
    }

    pub fn disc(radius: f64) -> Self {
        ShapeSpec::Disc { radius }
    }

    /// Default sizes: the flower-matched disc in 2D, discs/balls of radius
    /// pi/2, planar shapes with area near the flower's 0.4*pi^3 (the
    /// triangle is shrunk a little so its vertices clear the boundary ring
    /// at 128 cells per axis), and a cube of side pi in 3D.
    pub fn by_name(name: &str, seed: u64) -> Result<Self> {
        match name {
            "flower" => Ok(ShapeSpec::Flower),
            "disc" => Ok(ShapeSpec::disc(PI / 2.0)),
            "ball" => Ok(ShapeSpec::Ball { radius: PI / 2.0 }),
            "square" => Ok(ShapeSpec::Square {
                side: (0.4 * PI.powi(3)).sqrt(),
            }),
            "rectangle" => {
                // 2:1 aspect, same area as the flower.
                let height = (0.2 * PI.powi(3)).sqrt();
                Ok(ShapeSpec::Rectangle {
                    width: 2.0 * height,
                    height,
                })
            }
            "triangle" => Ok(ShapeSpec::Triangle { circumradius: 2.85 }),
            "pentagon" => Ok(random_pentagon(seed)),
            "cube" => Ok(ShapeSpec::Cube { side: PI }),
            other => Err(Error::Shape(format!("unknown shape '{other}'"))),
        }
    }

    /// Grid dimensionality the shape lives in.
    pub fn dim(&self) -> usize {
        match self {
            ShapeSpec::Ball { .. } | ShapeSpec::Cube { .. } => 3,
            _ => 2,
        }
    }
}

/// Seeded pentagon: vertex angles 2*pi*j/5 plus a jitter in [-0.2, 0.2]
/// radians, radii uniform in [0.5, 1.0] times the base radius. Angles stay
/// sorted because the jitter is far below the vertex spacing, so the
/// polygon is simple and star-shaped around the origin.
pub fn random_pentagon(seed: u64) -> ShapeSpec {
    let mut rng = SplitMix64::new(seed);
    let mut vertices = [[0.0f64; 2]; 5];
    for (j, v) in vertices.iter_mut().enumerate() {
        let angle = 2.0 * PI * j as f64 / 5.0 + (-0.2 + 0.4 * rng.next_f64());
        let radius = PENTAGON_BASE_RADIUS * (0.5 + 0.5 * rng.next_f64());
        *v = [radius * angle.cos(), radius * angle.sin()];
    }
    ShapeSpec::Pentagon { vertices }
}

fn inside_pentagon(vertices: &[[f64; 2]; 5], x: f64, y: f64) -> bool {
    // Star-shaped around the origin with counterclockwise vertices, so the
    // polygon is the union of the origin-anchored wedge triangles. Each
    // wedge spans less than pi, which makes the membership test a pair of
    // cross-product sign checks with no angle wrap to handle.
    if x == 0.0 && y == 0.0 {
        return true;
    }
    let cross = |ax: f64, ay: f64, bx: f64, by: f64| ax * by - ay * bx;
    for j in 0..5 {
        let a = vertices[j];
        let b = vertices[(j + 1) % 5];
        if cross(a[0], a[1], x, y) >= 0.0 && cross(x, y, b[0], b[1]) > 0.0 {
            return cross(b[0] - a[0], b[1] - a[1], x - a[0], y - a[1]) > 0.0;
        }
    }
    false
}

fn contains(shape: &ShapeSpec, p: [f64; 3]) -> bool {
    let [x, y, z] = p;
    match shape {
        ShapeSpec::Flower => {
            let rho2 = x * x + y * y;
            let theta = y.atan2(x);
            rho2 < PI * PI * (0.4 + 0.2 * (5.0 * theta).sin())
        }
        ShapeSpec::Disc { radius } => x * x + y * y < radius * radius,
        ShapeSpec::Ball { radius } => x * x + y * y + z * z < radius * radius,
        ShapeSpec::Square { side } => {
            let h = side / 2.0;
            x.abs() < h && y.abs() < h
        }
        ShapeSpec::Rectangle { width, height } => x.abs() < width / 2.0 && y.abs() < height / 2.0,
        ShapeSpec::Triangle { circumradius } => {
            let r = *circumradius;
            let vs = [
                [0.0, r],
                [-r * (PI / 6.0).cos(), -r * (PI / 6.0).sin()],
                [r * (PI / 6.0).cos(), -r * (PI / 6.0).sin()],
            ];
            // Counterclockwise vertex order: inside means left of every edge.
            let mut inside = true;
            for j in 0..3 {
                let v0 = vs[j];
                let v1 = vs[(j + 1) % 3];
                let cross = (v1[0] - v0[0]) * (y - v0[1]) - (v1[1] - v0[1]) * (x - v0[0]);
                inside &= cross > 0.0;
            }
            inside
        }
        ShapeSpec::Pentagon { vertices } => inside_pentagon(vertices, x, y),
        ShapeSpec::Cube { side } => {
            let h = side / 2.0;
            x.abs() < h && y.abs() < h && z.abs() < h
        }
    }
}

/// Rasterizes a shape onto a grid: a cell belongs to the region iff its
/// center satisfies the membership predicate. Errors when the result is
/// empty, the dimensions disagree, or the region reaches the two-cell
/// boundary ring.
pub fn rasterize(shape: &ShapeSpec, grid: GridSpec) -> Result<IndicatorField> {
    if shape.dim() != grid.dim() {
        return Err(Error::Shape(format!(
            "{}D shape rasterized on a {}D grid",
            shape.dim(),
            grid.dim()
        )));
    }
    let field = IndicatorField::from_fn(grid, |idx| contains(shape, grid.cell_center(idx)));
    if field.count() == 0 {
        return Err(Error::Shape("rasterization produced an empty region".into()));
    }
    let n = grid.n_axis();
    let ring = |i: usize| i < 2 || i >= n - 2;
    for idx in field.active_cells() {
        let [x, y, z] = grid.coords(idx);
        if ring(x) || ring(y) || (grid.dim() == 3 && ring(z)) {
            return Err(Error::Shape(
                "region touches the two-cell boundary ring".into(),
            ));
        }
    }
    Ok(field)
}
