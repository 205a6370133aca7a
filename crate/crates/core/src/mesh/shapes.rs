//! Procedural meshes used by tests, demos and the `builtin:` mesh paths.

use nalgebra::Vector3;

use super::TriangleMesh;

/// Axis-aligned cube centered at the origin with outward winding. Every
/// face diagonal passes through the `(+,+,+)` corner.
pub fn cube(side: f64) -> TriangleMesh {
    let h = 0.5 * side;
    let vertices = (0..8)
        .map(|i| {
            Vector3::new(
                if i & 1 != 0 { h } else { -h },
                if i & 2 != 0 { h } else { -h },
                if i & 4 != 0 { h } else { -h },
            )
        })
        .collect();
    let faces = vec![
        [1, 3, 7],
        [1, 7, 5],
        [2, 7, 3],
        [2, 6, 7],
        [4, 5, 7],
        [4, 7, 6],
        [0, 4, 6],
        [0, 6, 2],
        [0, 1, 5],
        [0, 5, 4],
        [0, 2, 3],
        [0, 3, 1],
    ];
    TriangleMesh::new(vertices, faces).expect("cube is well formed")
}

/// `w × h` rectangle in the `z = 0` plane, centered, facing `+z`.
pub fn rectangle(w: f64, h: f64) -> TriangleMesh {
    let (a, b) = (0.5 * w, 0.5 * h);
    let vertices = vec![
        Vector3::new(-a, -b, 0.0),
        Vector3::new(a, -b, 0.0),
        Vector3::new(a, b, 0.0),
        Vector3::new(-a, b, 0.0),
    ];
    TriangleMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]]).expect("rectangle is well formed")
}

pub fn square(side: f64) -> TriangleMesh {
    rectangle(side, side)
}

/// Latitude/longitude sphere with shared vertices.
pub fn uv_sphere(radius: f64, segments: usize, rings: usize) -> TriangleMesh {
    let segments = segments.max(3);
    let rings = rings.max(2);
    let mut vertices = vec![Vector3::new(0.0, 0.0, radius)];
    for r in 1..rings {
        let theta = std::f64::consts::PI * r as f64 / rings as f64;
        for s in 0..segments {
            let phi = std::f64::consts::TAU * s as f64 / segments as f64;
            vertices.push(radius * Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()));
        }
    }
    vertices.push(Vector3::new(0.0, 0.0, -radius));
    let south = (vertices.len() - 1) as u32;
    let ring = |r: usize, s: usize| (1 + (r - 1) * segments + s % segments) as u32;

    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, ring(1, s), ring(1, s + 1)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            let (a, b) = (ring(r, s), ring(r, s + 1));
            let (c, d) = (ring(r + 1, s), ring(r + 1, s + 1));
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    for s in 0..segments {
        faces.push([south, ring(rings - 1, s + 1), ring(rings - 1, s)]);
    }
    TriangleMesh::new(vertices, faces).expect("sphere is well formed")
}

/// Prism over a simple counter-clockwise polygon, spanning
/// `z ∈ [-thickness/2, thickness/2]`. Every face gets its own vertices so
/// vertex normals equal face normals.
pub fn extrude_polygon(polygon: &[(f64, f64)], thickness: f64) -> TriangleMesh {
    let n = polygon.len();
    let hz = 0.5 * thickness;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();

    let caps = ear_clip(polygon);
    let top = vertices.len() as u32;
    vertices.extend(polygon.iter().map(|&(x, y)| Vector3::new(x, y, hz)));
    faces.extend(caps.iter().map(|t| [top + t[0], top + t[1], top + t[2]]));
    let bottom = vertices.len() as u32;
    vertices.extend(polygon.iter().map(|&(x, y)| Vector3::new(x, y, -hz)));
    faces.extend(caps.iter().map(|t| [bottom + t[0], bottom + t[2], bottom + t[1]]));

    for i in 0..n {
        let (x0, y0) = polygon[i];
        let (x1, y1) = polygon[(i + 1) % n];
        let base = vertices.len() as u32;
        vertices.extend([
            Vector3::new(x0, y0, -hz),
            Vector3::new(x1, y1, -hz),
            Vector3::new(x1, y1, hz),
            Vector3::new(x0, y0, hz),
        ]);
        faces.push([base, base + 1, base + 2]);
        faces.push([base, base + 2, base + 3]);
    }
    TriangleMesh::new(vertices, faces).expect("extruded polygon is well formed")
}

/// Triangulates a simple counter-clockwise polygon.
fn ear_clip(polygon: &[(f64, f64)]) -> Vec<[u32; 3]> {
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut idx: Vec<usize> = (0..polygon.len()).collect();
    let mut tris = Vec::new();
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&k| {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (polygon[ia], polygon[ib], polygon[ic]);
            if cross(a, b, c) <= 0.0 {
                return false;
            }
            idx.iter().all(|&j| {
                if j == ia || j == ib || j == ic {
                    return true;
                }
                let p = polygon[j];
                !(cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0)
            })
        });
        let k = ear.expect("polygon must be simple and counter-clockwise");
        let m = idx.len();
        tris.push([idx[(k + m - 1) % m] as u32, idx[k] as u32, idx[(k + 1) % m] as u32]);
        idx.remove(k);
    }
    tris.push([idx[0] as u32, idx[1] as u32, idx[2] as u32]);
    tris
}

/// Asymmetric L-shaped bracket with one chamfered corner, centered on its
/// bounding box. Diameter ≈ 5.2.
pub fn bracket() -> TriangleMesh {
    let outline = [
        (0.0, 0.0),
        (4.3, 0.0),
        (4.3, 0.55),
        (3.85, 1.0),
        (1.0, 1.0),
        (1.0, 2.8),
        (0.0, 2.8),
    ];
    extrude_polygon(&outline, 1.2).centered()
}

/// Solid tube swept along a polyline in the `z = 0` plane. Station `k`
/// has an elliptical section with in-plane half width `radii[k].0` and
/// out-of-plane half height `radii[k].1`. Ends are closed with flat caps.
pub fn swept_tube(path: &[Vector3<f64>], radii: &[(f64, f64)], segments: usize) -> TriangleMesh {
    assert!(path.len() >= 2 && path.len() == radii.len());
    let m = segments.max(3);
    let n = path.len();
    let mut vertices = Vec::with_capacity(n * m + 2);
    for k in 0..n {
        let ahead = path[(k + 1).min(n - 1)] - path[k.saturating_sub(1)];
        let t = Vector3::new(ahead.x, ahead.y, 0.0).normalize();
        let side = Vector3::new(-t.y, t.x, 0.0);
        let (a, b) = radii[k];
        for j in 0..m {
            let th = std::f64::consts::TAU * j as f64 / m as f64;
            vertices.push(path[k] + side * (a * th.cos()) + Vector3::z() * (b * th.sin()));
        }
    }
    let ring = |k: usize, j: usize| (k * m + j % m) as u32;
    let mut faces = Vec::with_capacity(2 * n * m);
    for k in 0..n - 1 {
        for j in 0..m {
            faces.push([ring(k, j), ring(k, j + 1), ring(k + 1, j + 1)]);
            faces.push([ring(k, j), ring(k + 1, j + 1), ring(k + 1, j)]);
        }
    }
    let start = vertices.len() as u32;
    vertices.push(path[0]);
    vertices.push(path[n - 1]);
    for j in 0..m {
        faces.push([start, ring(0, j + 1), ring(0, j)]);
        faces.push([start + 1, ring(n - 1, j), ring(n - 1, j + 1)]);
    }
    let mesh = TriangleMesh::new(vertices, faces).expect("swept tube is well formed");
    if signed_volume(&mesh) < 0.0 {
        let faces = mesh.faces.iter().map(|f| [f[0], f[2], f[1]]).collect();
        TriangleMesh::new(mesh.vertices, faces).expect("swept tube is well formed")
    } else {
        mesh
    }
}

fn signed_volume(m: &TriangleMesh) -> f64 {
    m.faces
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| m.vertices[i as usize]);
            a.dot(&b.cross(&c)) / 6.0
        })
        .sum()
}

/// Curved hook with a thick flattened shank tapering to a round tip,
/// centered on its bounding box and scaled to diameter 5.2. Mostly curved
/// surface with small flat ends.
pub fn hook() -> TriangleMesh {
    let mut path = Vec::new();
    let mut radii = Vec::new();
    let shank = 14;
    for i in 0..=shank {
        let s = i as f64 / shank as f64;
        path.push(Vector3::new(2.4 * s, 0.0, 0.0));
        radii.push((0.75 - 0.2 * s, 0.5));
    }
    let bend = 30;
    let (cx, cy, r) = (2.4, 1.1, 1.1);
    for i in 1..=bend {
        let s = i as f64 / bend as f64;
        let a = -std::f64::consts::FRAC_PI_2 + s * 150f64.to_radians();
        path.push(Vector3::new(cx + r * a.cos(), cy + r * a.sin(), 0.0));
        radii.push((0.55 - 0.17 * s, 0.5 - 0.12 * s));
    }
    let mut mesh = swept_tube(&path, &radii, 28).centered();
    let d = super::object_diameter(&mesh).expect("hook has vertices");
    mesh = mesh.scaled(5.2 / d);
    mesh
}

/// Named procedural meshes.
pub fn builtin(name: &str) -> Option<TriangleMesh> {
    match name {
        "cube" => Some(cube(1.0)),
        "bracket" => Some(bracket()),
        "hook" => Some(hook()),
        "sphere" => Some(uv_sphere(1.0, 32, 16)),
        _ => None,
    }
}
