//! Writes the bundled fixture meshes to a directory (default `fixtures/`).

use std::path::PathBuf;

use circleflow::fixtures;
use circleflow::io::write_mesh;
use circleflow::Geometry;

fn main() -> circleflow::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    // +-20% perturbation of equal radii
    let torus_radii = [1.2, 0.85, 1.05, 0.8, 1.15, 0.95, 1.1];
    let genus2_radii = vec![8.0; 11];
    let pi8 = std::f64::consts::PI / 8.0;
    let jobs: Vec<(&str, _, Geometry, Option<Vec<f64>>)> = vec![
        ("tetrahedron", fixtures::tetrahedron(0.0), Geometry::Euclidean, None),
        ("tetrahedron_spherical", fixtures::tetrahedron(0.0), Geometry::Spherical, Some(vec![pi8; 4])),
        ("octahedron", fixtures::octahedron(0.0), Geometry::Euclidean, None),
        ("torus7", fixtures::torus7(0.0), Geometry::Euclidean, Some(torus_radii.to_vec())),
        ("genus2", fixtures::genus2(0.0), Geometry::Hyperbolic, None),
        ("genus2_large_radii", fixtures::genus2(0.0), Geometry::Hyperbolic, Some(genus2_radii)),
        ("genus2_stellar", fixtures::genus2_stellar(0.0), Geometry::Hyperbolic, None),
        ("separating_triangle", fixtures::separating_triangle(0.0), Geometry::Euclidean, None),
    ];
    for (name, mesh, geometry, radii) in jobs {
        let path = dir.join(format!("{name}.json"));
        write_mesh(&path, &mesh, geometry, radii.as_deref(), None)?;
        println!("{}", path.display());
    }
    Ok(())
}
