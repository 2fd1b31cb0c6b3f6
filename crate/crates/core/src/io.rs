//! Plain-text and binary artefacts: CSV numbers, legacy VTK files and field
//! checkpoints.

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::sync::Arc;

use crate::discretization::DiscreteField;
use crate::geometry::{Point2, TriMesh};
use crate::media::{MediaError, MediumSpec};
use crate::C64;

const CHECKPOINT_MAGIC: &[u8; 8] = b"ALRFLD01";

/// Scientific notation with 17 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Named per-node or per-element scalar array.
pub struct DataArray {
    pub name: String,
    pub values: Vec<f64>,
}

impl DataArray {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }
}

/// Real part, imaginary part and modulus of a field as point arrays.
pub fn field_arrays(name: &str, u: &DiscreteField) -> Vec<DataArray> {
    vec![
        DataArray::new(format!("{name}_re"), u.values.iter().map(|v| v.re).collect()),
        DataArray::new(format!("{name}_im"), u.values.iter().map(|v| v.im).collect()),
        DataArray::new(format!("{name}_abs"), u.values.iter().map(|v| v.norm()).collect()),
    ]
}

/// Per-element coefficients at the barycentre: `s_δ A` entries, `Σ`, `s_δ`.
pub fn medium_arrays(mesh: &TriMesh, med: &MediumSpec) -> Result<Vec<DataArray>, MediaError> {
    let names = ["sA_xx_re", "sA_xx_im", "sA_xy_re", "sA_xy_im", "sA_yy_re", "sA_yy_im", "sigma", "s_re", "s_im"];
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(mesh.num_elements()); names.len()];
    for e in 0..mesh.num_elements() {
        let tag = mesh.tags[e];
        let p = mesh.barycenter(e);
        let a = med.tensor(tag, p)?;
        let s = med.s_delta(tag);
        let vals = [s * a.xx, s * a.xy, s * a.yy];
        for (i, v) in vals.iter().enumerate() {
            cols[2 * i].push(v.re);
            cols[2 * i + 1].push(v.im);
        }
        cols[6].push(med.scalar(tag, p)?);
        cols[7].push(s.re);
        cols[8].push(s.im);
    }
    Ok(names.iter().zip(cols).map(|(n, v)| DataArray::new(*n, v)).collect())
}

/// Legacy ASCII VTK unstructured grid with point and cell arrays; region
/// codes are always written as cell data.
pub fn vtk_string(mesh: &TriMesh, title: &str, point_data: &[DataArray], cell_data: &[DataArray]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET UNSTRUCTURED_GRID", title.lines().next().unwrap_or(""));
    let _ = writeln!(s, "POINTS {} double", mesh.num_nodes());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} 0", sci(p.x), sci(p.y));
    }
    let ne = mesh.num_elements();
    let _ = writeln!(s, "CELLS {} {}", ne, 4 * ne);
    for el in &mesh.elements {
        let _ = writeln!(s, "3 {} {} {}", el[0], el[1], el[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("5\n");
    }
    if !point_data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.num_nodes());
        for a in point_data {
            scalars(&mut s, a);
        }
    }
    let _ = writeln!(s, "CELL_DATA {ne}\nSCALARS region int 1\nLOOKUP_TABLE default");
    for t in &mesh.tags {
        let _ = writeln!(s, "{}", t.code());
    }
    for a in cell_data {
        scalars(&mut s, a);
    }
    s
}

fn scalars(s: &mut String, a: &DataArray) {
    let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", a.name.replace(' ', "_"));
    for v in &a.values {
        let _ = writeln!(s, "{}", sci(*v));
    }
}

/// Binary checkpoint: magic, mesh hash, node count, then `(re, im)` pairs
/// in little-endian order.
pub fn write_checkpoint(w: &mut impl Write, u: &DiscreteField) -> io::Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(u.mesh.hash_hex().as_bytes())?;
    w.write_all(&(u.values.len() as u64).to_le_bytes())?;
    for v in &u.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

/// Read a checkpoint written for `mesh`; a different mesh hash is an error.
pub fn read_checkpoint(r: &mut impl Read, mesh: Arc<TriMesh>) -> io::Result<DiscreteField> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a field checkpoint"));
    }
    let mut hash = [0u8; 64];
    r.read_exact(&mut hash)?;
    if hash != mesh.hash_hex().as_bytes() {
        return Err(bad("checkpoint belongs to a different mesh"));
    }
    let mut n = [0u8; 8];
    r.read_exact(&mut n)?;
    let n = u64::from_le_bytes(n) as usize;
    let mut values = Vec::with_capacity(n);
    let mut buf = [0u8; 16];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
        values.push(C64::new(re, im));
    }
    DiscreteField::new(mesh, values).map_err(|e| bad(&e.to_string()))
}

/// Points on a circle, for sampled outputs.
pub fn circle_points(center: Point2, radius: f64, n: usize) -> Vec<Point2> {
    (0..n).map(|i| center + Point2::from_polar(radius, std::f64::consts::TAU * i as f64 / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, GeometryConfig};

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = sci(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn vtk_layout_and_checkpoint_round_trip() {
        let cfg = GeometryConfig::circular(1.0, 2.0, 5.0, 7.0);
        let mesh = Arc::new(build_mesh(&cfg, 0.6, 1.0).unwrap());
        let u = DiscreteField::from_fn(mesh.clone(), |p| C64::new(p.x, p.y));
        let text = vtk_string(&mesh, "test", &field_arrays("u", &u), &[]);
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains(&format!("POINTS {} double", mesh.num_nodes())));
        assert!(text.contains(&format!("CELL_TYPES {}", mesh.num_elements())));
        assert!(text.contains("SCALARS u_abs double 1"));
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &u).unwrap();
        let back = read_checkpoint(&mut buf.as_slice(), mesh.clone()).unwrap();
        assert_eq!(back.values, u.values);
        let other = Arc::new(build_mesh(&cfg, 0.5, 1.0).unwrap());
        assert!(read_checkpoint(&mut buf.as_slice(), other).is_err());
    }

    #[test]
    fn medium_dump_has_sign_factor() {
        let cfg = GeometryConfig::circular(1.0, 2.0, 5.0, 7.0);
        let mesh = build_mesh(&cfg, 0.6, 1.0).unwrap();
        let med = crate::media::MediumSpec::homogeneous(cfg, 0.0).with_negative(&[crate::geometry::RegionTag::AnnulusR2R1]).with_delta(0.1);
        let arrays = medium_arrays(&mesh, &med).unwrap();
        let s_im = &arrays[8].values;
        for (e, t) in mesh.tags.iter().enumerate() {
            let expect = if *t == crate::geometry::RegionTag::AnnulusR2R1 { -0.1 } else { 0.0 };
            assert_eq!(s_im[e], expect);
        }
    }
}
