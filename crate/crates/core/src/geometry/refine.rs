//! Red/green refinement of tagged meshes.
//!
//! Midpoints of edges lying on resolved curves are projected back onto the
//! curve. Children inherit the region tag of their parent.

use std::collections::HashMap;

use super::curve::CurveKind;
use super::mesh::{TaggedEdge, TriMesh};
use super::{GeometryError, Point2};

/// Smallest admissible element size relative to the inner radius.
const MIN_H_REL: f64 = 1e-6;

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Split every element into four.
pub fn refine_uniform(mesh: &TriMesh) -> Result<TriMesh, GeometryError> {
    split(mesh, vec![true; mesh.num_elements()])
}

/// Red-refine the elements touching any of `curves` `levels` times, closing
/// hanging nodes with green bisection after each pass.
pub fn refine_near(mesh: &TriMesh, curves: &[usize], levels: usize) -> Result<TriMesh, GeometryError> {
    let mut out = mesh.clone();
    for _ in 0..levels {
        out = refine_once_near(&out, curves)?;
    }
    Ok(out)
}

fn refine_once_near(mesh: &TriMesh, curves: &[usize]) -> Result<TriMesh, GeometryError> {
    let mut on = vec![false; mesh.num_nodes()];
    for e in &mesh.edges {
        if curves.contains(&e.curve) {
            on[e.nodes[0]] = true;
            on[e.nodes[1]] = true;
        }
    }
    let marked = mesh.elements.iter().map(|el| el.iter().any(|&v| on[v])).collect();
    split(mesh, marked)
}

fn scale(mesh: &TriMesh) -> f64 {
    let r1 = mesh.curve_index("r1").map(|c| &mesh.curves[c].kind);
    match r1 {
        Some(CurveKind::Circle { radius, .. }) => *radius,
        _ => match mesh.curves[0].kind {
            CurveKind::Circle { radius, .. } => radius,
            _ => 1.0,
        },
    }
}

fn split(mesh: &TriMesh, mut red: Vec<bool>) -> Result<TriMesh, GeometryError> {
    let floor = MIN_H_REL * scale(mesh);
    for (e, &r) in red.iter().enumerate() {
        if r && 0.5 * mesh.element_h(e) < floor {
            return Err(GeometryError::Refinement(format!("element {e} would fall below h = {floor:e}")));
        }
    }
    // Promote elements with two or more split edges to red until stable.
    loop {
        let mut split_edges: HashMap<(usize, usize), ()> = HashMap::new();
        for (e, el) in mesh.elements.iter().enumerate() {
            if red[e] {
                for i in 0..3 {
                    split_edges.insert(key(el[i], el[(i + 1) % 3]), ());
                }
            }
        }
        let mut changed = false;
        for (e, el) in mesh.elements.iter().enumerate() {
            if red[e] {
                continue;
            }
            let n = (0..3).filter(|&i| split_edges.contains_key(&key(el[i], el[(i + 1) % 3]))).count();
            if n >= 2 {
                red[e] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let curve_of: HashMap<(usize, usize), usize> = mesh.edges.iter().map(|e| (key(e.nodes[0], e.nodes[1]), e.curve)).collect();
    let mut nodes = mesh.nodes.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        if !red[e] {
            continue;
        }
        for i in 0..3 {
            let k = key(el[i], el[(i + 1) % 3]);
            mid.entry(k).or_insert_with(|| {
                let mut p: Point2 = nodes[k.0].lerp(nodes[k.1], 0.5);
                if let Some(&c) = curve_of.get(&k) {
                    p = mesh.curves[c].kind.project(p);
                }
                nodes.push(p);
                nodes.len() - 1
            });
        }
    }

    let mut elements = Vec::with_capacity(mesh.num_elements() * 2);
    let mut tags = Vec::with_capacity(mesh.num_elements() * 2);
    for (e, &[a, b, c]) in mesh.elements.iter().enumerate() {
        let t = mesh.tags[e];
        if red[e] {
            let (ab, bc, ca) = (mid[&key(a, b)], mid[&key(b, c)], mid[&key(c, a)]);
            for ch in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                elements.push(ch);
                tags.push(t);
            }
            continue;
        }
        let el = [a, b, c];
        match (0..3).find(|&i| mid.contains_key(&key(el[i], el[(i + 1) % 3]))) {
            Some(i) => {
                let (p, q, r) = (el[i], el[(i + 1) % 3], el[(i + 2) % 3]);
                let m = mid[&key(p, q)];
                elements.push([p, m, r]);
                elements.push([m, q, r]);
                tags.push(t);
                tags.push(t);
            }
            None => {
                elements.push(el);
                tags.push(t);
            }
        }
    }

    let mut edges = Vec::with_capacity(mesh.edges.len() * 2);
    for te in &mesh.edges {
        let k = key(te.nodes[0], te.nodes[1]);
        match mid.get(&k) {
            Some(&m) => {
                edges.push(TaggedEdge { nodes: key(k.0, m).into(), curve: te.curve });
                edges.push(TaggedEdge { nodes: key(m, k.1).into(), curve: te.curve });
            }
            None => edges.push(*te),
        }
    }
    edges.sort_by_key(|e| (e.curve, e.nodes[0], e.nodes[1]));

    let out = TriMesh { nodes, elements, tags, edges, curves: mesh.curves.clone() };
    out.check()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, GeometryConfig};

    #[test]
    fn uniform_refinement_quadruples_and_keeps_area() {
        let cfg = GeometryConfig::circular(1.0, 2.0, 5.0, 6.0);
        let m = build_mesh(&cfg, 0.3, 1.5).unwrap();
        let f = refine_uniform(&m).unwrap();
        assert_eq!(f.num_elements(), 4 * m.num_elements());
        let a0: f64 = (0..m.num_elements()).map(|e| m.area(e)).sum();
        let a1: f64 = (0..f.num_elements()).map(|e| f.area(e)).sum();
        // projected midpoints only add area on the truncation circle
        assert!(a1 >= a0 && a1 < std::f64::consts::PI * 36.0);
        assert!((f.min_angle() - m.min_angle()).abs() < 5.0);
    }

    #[test]
    fn local_refinement_is_conforming() {
        let cfg = GeometryConfig::circular(1.0, 2.0, 5.0, 6.0);
        let m = build_mesh(&cfg, 0.3, 1.5).unwrap();
        let c = m.circle_curve(1.0).unwrap();
        assert_eq!(refine_near(&m, &[c], 0).unwrap(), m);
        let f = refine_near(&m, &[c], 2).unwrap();
        assert!(f.num_nodes() > m.num_nodes());
        assert_eq!(f.curve_edges(c).count(), 4 * m.curve_edges(c).count());
        for n in f.circle_nodes_sorted(c) {
            assert!((f.nodes[n].norm() - 1.0).abs() < 1e-12);
        }
    }
}
