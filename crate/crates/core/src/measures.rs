//! Finitely supported signed measures on the unit square.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::mesh::{dist, TriMesh};
use crate::{Error, Point, Result};

/// Coefficients at or below this magnitude are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Positions closer than this are treated as the same point.
const MERGE_DISTANCE: f64 = 1e-14;

/// A weighted Dirac mass `beta * delta_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub x: Point,
    pub beta: f64,
}

impl Atom {
    pub fn new(x: Point, beta: f64) -> Self {
        Self { x, beta }
    }
}

/// `sum_i beta_i delta_{x_i}` with pairwise distinct positions and no
/// (numerically) zero coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    /// Merges coincident atoms (summing coefficients, keeping first-seen
    /// order) and prunes zero coefficients.
    pub fn new(atoms: Vec<Atom>) -> Self {
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.iter_mut().find(|m| dist(m.x, a.x) <= MERGE_DISTANCE) {
                Some(m) => m.beta += a.beta,
                None => merged.push(a),
            }
        }
        merged.retain(|a| a.beta.abs() > PRUNE_THRESHOLD);
        Self { atoms: merged }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.atoms.iter().map(|t| Atom::new(t.x, a * t.beta)).collect())
    }

    /// Sum of two measures.
    pub fn plus(&self, other: &DiscreteMeasure) -> Self {
        Self::new(self.atoms.iter().chain(&other.atoms).copied().collect())
    }

    /// Total variation norm, `sum |beta_i|`.
    pub fn tv_norm(&self) -> f64 {
        self.atoms.iter().map(|a| a.beta.abs()).sum()
    }

    /// Net signed mass, `sum beta_i`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.beta).sum()
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let mut ser = serde_json::Serializer::with_formatter(out, Precise17);
        self.atoms.serialize(&mut ser)?;
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_json(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let atoms: Vec<Atom> = serde_json::from_reader(input)?;
        Ok(Self::new(atoms))
    }
}

/// `tv_norm` as a free function.
pub fn tv_norm(q: &DiscreteMeasure) -> f64 {
    q.tv_norm()
}

/// JSON formatter writing floats with 17 significant digits.
struct Precise17;

impl serde_json::ser::Formatter for Precise17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Nodal projection: `sum_i <q, phi_i> delta_{x_i}` over interior nodes,
/// ordered by node index.
pub fn project_to_nodes(mesh: &TriMesh, q: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let mut weights = vec![0.0; mesh.num_nodes()];
    for atom in q.atoms() {
        let loc = mesh.locate(atom.x)?;
        for (&v, l) in mesh.cells()[loc.cell].iter().zip(loc.lambda) {
            weights[v] += atom.beta * l;
        }
    }
    let atoms = mesh
        .interior_nodes()
        .into_iter()
        .map(|i| Atom::new(mesh.nodes()[i], weights[i]))
        .collect();
    Ok(DiscreteMeasure::new(atoms))
}

/// Result of [`lump_clusters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Lumped {
    pub measure: DiscreteMeasure,
    /// Clusters containing atoms of both signs, as input atom indices. Their
    /// atoms are kept unlumped in `measure`.
    pub mixed_sign: Vec<Vec<usize>>,
}

/// Single-linkage clustering at `radius`; each same-sign cluster becomes one
/// atom carrying the cluster's total coefficient at the `|beta|`-weighted
/// center of gravity. Output is ordered by the smallest member index.
pub fn lump_clusters(q: &DiscreteMeasure, radius: f64) -> Lumped {
    let atoms = q.atoms();
    let mut parent: Vec<usize> = (0..atoms.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            if dist(atoms[i].x, atoms[j].x) <= radius {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; atoms.len()];
    for i in 0..atoms.len() {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[r]].push(i);
    }

    let mut out = Vec::new();
    let mut mixed_sign = Vec::new();
    for members in clusters {
        let positive = members.iter().any(|&i| atoms[i].beta > 0.0);
        let negative = members.iter().any(|&i| atoms[i].beta < 0.0);
        if positive && negative {
            out.extend(members.iter().map(|&i| atoms[i]));
            mixed_sign.push(members);
            continue;
        }
        let weight: f64 = members.iter().map(|&i| atoms[i].beta.abs()).sum();
        let beta: f64 = members.iter().map(|&i| atoms[i].beta).sum();
        if beta.abs() <= PRUNE_THRESHOLD {
            continue;
        }
        let mut x = [0.0; 2];
        for &i in &members {
            let w = atoms[i].beta.abs() / weight;
            x[0] += w * atoms[i].x[0];
            x[1] += w * atoms[i].x[1];
        }
        out.push(Atom::new(x, beta));
    }
    Lumped {
        measure: DiscreteMeasure::new(out),
        mixed_sign,
    }
}

/// One reference atom and the test atoms assigned to it.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub reference: usize,
    pub cluster: Vec<usize>,
    /// Sum of the cluster's coefficients.
    pub lumped_beta: f64,
    /// Largest distance from a cluster member to the reference position.
    pub max_distance: f64,
}

/// Support-matching comparison between a reference and a test measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportMatch {
    pub pairs: Vec<MatchedPair>,
    pub position_error: f64,
    pub coefficient_error: f64,
    pub unmatched_reference: Vec<usize>,
    pub unmatched_test: Vec<usize>,
}

/// Assigns each test atom within `radius` of a reference atom to it.
pub fn match_supports(
    q_ref: &DiscreteMeasure,
    q_test: &DiscreteMeasure,
    radius: f64,
) -> Result<SupportMatch> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "matching radius must be positive, got {radius}"
        )));
    }
    let refs = q_ref.atoms();
    for i in 0..refs.len() {
        for j in i + 1..refs.len() {
            if dist(refs[i].x, refs[j].x) <= 2.0 * radius {
                return Err(Error::AmbiguousReference(i, j));
            }
        }
    }
    let mut clusters = vec![Vec::new(); refs.len()];
    let mut unmatched_test = Vec::new();
    for (t, atom) in q_test.atoms().iter().enumerate() {
        match refs.iter().position(|r| dist(r.x, atom.x) <= radius) {
            Some(r) => clusters[r].push(t),
            None => unmatched_test.push(t),
        }
    }
    let mut pairs = Vec::new();
    let mut unmatched_reference = Vec::new();
    for (r, cluster) in clusters.into_iter().enumerate() {
        if cluster.is_empty() {
            unmatched_reference.push(r);
            continue;
        }
        let test = q_test.atoms();
        let lumped_beta = cluster.iter().map(|&t| test[t].beta).sum();
        let max_distance = cluster
            .iter()
            .map(|&t| dist(test[t].x, refs[r].x))
            .fold(0.0, f64::max);
        pairs.push(MatchedPair {
            reference: r,
            cluster,
            lumped_beta,
            max_distance,
        });
    }
    let position_error = pairs.iter().map(|p| p.max_distance).fold(0.0, f64::max);
    let coefficient_error = pairs
        .iter()
        .map(|p| (refs[p.reference].beta - p.lumped_beta).abs())
        .fold(0.0, f64::max);
    Ok(SupportMatch {
        pairs,
        position_error,
        coefficient_error,
        unmatched_reference,
        unmatched_test,
    })
}
