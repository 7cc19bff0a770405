use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub usize);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Tangents must be unit length within this tolerance.
pub const TANGENT_TOLERANCE: f64 = 1e-6;

/// One centerline sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CenterlinePoint<T: Real> {
    pub id: PointId,
    pub xyz: [T; 3],
    /// Maximum inscribed sphere radius, cm.
    pub misr: T,
    pub tangent: [T; 3],
    pub branch_id: usize,
    pub in_junction: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
struct CenterlineFile<T: Real> {
    points: Vec<CenterlinePoint<T>>,
    edges: Vec<[PointId; 2]>,
    root: PointId,
}

/// A labelled centerline tree rooted at the vasculature inlet.
///
/// Point order in memory follows the input; topology lookups go through the
/// id index. Children are kept sorted by id so every traversal is deterministic.
#[derive(Debug, Clone)]
pub struct CenterlineTree<T: Real> {
    points: Vec<CenterlinePoint<T>>,
    index: BTreeMap<PointId, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    distance: Vec<T>,
    root: usize,
}

pub(crate) fn dist<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl<T: Real> CenterlineTree<T> {
    /// Validates points and parent→child edges into a tree.
    pub fn new(points: Vec<CenterlinePoint<T>>, edges: &[[PointId; 2]], root: PointId) -> Result<Self, GeometryError> {
        let mut index = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.id, i).is_some() {
                return Err(GeometryError::Schema(format!("duplicate point id {}", p.id)));
            }
            if !(p.misr > T::zero()) || !p.misr.is_finite() {
                return Err(GeometryError::Schema(format!("point {} has non-positive radius {}", p.id, p.misr)));
            }
            if p.xyz.iter().any(|c| !c.is_finite()) {
                return Err(GeometryError::Schema(format!("point {} has non-finite coordinates", p.id)));
            }
            let norm = p.tangent.iter().map(|c| *c * *c).sum::<T>().sqrt();
            if !((norm - T::one()).abs() <= T::lit(TANGENT_TOLERANCE)) {
                return Err(GeometryError::NonUnitTangent { point: p.id, norm: norm.as_f64() });
            }
        }
        let root_idx = *index
            .get(&root)
            .ok_or_else(|| GeometryError::Schema(format!("root {root} is not a listed point")))?;

        let n = points.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for [p, c] in edges {
            let pi = *index.get(p).ok_or_else(|| GeometryError::Schema(format!("edge refers to unknown point {p}")))?;
            let ci = *index.get(c).ok_or_else(|| GeometryError::Schema(format!("edge refers to unknown point {c}")))?;
            if parent[ci].is_some() {
                return Err(GeometryError::NotATree(format!("point {c} has more than one parent")));
            }
            parent[ci] = Some(pi);
            children[pi].push(ci);
        }
        if parent[root_idx].is_some() {
            return Err(GeometryError::NotATree(format!("root {root} has a parent")));
        }
        for ch in &mut children {
            ch.sort_by_key(|&i| points[i].id);
        }

        // Breadth-first from the root: every point must be reached exactly once.
        let mut distance = vec![T::zero(); n];
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::from([root_idx]);
        visited[root_idx] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &c in &children[i] {
                if visited[c] {
                    return Err(GeometryError::NotATree("cyclic connectivity".into()));
                }
                visited[c] = true;
                count += 1;
                let step = dist(&points[i].xyz, &points[c].xyz);
                if !(step > T::zero()) {
                    return Err(GeometryError::Schema(format!(
                        "points {} and {} coincide; path distance must increase strictly",
                        points[i].id, points[c].id
                    )));
                }
                distance[c] = distance[i] + step;
                queue.push_back(c);
            }
        }
        if count != n {
            let unreached: Vec<String> =
                (0..n).filter(|i| !visited[*i]).take(5).map(|i| points[i].id.to_string()).collect();
            return Err(GeometryError::NotATree(format!(
                "cyclic or disconnected connectivity (unreached points include {})",
                unreached.join(", ")
            )));
        }

        for (ci, p) in parent.iter().enumerate() {
            if let Some(pi) = *p {
                let (a, b) = (&points[pi], &points[ci]);
                if !a.in_junction && !b.in_junction && a.branch_id != b.branch_id {
                    return Err(GeometryError::Schema(format!(
                        "branch id changes between {} and {} outside a junction region",
                        a.id, b.id
                    )));
                }
            }
        }

        Ok(Self { points, index, parent, children, distance, root: root_idx })
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let file: CenterlineFile<T> = serde_json::from_str(text).map_err(|e| GeometryError::Schema(e.to_string()))?;
        Self::new(file.points, &file.edges, file.root)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut edges = Vec::with_capacity(self.points.len());
        for (ci, p) in self.parent.iter().enumerate() {
            if let Some(pi) = p {
                edges.push([self.points[*pi].id, self.points[ci].id]);
            }
        }
        edges.sort();
        let file = CenterlineFile { points: self.points.clone(), edges, root: self.points[self.root].id };
        serde_json::to_string(&file).expect("centerline serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GeometryError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))
    }

    fn idx(&self, id: PointId) -> usize {
        *self.index.get(&id).unwrap_or_else(|| panic!("unknown centerline point {id}"))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn root(&self) -> PointId {
        self.points[self.root].id
    }

    pub fn points(&self) -> impl Iterator<Item = &CenterlinePoint<T>> {
        self.points.iter()
    }

    pub fn point(&self, id: PointId) -> &CenterlinePoint<T> {
        &self.points[self.idx(id)]
    }

    pub fn parent(&self, id: PointId) -> Option<PointId> {
        self.parent[self.idx(id)].map(|i| self.points[i].id)
    }

    pub fn children(&self, id: PointId) -> Vec<PointId> {
        self.children[self.idx(id)].iter().map(|&i| self.points[i].id).collect()
    }

    pub fn is_leaf(&self, id: PointId) -> bool {
        self.children[self.idx(id)].is_empty()
    }

    /// Cumulative centerline distance from the root.
    pub fn path_distance(&self, id: PointId) -> T {
        self.distance[self.idx(id)]
    }

    /// Distinct branch ids of non-junction points.
    pub fn branches(&self) -> BTreeSet<usize> {
        self.points.iter().filter(|p| !p.in_junction).map(|p| p.branch_id).collect()
    }

    /// Points from `ancestor` down to `descendant`, both included.
    pub fn path(&self, ancestor: PointId, descendant: PointId) -> Option<Vec<PointId>> {
        let stop = self.idx(ancestor);
        let mut cur = self.idx(descendant);
        let mut out = vec![self.points[cur].id];
        while cur != stop {
            cur = self.parent[cur]?;
            out.push(self.points[cur].id);
        }
        out.reverse();
        Some(out)
    }

    /// Centerline length of a point path.
    pub fn path_length(&self, path: &[PointId]) -> T {
        path.windows(2).map(|w| dist(&self.point(w[0]).xyz, &self.point(w[1]).xyz)).sum()
    }

    pub fn leaves(&self) -> Vec<PointId> {
        let mut v: Vec<PointId> =
            (0..self.points.len()).filter(|&i| self.children[i].is_empty()).map(|i| self.points[i].id).collect();
        v.sort();
        v
    }
}

/// Incremental construction of labelled centerlines with tangents derived
/// from the point positions.
#[derive(Debug, Clone, Default)]
pub struct CenterlineBuilder<T: Real> {
    xyz: Vec<[T; 3]>,
    misr: Vec<T>,
    branch: Vec<usize>,
    junction: Vec<bool>,
    parent: Vec<Option<usize>>,
}

impl<T: Real> CenterlineBuilder<T> {
    pub fn new() -> Self {
        Self { xyz: Vec::new(), misr: Vec::new(), branch: Vec::new(), junction: Vec::new(), parent: Vec::new() }
    }

    /// Adds a point and returns its id (ids are assigned sequentially from 0).
    pub fn add(&mut self, parent: Option<PointId>, xyz: [T; 3], misr: T, branch_id: usize, in_junction: bool) -> PointId {
        let id = self.xyz.len();
        self.xyz.push(xyz);
        self.misr.push(misr);
        self.branch.push(branch_id);
        self.junction.push(in_junction);
        self.parent.push(parent.map(|p| p.0));
        PointId(id)
    }

    pub fn position(&self, id: PointId) -> [T; 3] {
        self.xyz[id.0]
    }

    pub fn len(&self) -> usize {
        self.xyz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xyz.is_empty()
    }

    /// Tangent at each point: direction from its parent to its continuing
    /// child (same branch if one exists). End points use the one-sided segment.
    pub fn build(self) -> Result<CenterlineTree<T>, GeometryError> {
        let n = self.xyz.len();
        let mut children = vec![Vec::new(); n];
        let mut root = None;
        for (c, p) in self.parent.iter().enumerate() {
            match p {
                Some(p) => children[*p].push(c),
                None if root.is_none() => root = Some(c),
                None => return Err(GeometryError::NotATree("builder has more than one root".into())),
            }
        }
        let root = root.ok_or_else(|| GeometryError::Schema("empty centerline".into()))?;
        let mut points = Vec::with_capacity(n);
        let mut edges = Vec::new();
        for i in 0..n {
            let next = children[i]
                .iter()
                .copied()
                .find(|&c| self.branch[c] == self.branch[i] && !self.junction[c])
                .or_else(|| children[i].first().copied());
            let a = self.parent[i].map(|p| self.xyz[p]).unwrap_or(self.xyz[i]);
            let b = next.map(|c| self.xyz[c]).unwrap_or(self.xyz[i]);
            let mut t = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let mut norm = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
            if !(norm > T::zero()) {
                t = [T::zero(), T::zero(), T::one()];
                norm = T::one();
            }
            points.push(CenterlinePoint {
                id: PointId(i),
                xyz: self.xyz[i],
                misr: self.misr[i],
                tangent: [t[0] / norm, t[1] / norm, t[2] / norm],
                branch_id: self.branch[i],
                in_junction: self.junction[i],
            });
            if let Some(p) = self.parent[i] {
                edges.push([PointId(p), PointId(i)]);
            }
        }
        CenterlineTree::new(points, &edges, PointId(root))
    }
}
