//! Handedness-invariant sign features and a CART decision tree over the six
//! sign groups.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoints::{CoordinateFrame, KeypointSequence};
use crate::kinematics::{cos_dist, MirrorConvention};
use crate::linguistic::{Hand, ReferencePoseSequence, SignGroup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Smaller of the two wrists' vertical ranges, in torso lengths.
    pub f1_min_wrist_range: f64,
    /// Cosine distance between the initial poses of the two hands.
    pub f2_init_pose_dist: f64,
    /// Larger of the two hands' initial-to-final cosine distances.
    pub f3_max_pose_change: f64,
}

impl FeatureVector {
    pub fn new(f1: f64, f2: f64, f3: f64) -> Self {
        FeatureVector {
            f1_min_wrist_range: f1,
            f2_init_pose_dist: f2,
            f3_max_pose_change: f3,
        }
    }

    /// Feature by 1-based index.
    pub fn get(&self, feature: usize) -> f64 {
        match feature {
            1 => self.f1_min_wrist_range,
            2 => self.f2_init_pose_dist,
            3 => self.f3_max_pose_change,
            _ => panic!("feature index {feature} outside 1..=3"),
        }
    }
}

fn wrist_height_range(seq: &KeypointSequence, hand: Hand) -> Result<f64> {
    let heights: Vec<f64> = seq.frames().iter().filter_map(|f| f.wrist(hand)).map(|k| k.y).collect();
    if heights.is_empty() {
        return Err(Error::WristUndetected { hand });
    }
    let max = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = heights.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Features of a normalised sequence and both hands' reference poses. Static
/// references count as transitions from a pose to itself.
pub fn extract_features(
    seq: &KeypointSequence,
    rps_left: &ReferencePoseSequence,
    rps_right: &ReferencePoseSequence,
    mirror: &MirrorConvention,
) -> Result<FeatureVector> {
    if seq.coordinates != CoordinateFrame::Normalized {
        return Err(Error::Invalid("features need a normalised sequence".into()));
    }
    let f1 = wrist_height_range(seq, Hand::Left)?.min(wrist_height_range(seq, Hand::Right)?);
    let (li, lf) = rps_left.endpoints();
    let (ri, rf) = rps_right.endpoints();
    let f2 = cos_dist(ri, &mirror.reflect(li));
    let f3 = cos_dist(li, lf).max(cos_dist(ri, rf));
    Ok(FeatureVector::new(f1, f2, f3))
}

// ---------------------------------------------------------------------------
// Decision tree

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(SignGroup),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeMetadata {
    pub depth: usize,
    pub impurity: String,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub training_samples: usize,
}

/// Binary tree stored as a node list; node 0 is the root and children always
/// have larger ids than their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    pub metadata: TreeMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until every leaf is pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(4),
            min_leaf: 2,
        }
    }
}

fn gini(counts: &[usize; 6], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize; 6]) -> SignGroup {
    let mut best = 0;
    for g in 1..6 {
        if counts[g] > counts[best] {
            best = g;
        }
    }
    SignGroup::ALL[best]
}

fn class_counts(data: &[(FeatureVector, SignGroup)], idx: &[usize]) -> [usize; 6] {
    let mut c = [0; 6];
    for &i in idx {
        c[data[i].1.index()] += 1;
    }
    c
}

struct Builder<'a> {
    data: &'a [(FeatureVector, SignGroup)],
    params: TreeParams,
    nodes: Vec<TreeNode>,
    depth: usize,
}

impl Builder<'_> {
    /// Best (feature, threshold) by weighted Gini; earlier feature and lower
    /// threshold win ties.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len();
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in 1..=3 {
            let mut sorted: Vec<(f64, usize)> = idx
                .iter()
                .map(|&i| (self.data[i].0.get(feature), self.data[i].1.index()))
                .collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0usize; 6];
            let mut right = [0usize; 6];
            for &(_, g) in &sorted {
                right[g] += 1;
            }
            for k in 0..n - 1 {
                let g = sorted[k].1;
                left[g] += 1;
                right[g] -= 1;
                let (a, b) = (sorted[k].0, sorted[k + 1].0);
                if a == b {
                    continue;
                }
                let nl = k + 1;
                let nr = n - nl;
                if nl < self.params.min_leaf || nr < self.params.min_leaf {
                    continue;
                }
                let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                let threshold = 0.5 * (a + b);
                if best.is_none_or(|(bi, _, _)| impurity < bi - 1e-12) {
                    best = Some((impurity, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let counts = class_counts(self.data, &idx);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf(majority(&counts)));
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || self.params.max_depth.is_some_and(|d| depth >= d) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&idx) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.data[i].0.get(feature) <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Greedy CART with Gini impurity and midpoint thresholds.
pub fn fit_tree(data: &[(FeatureVector, SignGroup)], params: TreeParams) -> Result<DecisionTree> {
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut b = Builder {
        data,
        params: TreeParams {
            min_leaf: params.min_leaf.max(1),
            ..params
        },
        nodes: Vec::new(),
        depth: 0,
    };
    b.grow((0..data.len()).collect(), 0);
    Ok(DecisionTree {
        metadata: TreeMetadata {
            depth: b.depth,
            impurity: "gini".into(),
            max_depth: params.max_depth,
            min_leaf: b.params.min_leaf,
            training_samples: data.len(),
        },
        nodes: b.nodes,
    })
}

impl DecisionTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Builds and validates a tree from a node list.
    pub fn from_nodes(nodes: Vec<TreeNode>, metadata: TreeMetadata) -> Result<Self> {
        validate(&nodes)?;
        Ok(DecisionTree { nodes, metadata })
    }

    pub fn predict(&self, f: &FeatureVector) -> SignGroup {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf(g) => return g,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if f.get(feature) <= threshold { left } else { right },
            }
        }
    }

    pub fn accuracy(&self, data: &[(FeatureVector, SignGroup)]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data.iter().filter(|(f, g)| self.predict(f) == *g).count();
        hits as f64 / data.len() as f64
    }

    /// Hand-made tree for use without a training corpus. Low `f1` means one
    /// hand barely moves (passive or absent non-dominant hand); `f2` compares
    /// the two handshapes and `f3` detects handshape transitions.
    pub fn fallback(t: &FallbackThresholds) -> Self {
        use SignGroup::*;
        let split = |feature, threshold, left, right| TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        let nodes = vec![
            split(1, t.f1, 1, 6),
            split(3, t.f3, 2, 5),
            split(2, t.f2, 3, 4),
            TreeNode::Leaf(G1a2a),
            TreeNode::Leaf(G3a),
            TreeNode::Leaf(G2b3b),
            split(3, t.f3, 7, 8),
            TreeNode::Leaf(G1a2a),
            TreeNode::Leaf(G1b),
        ];
        DecisionTree {
            nodes,
            metadata: TreeMetadata {
                depth: 3,
                impurity: "hand-crafted".into(),
                max_depth: Some(3),
                min_leaf: 0,
                training_samples: 0,
            },
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> String {
        let file = TreeFile {
            nodes: self.nodes.iter().enumerate().map(|(id, n)| RawNode::from_node(id, n)).collect(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string_pretty(&file).expect("tree serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TreeFile =
            serde_json::from_str(text).map_err(|e| Error::malformed("tree", e.to_string()))?;
        let nodes = file
            .nodes
            .iter()
            .enumerate()
            .map(|(i, raw)| raw.to_node(i))
            .collect::<Result<Vec<_>>>()?;
        DecisionTree::from_nodes(nodes, file.metadata)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DecisionTree::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FallbackThresholds {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl Default for FallbackThresholds {
    fn default() -> Self {
        FallbackThresholds {
            f1: 0.5,
            f2: 0.15,
            f3: 0.15,
        }
    }
}

fn validate(nodes: &[TreeNode]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::InvalidTree {
            node: 0,
            message: "tree has no nodes".into(),
        });
    }
    let mut parents = vec![0usize; nodes.len()];
    for (id, n) in nodes.iter().enumerate() {
        if let TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } = *n
        {
            let bad = |message: String| Error::InvalidTree { node: id, message };
            if !(1..=3).contains(&feature) {
                return Err(bad(format!("feature index {feature} outside 1..=3")));
            }
            if !threshold.is_finite() {
                return Err(bad("threshold is not finite".into()));
            }
            for child in [left, right] {
                if child <= id || child >= nodes.len() {
                    return Err(bad(format!("child {child} must be a later node id")));
                }
                parents[child] += 1;
            }
        }
    }
    if let Some(id) = (1..nodes.len()).find(|&i| parents[i] != 1) {
        return Err(Error::InvalidTree {
            node: id,
            message: format!("node has {} parents, expected 1", parents[id]),
        });
    }
    Ok(())
}

/// On-disk node: a split carries feature/threshold/left/right, a leaf its label.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawNode {
    id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaf: Option<String>,
}

impl RawNode {
    fn from_node(id: usize, n: &TreeNode) -> Self {
        match *n {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => RawNode {
                id,
                feature: Some(feature),
                threshold: Some(threshold),
                left: Some(left),
                right: Some(right),
                leaf: None,
            },
            TreeNode::Leaf(g) => RawNode {
                id,
                feature: None,
                threshold: None,
                left: None,
                right: None,
                leaf: Some(g.to_string()),
            },
        }
    }

    fn to_node(&self, index: usize) -> Result<TreeNode> {
        let bad = |message: &str| Error::InvalidTree {
            node: self.id,
            message: message.into(),
        };
        if self.id != index {
            return Err(bad(&format!("listed at position {index}; ids must be 0, 1, 2, ...")));
        }
        match (&self.leaf, self.feature, self.threshold, self.left, self.right) {
            (Some(label), None, None, None, None) => Ok(TreeNode::Leaf(
                label.parse().map_err(|_| bad(&format!("unknown group {label:?}")))?,
            )),
            (None, Some(feature), Some(threshold), Some(left), Some(right)) => Ok(TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            }),
            _ => Err(bad("node must be either a leaf or a complete split")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeFile {
    nodes: Vec<RawNode>,
    metadata: TreeMetadata,
}

// ---------------------------------------------------------------------------
// Training data

#[derive(Debug, Serialize, Deserialize)]
struct FeatureRow {
    f1: f64,
    f2: f64,
    f3: f64,
    group: String,
}

/// Reads `f1,f2,f3,group` rows with a header line.
pub fn read_training_data(path: impl AsRef<Path>) -> Result<Vec<(FeatureVector, SignGroup)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_training_data(&text).map_err(|m| Error::malformed(path.display().to_string(), m))
}

pub fn parse_training_data(text: &str) -> std::result::Result<Vec<(FeatureVector, SignGroup)>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<FeatureRow>().enumerate() {
        let row = row.map_err(|e| format!("row {}: {e}", i + 1))?;
        let group = row
            .group
            .parse()
            .map_err(|_| format!("row {}: unknown group {:?}", i + 1, row.group))?;
        let f = FeatureVector::new(row.f1, row.f2, row.f3);
        if ![f.f1_min_wrist_range, f.f2_init_pose_dist, f.f3_max_pose_change]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(format!("row {}: non-finite feature", i + 1));
        }
        out.push((f, group));
    }
    Ok(out)
}

pub fn write_training_data(data: &[(FeatureVector, SignGroup)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    for (f, g) in data {
        w.serialize(FeatureRow {
            f1: f.f1_min_wrist_range,
            f2: f.f2_init_pose_dist,
            f3: f.f3_max_pose_change,
            group: g.to_string(),
        })
        .expect("in-memory CSV write");
    }
    let bytes = w.into_inner().expect("in-memory CSV flush");
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use SignGroup::*;

    fn fv(f1: f64, f2: f64, f3: f64) -> FeatureVector {
        FeatureVector::new(f1, f2, f3)
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let t = fit_tree(&[(fv(0.1, 0.2, 0.3), G1b), (fv(0.5, 0.2, 0.1), G1b)], TreeParams::default()).unwrap();
        assert_eq!(t.nodes(), &[TreeNode::Leaf(G1b)]);
        assert_eq!(t.predict(&fv(9.0, 9.0, 9.0)), G1b);
    }

    #[test]
    fn two_point_split_on_f3() {
        let data = [(fv(0.3, 0.3, 0.05), G1a2a), (fv(0.3, 0.3, 1.5), G1b)];
        let params = TreeParams { max_depth: Some(4), min_leaf: 1 };
        let t = fit_tree(&data, params).unwrap();
        let TreeNode::Split { feature, threshold, .. } = t.nodes()[0] else { panic!() };
        assert_eq!(feature, 3);
        assert_eq!(threshold, (0.05 + 1.5) / 2.0);
        assert_eq!(t.predict(&fv(0.3, 0.3, 0.05)), G1a2a);
        assert_eq!(t.predict(&fv(0.3, 0.3, threshold)), G1a2a);
        assert_eq!(t.predict(&fv(0.3, 0.3, threshold + 1e-9)), G1b);
    }

    #[test]
    fn conflicting_labels_use_group_order() {
        let f = fv(1.0, 1.0, 1.0);
        let t = fit_tree(&[(f, G3a), (f, G0b), (f, G3a), (f, G0b)], TreeParams::default()).unwrap();
        assert_eq!(t.predict(&f), G0b);
    }

    #[test]
    fn validation_errors() {
        let json = DecisionTree::fallback(&FallbackThresholds::default()).to_json();
        let t = DecisionTree::from_json(&json).unwrap();
        assert_eq!(t, DecisionTree::fallback(&FallbackThresholds::default()));
        assert!(DecisionTree::from_json(&json[..json.len() / 2]).is_err());
        let bad = json.replacen("\"feature\": 1", "\"feature\": 4", 1);
        assert!(matches!(DecisionTree::from_json(&bad), Err(Error::InvalidTree { node: 0, .. })));
        let cyc = json.replacen("\"left\": 1", "\"left\": 0", 1);
        assert!(DecisionTree::from_json(&cyc).is_err());
    }

    #[test]
    fn training_csv() {
        let rows = parse_training_data("f1,f2,f3,group\n0.1,0.2,0.3,G0a\n").unwrap();
        assert_eq!(rows, vec![(fv(0.1, 0.2, 0.3), G0a)]);
        assert!(parse_training_data("f1,f2,f3,group\n0.1,0.2,G0a\n").is_err());
        assert!(parse_training_data("f1,f2,f3,group\n0.1,0.2,0.3,G9\n").is_err());
    }
}
