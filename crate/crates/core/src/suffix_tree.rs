//! Depth-limited, frequency-annotated suffix trees used as class profiles.
//!
//! Nodes (not edges) carry one character each, and the path from the root to
//! a node spells one substring of the class text. A node's frequency is the
//! number of positions at which that substring occurs. There is no terminal
//! symbol: inserting a string walks every suffix down at most `depth_limit`
//! levels, creating children on demand and bumping frequencies along the way.
//!
//! Nodes live in an arena. Siblings form a linked list kept sorted by label,
//! so traversal order (and the serialized profile) does not depend on the
//! order documents were inserted in. Children of the root are additionally
//! indexed by code point for the Latin-1 range, which covers almost every
//! lookup on real mail.

use std::io::{Read, Write};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_DEPTH: usize = 16;
pub const DEFAULT_DEPTH: usize = 8;

const NIL: u32 = u32::MAX;
const ROOT: u32 = 0;
const ROOT_INDEX_SIZE: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(ROOT);

    pub(crate) fn raw(self) -> u32 {
        self.0
    }
}

#[derive(Clone, Debug)]
struct NodeData {
    label: char,
    frequency: u32,
    /// Sum of the children's frequencies.
    child_sum: u32,
    first_child: u32,
    next_sibling: u32,
    parent: u32,
}

#[derive(Clone, Debug)]
pub struct ClassTree {
    nodes: Vec<NodeData>,
    root_index: Vec<u32>,
    depth_limit: usize,
    doc_count: u64,
    char_count: u64,
    level_frequency: Vec<u64>,
    level_nodes: Vec<u64>,
}

fn check_depth(depth: usize) -> Result<()> {
    if (1..=MAX_DEPTH).contains(&depth) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "tree depth must be in 1..={MAX_DEPTH}, got {depth}"
        )))
    }
}

impl ClassTree {
    pub fn new(depth_limit: usize) -> Result<Self> {
        check_depth(depth_limit)?;
        Ok(ClassTree {
            nodes: vec![NodeData {
                label: '\0',
                frequency: 0,
                child_sum: 0,
                first_child: NIL,
                next_sibling: NIL,
                parent: NIL,
            }],
            root_index: vec![NIL; ROOT_INDEX_SIZE],
            depth_limit,
            doc_count: 0,
            char_count: 0,
            level_frequency: vec![0; depth_limit + 1],
            level_nodes: vec![0; depth_limit + 1],
        })
    }

    pub fn depth_limit(&self) -> usize {
        self.depth_limit
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn char_count(&self) -> u64 {
        self.char_count
    }

    /// Number of nodes, root excluded.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Sum of node frequencies at `level` (1-based; 0 for the root level or
    /// anything past the depth limit).
    pub fn level_frequency_sum(&self, level: usize) -> u64 {
        if level == 0 {
            return 0;
        }
        self.level_frequency.get(level).copied().unwrap_or(0)
    }

    pub fn root(&self) -> NodeRef<'_> {
        NodeRef {
            tree: self,
            id: ROOT,
        }
    }

    pub fn node(&self, id: NodeId) -> NodeRef<'_> {
        assert!((id.0 as usize) < self.nodes.len(), "node id out of range");
        NodeRef {
            tree: self,
            id: id.0,
        }
    }

    /// Insert every suffix of `s`, truncated to the depth limit. Counts as one
    /// document unless `s` is empty.
    pub fn insert_string(&mut self, s: &str) {
        let chars: Vec<char> = s.chars().collect();
        self.insert_chars(&chars);
    }

    pub fn insert_chars(&mut self, s: &[char]) {
        if s.is_empty() {
            return;
        }
        self.doc_count += 1;
        self.char_count += s.len() as u64;
        for start in 0..s.len() {
            let end = (start + self.depth_limit).min(s.len());
            let mut node = ROOT;
            for (offset, &c) in s[start..end].iter().enumerate() {
                let level = offset + 1;
                let child = self.child_or_insert(node, c, level);
                let data = &mut self.nodes[child as usize];
                data.frequency = data
                    .frequency
                    .checked_add(1)
                    .expect("substring frequency exceeds u32::MAX");
                if node != ROOT {
                    self.nodes[node as usize].child_sum += 1;
                }
                self.level_frequency[level] += 1;
                node = child;
            }
        }
    }

    fn child_or_insert(&mut self, parent: u32, c: char, level: usize) -> u32 {
        if let Some(found) = self.child(parent, c) {
            return found;
        }
        let mut prev = NIL;
        let mut cur = self.nodes[parent as usize].first_child;
        while cur != NIL && self.nodes[cur as usize].label < c {
            prev = cur;
            cur = self.nodes[cur as usize].next_sibling;
        }
        let id = u32::try_from(self.nodes.len())
            .ok()
            .filter(|&id| id != NIL)
            .expect("suffix tree node count exceeds u32 range");
        self.nodes.push(NodeData {
            label: c,
            frequency: 0,
            child_sum: 0,
            first_child: NIL,
            next_sibling: cur,
            parent,
        });
        if prev == NIL {
            self.nodes[parent as usize].first_child = id;
        } else {
            self.nodes[prev as usize].next_sibling = id;
        }
        if parent == ROOT && (c as usize) < ROOT_INDEX_SIZE {
            self.root_index[c as usize] = id;
        }
        self.level_nodes[level] += 1;
        id
    }

    #[inline]
    pub(crate) fn child(&self, parent: u32, c: char) -> Option<u32> {
        if parent == ROOT && (c as usize) < ROOT_INDEX_SIZE {
            let id = self.root_index[c as usize];
            return (id != NIL).then_some(id);
        }
        let mut cur = self.nodes[parent as usize].first_child;
        while cur != NIL {
            let label = self.nodes[cur as usize].label;
            if label == c {
                return Some(cur);
            }
            if label > c {
                return None;
            }
            cur = self.nodes[cur as usize].next_sibling;
        }
        None
    }

    pub(crate) fn children_raw(&self, parent: u32) -> ChildIds<'_> {
        ChildIds {
            tree: self,
            next: self.nodes[parent as usize].first_child,
        }
    }

    #[inline]
    pub(crate) fn label_raw(&self, id: u32) -> char {
        self.nodes[id as usize].label
    }

    #[inline]
    pub(crate) fn frequency_raw(&self, id: u32) -> u64 {
        self.nodes[id as usize].frequency as u64
    }

    /// Conditional probability of a non-root node: its frequency over the
    /// summed frequencies of its parent's children.
    #[inline]
    pub(crate) fn conditional_raw(&self, id: u32) -> f64 {
        let data = &self.nodes[id as usize];
        let denominator = if data.parent == ROOT {
            self.level_frequency[1]
        } else {
            self.nodes[data.parent as usize].child_sum as u64
        };
        data.frequency as f64 / denominator as f64
    }

    /// Walk `u` from the root; `None` if `u` is empty or leaves the tree.
    pub fn find_node(&self, u: &str) -> Option<NodeRef<'_>> {
        let mut node = ROOT;
        let mut any = false;
        for c in u.chars() {
            node = self.child(node, c)?;
            any = true;
        }
        any.then_some(NodeRef {
            tree: self,
            id: node,
        })
    }

    pub fn conditional_probability(&self, node: NodeRef<'_>) -> Result<f64> {
        self.check_non_root(node)?;
        Ok(self.conditional_raw(node.id))
    }

    /// Frequency over the summed frequencies of every node on the same level.
    pub fn total_probability(&self, node: NodeRef<'_>) -> Result<f64> {
        self.check_non_root(node)?;
        let level = node.depth();
        Ok(node.frequency() as f64 / self.level_frequency[level] as f64)
    }

    fn check_non_root(&self, node: NodeRef<'_>) -> Result<()> {
        if !std::ptr::eq(node.tree, self) {
            return Err(Error::Contract("node belongs to a different tree".into()));
        }
        if node.id == ROOT {
            return Err(Error::Contract("the root has no probability".into()));
        }
        Ok(())
    }

    /// Full-traversal statistics.
    pub fn stats(&self) -> TreeStats {
        let mut stats = TreeStats {
            node_count: 0,
            frequency_sum: 0,
            per_level_frequency_sums: vec![0; self.depth_limit + 1],
            per_level_node_counts: vec![0; self.depth_limit + 1],
            density: 0.0,
        };
        let mut internal = 0u64;
        let mut child_links = 0u64;
        let mut stack = vec![(ROOT, 0usize)];
        while let Some((id, level)) = stack.pop() {
            if id != ROOT {
                let f = self.frequency_raw(id);
                stats.node_count += 1;
                stats.frequency_sum += f;
                stats.per_level_frequency_sums[level] += f;
                stats.per_level_node_counts[level] += 1;
            }
            let mut children = 0;
            for child in self.children_raw(id) {
                children += 1;
                stack.push((child, level + 1));
            }
            if children > 0 {
                internal += 1;
                child_links += children;
            }
        }
        if internal > 0 {
            stats.density = child_links as f64 / internal as f64;
        }
        stats
    }

    /// Write the profile as compact JSON:
    /// `{"depth":d,"doc_count":n,"char_count":m,"root":{"k":[...]}}` with
    /// nodes `{"c":codepoint,"f":frequency,"k":[children]}` in preorder,
    /// siblings ordered by code point.
    pub fn write_profile<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, &ProfileOut { tree: self })?;
        Ok(())
    }

    pub fn to_profile_string(&self) -> String {
        serde_json::to_string(&ProfileOut { tree: self }).expect("profile serialization")
    }

    pub fn read_profile<R: Read>(reader: R) -> Result<Self> {
        let file: ProfileIn = serde_json::from_reader(reader)?;
        Self::from_profile(file)
    }

    pub fn from_profile_str(s: &str) -> Result<Self> {
        Self::from_profile(serde_json::from_str(s)?)
    }

    fn from_profile(file: ProfileIn) -> Result<Self> {
        let mut tree = ClassTree::new(file.depth)?;
        if file.root.c.is_some() || file.root.f.is_some() {
            return Err(Error::Config("profile root must not carry c/f".into()));
        }
        tree.doc_count = file.doc_count;
        tree.char_count = file.char_count;
        let mut stack: Vec<(u32, usize, &JsonNode)> = vec![(ROOT, 0, &file.root)];
        while let Some((id, level, json)) = stack.pop() {
            if !json.k.is_empty() && level == tree.depth_limit {
                return Err(Error::Config(format!(
                    "profile node deeper than its depth limit {}",
                    tree.depth_limit
                )));
            }
            for child in &json.k {
                let (c, f) = match (child.c, child.f) {
                    (Some(c), Some(f)) if f > 0 => (c, f),
                    _ => {
                        return Err(Error::Config(
                            "profile node needs a code point and a positive frequency".into(),
                        ))
                    }
                };
                let c = char::from_u32(c)
                    .ok_or_else(|| Error::Config(format!("invalid code point {c} in profile")))?;
                if tree.child(id, c).is_some() {
                    return Err(Error::Config(format!(
                        "duplicate sibling label U+{:04X} in profile",
                        c as u32
                    )));
                }
                let child_id = tree.child_or_insert(id, c, level + 1);
                tree.nodes[child_id as usize].frequency = f;
                if id != ROOT {
                    let sum = &mut tree.nodes[id as usize].child_sum;
                    *sum = sum.checked_add(f).ok_or_else(|| {
                        Error::Config("child frequencies overflow in profile".into())
                    })?;
                }
                tree.level_frequency[level + 1] += f as u64;
                stack.push((child_id, level + 1, child));
            }
        }
        if tree.level_frequency[1] != tree.char_count {
            return Err(Error::Config(format!(
                "profile char_count {} disagrees with level-1 frequency sum {}",
                tree.char_count, tree.level_frequency[1]
            )));
        }
        Ok(tree)
    }
}

/// Build one tree from a document list.
pub fn build_class_tree<I, S>(docs: I, depth: usize) -> Result<ClassTree>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut tree = ClassTree::new(depth)?;
    for doc in docs {
        tree.insert_string(doc.as_ref());
    }
    Ok(tree)
}

pub(crate) struct ChildIds<'a> {
    tree: &'a ClassTree,
    next: u32,
}

impl Iterator for ChildIds<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.next == NIL {
            return None;
        }
        let id = self.next;
        self.next = self.tree.nodes[id as usize].next_sibling;
        Some(id)
    }
}

/// Borrowed view of one node.
#[derive(Clone, Copy, Debug)]
pub struct NodeRef<'a> {
    tree: &'a ClassTree,
    id: u32,
}

impl<'a> NodeRef<'a> {
    pub fn id(&self) -> NodeId {
        NodeId(self.id)
    }

    pub(crate) fn belongs_to(&self, tree: &ClassTree) -> bool {
        std::ptr::eq(self.tree, tree)
    }

    pub fn is_root(&self) -> bool {
        self.id == ROOT
    }

    /// `None` for the root.
    pub fn label(&self) -> Option<char> {
        (!self.is_root()).then(|| self.tree.label_raw(self.id))
    }

    pub fn frequency(&self) -> u64 {
        self.tree.frequency_raw(self.id)
    }

    pub fn parent(&self) -> Option<NodeRef<'a>> {
        let parent = self.tree.nodes[self.id as usize].parent;
        (parent != NIL).then_some(NodeRef {
            tree: self.tree,
            id: parent,
        })
    }

    /// Level of the node; the root is level 0.
    pub fn depth(&self) -> usize {
        let mut depth = 0;
        let mut id = self.id;
        while id != ROOT {
            depth += 1;
            id = self.tree.nodes[id as usize].parent;
        }
        depth
    }

    /// The substring this node represents.
    pub fn path(&self) -> String {
        let mut labels = Vec::new();
        let mut node = *self;
        while let Some(label) = node.label() {
            labels.push(label);
            node = node.parent().expect("non-root node has a parent");
        }
        labels.iter().rev().collect()
    }

    pub fn child(&self, c: char) -> Option<NodeRef<'a>> {
        self.tree.child(self.id, c).map(|id| NodeRef {
            tree: self.tree,
            id,
        })
    }

    pub fn children(&self) -> impl Iterator<Item = NodeRef<'a>> + 'a {
        let tree = self.tree;
        tree.children_raw(self.id)
            .map(move |id| NodeRef { tree, id })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeStats {
    pub node_count: u64,
    pub frequency_sum: u64,
    /// Indexed by level; entry 0 is the root level and always 0.
    pub per_level_frequency_sums: Vec<u64>,
    pub per_level_node_counts: Vec<u64>,
    /// Mean child count over nodes that have children (root included).
    pub density: f64,
}

struct ProfileOut<'a> {
    tree: &'a ClassTree,
}

impl Serialize for ProfileOut<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        map.serialize_entry("depth", &self.tree.depth_limit)?;
        map.serialize_entry("doc_count", &self.tree.doc_count)?;
        map.serialize_entry("char_count", &self.tree.char_count)?;
        map.serialize_entry(
            "root",
            &NodeOut {
                tree: self.tree,
                id: ROOT,
            },
        )?;
        map.end()
    }
}

struct NodeOut<'a> {
    tree: &'a ClassTree,
    id: u32,
}

impl Serialize for NodeOut<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        if self.id != ROOT {
            map.serialize_entry("c", &(self.tree.label_raw(self.id) as u32))?;
            map.serialize_entry("f", &self.tree.frequency_raw(self.id))?;
        }
        map.serialize_entry(
            "k",
            &ChildrenOut {
                tree: self.tree,
                id: self.id,
            },
        )?;
        map.end()
    }
}

struct ChildrenOut<'a> {
    tree: &'a ClassTree,
    id: u32,
}

impl Serialize for ChildrenOut<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(None)?;
        for child in self.tree.children_raw(self.id) {
            seq.serialize_element(&NodeOut {
                tree: self.tree,
                id: child,
            })?;
        }
        seq.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileIn {
    depth: usize,
    doc_count: u64,
    char_count: u64,
    root: JsonNode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonNode {
    c: Option<u32>,
    f: Option<u32>,
    #[serde(default)]
    k: Vec<JsonNode>,
}
