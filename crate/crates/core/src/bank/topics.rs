use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::BankError;
use crate::ids::TopicId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicNode {
    pub id: TopicId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<TopicId>,
}

impl TopicNode {
    pub fn root(id: impl Into<TopicId>, name: impl Into<String>) -> Self {
        Self { id: id.into(), name: name.into(), parent: None }
    }

    pub fn child(id: impl Into<TopicId>, name: impl Into<String>, parent: impl Into<TopicId>) -> Self {
        Self { id: id.into(), name: name.into(), parent: Some(parent.into()) }
    }
}

/// Forest of topics. Every parent reference resolves and no node is its own ancestor.
///
/// Nodes keep insertion order, which is also the export order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopicHierarchy {
    nodes: IndexMap<TopicId, TopicNode>,
}

impl TopicHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a hierarchy from nodes in any order, reporting every violation.
    pub fn from_nodes(nodes: Vec<TopicNode>) -> Result<Self, Vec<BankError>> {
        let mut errors = Vec::new();
        let mut map = IndexMap::with_capacity(nodes.len());
        for node in nodes {
            if node.id.as_str().trim().is_empty() {
                errors.push(BankError::InvalidId { kind: "topic", id: node.id.to_string() });
            }
            if map.contains_key(&node.id) {
                errors.push(BankError::DuplicateId { kind: "topic", id: node.id.to_string() });
                continue;
            }
            map.insert(node.id.clone(), node);
        }
        for node in map.values() {
            if let Some(parent) = &node.parent {
                if !map.contains_key(parent) {
                    errors.push(BankError::UnknownParent { topic: node.id.clone(), parent: parent.clone() });
                }
            }
        }
        if errors.is_empty() {
            for node in map.values() {
                // a walk longer than the node count must have revisited a node
                let mut cursor = node.parent.as_ref();
                let mut steps = 0;
                while let Some(p) = cursor {
                    steps += 1;
                    if p == &node.id || steps > map.len() {
                        errors.push(BankError::CycleDetected {
                            topic: node.id.clone(),
                            parent: node.parent.clone().expect("walk started at a parent"),
                        });
                        break;
                    }
                    cursor = map[p].parent.as_ref();
                }
            }
        }
        if errors.is_empty() {
            Ok(Self { nodes: map })
        } else {
            Err(errors)
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&TopicNode> {
        self.nodes.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TopicNode> {
        self.nodes.values()
    }

    pub fn roots(&self) -> impl Iterator<Item = &TopicNode> {
        self.nodes.values().filter(|n| n.parent.is_none())
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a TopicNode> + 'a {
        self.nodes
            .values()
            .filter(move |n| n.parent.as_ref().is_some_and(|p| p.as_str() == id))
    }

    /// Strict ancestors of `id`, nearest first. Empty for unknown ids.
    pub fn ancestors<'a>(&'a self, id: &str) -> impl Iterator<Item = &'a TopicId> + 'a {
        let mut cursor = self.nodes.get(id).and_then(|n| n.parent.as_ref());
        std::iter::from_fn(move || {
            let current = cursor?;
            cursor = self.nodes.get(current.as_str()).and_then(|n| n.parent.as_ref());
            Some(current)
        })
    }

    /// Whether `descendant` lies in the subtree rooted at `ancestor` (inclusive).
    pub fn is_within(&self, descendant: &str, ancestor: &str) -> bool {
        descendant == ancestor && self.contains(descendant)
            || self.ancestors(descendant).any(|a| a.as_str() == ancestor)
    }

    /// Number of edges between `id` and its root.
    pub fn depth(&self, id: &str) -> usize {
        self.ancestors(id).count()
    }

    /// Ids of the subtree rooted at `id`, including `id` itself.
    pub fn subtree(&self, id: &str) -> HashSet<&TopicId> {
        self.nodes.keys().filter(|n| self.is_within(n.as_str(), id)).collect()
    }

    pub fn add(&mut self, node: TopicNode) -> Result<(), BankError> {
        if node.id.as_str().trim().is_empty() {
            return Err(BankError::InvalidId { kind: "topic", id: node.id.to_string() });
        }
        if self.contains(node.id.as_str()) {
            // re-attaching an existing node beneath its own subtree is reported as the cycle it is
            if let Some(parent) = &node.parent {
                if self.is_within(parent.as_str(), node.id.as_str()) {
                    return Err(BankError::CycleDetected { topic: node.id, parent: parent.clone() });
                }
            }
            return Err(BankError::DuplicateId { kind: "topic", id: node.id.to_string() });
        }
        if let Some(parent) = &node.parent {
            if !self.contains(parent.as_str()) {
                return Err(BankError::UnknownParent { topic: node.id, parent: parent.clone() });
            }
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Moves `id` under `parent`, or makes it a root when `parent` is `None`.
    pub fn reparent(&mut self, id: &str, parent: Option<TopicId>) -> Result<(), BankError> {
        if !self.contains(id) {
            return Err(BankError::UnknownTopic { topic: id.into(), question: None });
        }
        if let Some(p) = &parent {
            if !self.contains(p.as_str()) {
                return Err(BankError::UnknownParent { topic: id.into(), parent: p.clone() });
            }
            if self.is_within(p.as_str(), id) {
                return Err(BankError::CycleDetected { topic: id.into(), parent: p.clone() });
            }
        }
        self.nodes[id].parent = parent;
        Ok(())
    }

    pub fn rename(&mut self, id: &str, name: impl Into<String>) -> Result<(), BankError> {
        let node = self
            .nodes
            .get_mut(id)
            .ok_or_else(|| BankError::UnknownTopic { topic: id.into(), question: None })?;
        node.name = name.into();
        Ok(())
    }

    /// Removes a leaf topic. Callers check that no question references it.
    pub(crate) fn remove_leaf(&mut self, id: &str) -> Result<TopicNode, BankError> {
        if !self.contains(id) {
            return Err(BankError::UnknownTopic { topic: id.into(), question: None });
        }
        if self.children(id).next().is_some() {
            return Err(BankError::TopicInUse(id.into()));
        }
        Ok(self.nodes.shift_remove(id).expect("checked above"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn econ() -> TopicHierarchy {
        let mut h = TopicHierarchy::new();
        h.add(TopicNode::root("econ", "Economics")).unwrap();
        h.add(TopicNode::child("econ.demand", "Demand", "econ")).unwrap();
        h
    }

    #[test]
    fn add_root_then_child() {
        let mut h = TopicHierarchy::new();
        h.add(TopicNode::root("econ", "Economics")).unwrap();
        assert_eq!(h.roots().count(), 1);
        h.add(TopicNode::child("econ.demand", "Demand", "econ")).unwrap();
        assert_eq!(h.children("econ").count(), 1);
        assert_eq!(h.depth("econ.demand"), 1);
    }

    #[test]
    fn reattaching_under_descendant_is_a_cycle() {
        let mut h = econ();
        let err = h.add(TopicNode::child("econ", "Economics", "econ.demand")).unwrap_err();
        assert!(matches!(err, BankError::CycleDetected { .. }), "{err:?}");
        let err = h.reparent("econ", Some("econ.demand".into())).unwrap_err();
        assert!(matches!(err, BankError::CycleDetected { .. }));
        let err = h.reparent("econ", Some("econ".into())).unwrap_err();
        assert!(matches!(err, BankError::CycleDetected { .. }));
    }

    #[test]
    fn duplicates_and_unknown_parents() {
        let mut h = econ();
        assert!(matches!(h.add(TopicNode::root("econ", "again")), Err(BankError::DuplicateId { .. })));
        assert!(matches!(
            h.add(TopicNode::child("x", "X", "nowhere")),
            Err(BankError::UnknownParent { .. })
        ));
    }

    #[test]
    fn from_nodes_accepts_any_order_and_finds_cycles() {
        let h = TopicHierarchy::from_nodes(vec![
            TopicNode::child("b", "B", "a"),
            TopicNode::root("a", "A"),
        ])
        .unwrap();
        assert!(h.is_within("b", "a"));
        let errs = TopicHierarchy::from_nodes(vec![
            TopicNode::child("a", "A", "b"),
            TopicNode::child("b", "B", "a"),
            TopicNode::root("c", "C"),
        ])
        .unwrap_err();
        assert!(errs.iter().all(|e| matches!(e, BankError::CycleDetected { .. })));
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn remove_only_leaves() {
        let mut h = econ();
        assert!(matches!(h.remove_leaf("econ"), Err(BankError::TopicInUse(_))));
        h.remove_leaf("econ.demand").unwrap();
        h.remove_leaf("econ").unwrap();
        assert!(h.is_empty());
    }
}
