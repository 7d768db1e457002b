//! Upper-confidence tree search over routing states.
//!
//! Each rollout descends by maximum UCB, expands every SWAP child of the leaf
//! at once, scores the leaf with a [`ValueEstimator`] (zero when terminal), and
//! backs up the leaf value plus the rewards collected on the way down.

use thiserror::Error;

use crate::env::{Policy, RoutingState};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("search root is terminal")]
    TerminalRoot,
    #[error("at least one rollout is required")]
    NoRollouts,
}

/// Critic used to score leaves.
pub trait ValueEstimator: Sync {
    fn value(&self, state: &RoutingState) -> f64;
}

/// Scores every state as zero, so the search is driven by rewards alone.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroValue;

impl ValueEstimator for ZeroValue {
    fn value(&self, _state: &RoutingState) -> f64 {
        0.0
    }
}

impl<E: ValueEstimator + ?Sized> ValueEstimator for &E {
    fn value(&self, state: &RoutingState) -> f64 {
        (**self).value(state)
    }
}

pub const DEFAULT_ROLLOUTS: usize = 200;
pub const DEFAULT_EXPLORATION: f64 = std::f64::consts::SQRT_2;

/// `Q/N + c * sqrt(ln(parent_n) / child_n)`, or `+inf` for an unvisited child.
pub fn ucb(parent_n: u32, child_n: u32, child_q: f64, c: f64) -> f64 {
    if child_n == 0 {
        return f64::INFINITY;
    }
    let n = f64::from(child_n);
    child_q / n + c * (f64::from(parent_n).ln() / n).sqrt()
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    pub state: RoutingState,
    pub parent: Option<usize>,
    pub visits: u32,
    /// Sum of backed-up returns from this node onward.
    pub value_sum: f64,
    /// Reward of the SWAP that produced this node; zero at the root.
    pub edge_reward: f64,
    /// Estimator output, recorded when the node is first evaluated.
    pub leaf_value: Option<f64>,
    /// Arena indices, one per action, once expanded.
    pub children: Option<Vec<usize>>,
}

impl SearchNode {
    fn new(state: RoutingState, parent: Option<usize>, edge_reward: f64) -> Self {
        Self {
            state,
            parent,
            visits: 0,
            value_sum: 0.0,
            edge_reward,
            leaf_value: None,
            children: None,
        }
    }

    /// Mean return measured from the parent, including this node's edge reward.
    pub fn mean_return(&self) -> Option<f64> {
        (self.visits > 0).then(|| self.edge_reward + self.value_sum / f64::from(self.visits))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChildStats {
    pub visits: u32,
    /// `edge_reward + Q/N`, or `None` if never visited.
    pub mean_return: Option<f64>,
    pub predicted_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub best_action: usize,
    pub root_value: f64,
    pub child_stats: Vec<ChildStats>,
}

/// Arena-allocated search tree. Node 0 is the root.
#[derive(Clone, Debug)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
    pub exploration: f64,
}

impl SearchTree {
    /// Creates the tree and expands the root, counting that as its first visit.
    pub fn new<E: ValueEstimator>(root: RoutingState, estimator: &E, exploration: f64) -> Result<Self, SearchError> {
        if root.is_terminal() {
            return Err(SearchError::TerminalRoot);
        }
        let mut tree = Self {
            nodes: vec![SearchNode::new(root, None, 0.0)],
            exploration,
        };
        let v = tree.evaluate_and_expand(0, estimator);
        tree.nodes[0].visits = 1;
        tree.nodes[0].value_sum = v;
        Ok(tree)
    }

    pub fn root(&self) -> &SearchNode {
        &self.nodes[0]
    }

    fn evaluate_and_expand<E: ValueEstimator>(&mut self, id: usize, estimator: &E) -> f64 {
        if self.nodes[id].state.is_terminal() {
            self.nodes[id].leaf_value = Some(0.0);
            return 0.0;
        }
        let num_actions = self.nodes[id].state.topology().num_edges();
        let mut children = Vec::with_capacity(num_actions);
        for edge in 0..num_actions {
            let (next, reward) = self.nodes[id].state.step(edge).expect("edge index in range");
            children.push(self.nodes.len());
            self.nodes.push(SearchNode::new(next, Some(id), reward as f64));
        }
        let v = estimator.value(&self.nodes[id].state);
        let node = &mut self.nodes[id];
        node.children = Some(children);
        node.leaf_value = Some(v);
        v
    }

    fn select_child(&self, id: usize) -> usize {
        let node = &self.nodes[id];
        let children = node.children.as_ref().expect("selecting from an expanded node");
        let mut best = children[0];
        let mut best_score = f64::NEG_INFINITY;
        for &child in children {
            let c = &self.nodes[child];
            let q = c.value_sum + f64::from(c.visits) * c.edge_reward;
            let score = ucb(node.visits, c.visits, q, self.exploration);
            if score > best_score {
                best = child;
                best_score = score;
            }
        }
        best
    }

    /// One selection, expansion, simulation and backup pass. Returns the leaf.
    pub fn rollout<E: ValueEstimator>(&mut self, estimator: &E) -> usize {
        let mut id = 0;
        while self.nodes[id].children.is_some() {
            id = self.select_child(id);
        }
        let leaf = id;
        let mut g = if self.nodes[leaf].visits == 0 {
            self.evaluate_and_expand(leaf, estimator)
        } else {
            // Only terminal leaves are revisited without being expanded.
            0.0
        };
        let mut cursor = Some(leaf);
        while let Some(n) = cursor {
            let node = &mut self.nodes[n];
            node.visits += 1;
            node.value_sum += g;
            g += node.edge_reward;
            cursor = node.parent;
        }
        leaf
    }

    pub fn result(&self) -> SearchResult {
        let root = self.root();
        let children = root.children.as_ref().expect("root is expanded");
        let child_stats: Vec<ChildStats> = children
            .iter()
            .map(|&c| {
                let n = &self.nodes[c];
                ChildStats {
                    visits: n.visits,
                    mean_return: n.mean_return(),
                    predicted_value: n.leaf_value,
                }
            })
            .collect();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (a, s) in child_stats.iter().enumerate() {
            if let Some(r) = s.mean_return {
                if r > best_score {
                    best = a;
                    best_score = r;
                }
            }
        }
        SearchResult {
            best_action: best,
            root_value: root.value_sum / f64::from(root.visits),
            child_stats,
        }
    }
}

/// Runs `rollouts` passes on a fresh tree rooted at `root`.
pub fn search<E: ValueEstimator>(
    root: &RoutingState,
    estimator: &E,
    rollouts: usize,
    exploration: f64,
) -> Result<SearchResult, SearchError> {
    if rollouts == 0 {
        return Err(SearchError::NoRollouts);
    }
    let mut tree = SearchTree::new(root.clone(), estimator, exploration)?;
    for _ in 0..rollouts {
        tree.rollout(estimator);
    }
    Ok(tree.result())
}

/// Routing policy that plays the search's best action at every step.
pub struct MctsPolicy<E> {
    pub estimator: E,
    pub rollouts: usize,
    pub exploration: f64,
}

impl<E: ValueEstimator> MctsPolicy<E> {
    pub fn new(estimator: E, rollouts: usize) -> Self {
        Self {
            estimator,
            rollouts: rollouts.max(1),
            exploration: DEFAULT_EXPLORATION,
        }
    }
}

impl<E: ValueEstimator> Policy for MctsPolicy<E> {
    fn choose(&mut self, state: &RoutingState) -> usize {
        search(state, &self.estimator, self.rollouts, self.exploration)
            .expect("router never searches from a terminal state")
            .best_action
    }
}
