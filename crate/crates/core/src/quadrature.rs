//! Fixed-order Gauss–Legendre rules.
//!
//! Rules are computed once per order and shared process-wide. There is no
//! adaptivity anywhere in the crate: every integral over a density cell uses
//! the same rule, so results are deterministic for a fixed configuration.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

/// Order used when callers do not ask for one.
pub const DEFAULT_ORDER: usize = 20;

/// Nodes and weights of a Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    order: usize,
    nodes: Arc<[(f64, f64)]>,
}

impl Rule {
    /// Rule of the given order (clamped to at least 1).
    pub fn new(order: usize) -> Self {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<[(f64, f64)]>>>> = OnceLock::new();
        let order = order.max(1);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        let nodes = map
            .entry(order)
            .or_insert_with(|| {
                let degree = NonZeroUsize::new(order).expect("order is at least 1");
                GaussLegendre::new(degree)
                    .as_node_weight_pairs()
                    .iter()
                    .copied()
                    .collect()
            })
            .clone();
        Self { order, nodes }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// (node, weight) pairs on the reference interval [-1, 1].
    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    /// Integrate a real function over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self
            .nodes
            .iter()
            .map(|&(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

impl Default for Rule {
    fn default() -> Self {
        Rule::new(DEFAULT_ORDER)
    }
}
