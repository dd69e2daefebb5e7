//! Knowledge parameters.

/// Tunable knowledge parameters; every field is an evolvable gene.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    pub max_knowledge_size: u32,
    pub base_value: f64,
    /// Indexed by `FeatureClass::index`.
    pub class_weights: [f64; 7],
    pub learning_factor: f64,
    pub winning_weight: f64,
    pub losing_weight: f64,
    /// Progressive bias weight in selection.
    pub selection_impact: f64,
    /// Multiplier on feature values in simulation.
    pub simulation_impact: f64,
    pub widening_c: f64,
    pub widening_alpha: f64,
    pub class_enabled: [bool; 7],
    pub class_itemsets: [bool; 7],
    pub itemsets_in_selection: bool,
    pub itemsets_in_simulation: bool,
    pub progressive_widening: bool,
    pub first_feature: bool,
    pub features_in_selection: bool,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters {
            max_knowledge_size: 32,
            base_value: 1.0,
            class_weights: [1.0; 7],
            learning_factor: 0.5,
            winning_weight: 1.0,
            losing_weight: 1.0,
            selection_impact: 1.0,
            simulation_impact: 1.0,
            widening_c: 1.0,
            widening_alpha: 0.5,
            class_enabled: [true; 7],
            class_itemsets: [true; 7],
            itemsets_in_selection: true,
            itemsets_in_simulation: true,
            progressive_widening: false,
            first_feature: false,
            features_in_selection: true,
        }
    }
}

/// Edges eligible under progressive widening: max(1, floor(c * n_p^alpha)),
/// clamped to the edge count.
pub fn widening_limit(n_p: u64, c: f64, alpha: f64, edges: usize) -> usize {
    let k = (c * (n_p as f64).powf(alpha)).floor();
    let k = if k.is_finite() && k >= 1.0 { k as usize } else { 1 };
    k.min(edges.max(1))
}
