//! Circuit structure construction: compiling weighted rules into a depth-2
//! sum-of-products circuit, and LearnSPN-style structure learning.

mod learnspn;
mod rules;

pub use learnspn::{factorized_circuit, g_test, learn_structure, LearnSpnConfig};
pub use rules::{compile_rules, rules_from_dataset, Rule, RuleSet};
