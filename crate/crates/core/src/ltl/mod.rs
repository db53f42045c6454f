//! Co-safe LTL: parsing, good-prefix automata and model products.

mod dfa;
mod formula;
mod product;

pub use dfa::{to_dfa, to_dfa_with_limit, Dfa, MAX_DFA_STATES};
pub use formula::{parse_cosafe, Formula};
pub use product::{product_dtmc, product_mdp, state_letters, ProductDtmc, ProductMdp};
