//! Hard instances: four-party End-of-Line graphs embedded as grid labelings and the
//! valuations built from them.

pub mod categories;
pub mod ieol;
pub mod label;
pub mod layout;
pub mod value;
pub mod verify;

pub use categories::{enumerate_square_categories, CategoryReport, Claim, SquareView, Window};
pub use ieol::{make_path_instance, validate_promises, Edge, EoLGraph, IEoLInstance, PromiseReport};
pub use label::{embed_labeling, GridLabeling, View};
pub use layout::{Crossing, CrossingKind, Layout};
pub use value::{hard_valuation, identical_instance, party_valuations, HardValuation, RefinedTable};
pub use verify::{
    crossings_disjoint, ef_to_eol, embedding_constraints, export_svg, gadget_windows, hard_search, max_label_step,
    sample_claims, ClaimSample, EolOutcome,
};
