//! Classification of central extensions of `C_p x C_p` by finitely
//! generated abelian groups.

pub mod abelian;
pub mod classify;
pub mod decompose;
pub mod engine;
pub mod normalize;
pub mod oracle;
pub mod presentation;

pub use abelian::{CentralVector, CyclicOrder, Factor, FgAbelian, Hom};
pub use engine::Element;
pub use presentation::{parse, Format, GroupPresentation};
