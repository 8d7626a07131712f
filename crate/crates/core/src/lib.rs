//! Unital entanglement-breaking maps between matrix algebras: representation
//! conversions, EB detection, Choi-rank extremality, Radon-Nikodym
//! derivatives and C*-convex decompositions.

pub mod channel;
pub mod decomp;
pub mod eb;
pub mod error;
pub mod extremality;
pub mod gallery;
pub mod numkernel;
pub mod rng;

pub use channel::{Channel, ChoiMatrix, HolevoEnsemble, HolevoTerm, KrausSet, Representation};
pub use decomp::CStarCombination;
pub use eb::{EbVerdict, RankBounds, Verdict};
pub use error::{Error, Result};
pub use extremality::{CanonicalBlock, CanonicalEBForm, ExtremalityReport};
pub use numkernel::{CMatrix, CVector, Tolerance, C64};
pub use rng::SeededRng;
