//! Exact computations with log connections, prismatic stratifications and
//! their Galois-action kernels over totally ramified extensions of `Q_p`.

pub mod error;
pub mod galois;
pub mod io;
pub mod linalg;
pub mod miclog;
pub mod numfield;
pub mod pdcosimp;
pub mod series;
pub mod stratconn;

pub use error::{Error, Result};
pub use numfield::{Field, FieldElement, FieldSpec, Valuation};
pub use pdcosimp::{CosimpConfig, Monomial, PdElement};
pub use series::TruncSeries;
pub use linalg::{KLinearOp, KMatrix};
pub use stratconn::{LogConnection, Stratification};
