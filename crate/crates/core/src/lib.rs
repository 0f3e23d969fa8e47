//! A priori bounds for retarded integral inequalities of Gronwall–Bihari type.
//!
//! Given nonnegative data `φ, c, η, w, α, f, g` the crate evaluates the
//! explicit majorant
//!
//! ```text
//! u(t) <= φ⁻¹( G⁻¹( Ψ⁻¹[ Ψ(p(t)) + ∫_0^{α(t)} f(t,s) ds ] ) ),   t in [0, τ]
//! ```
//!
//! with `G(x) = ∫_{x0}^x ds/η(φ⁻¹(s))`, `Ψ(x) = ∫_{x1}^x ds/w(φ⁻¹(G⁻¹(s)))`
//! and `p(t) = G(c(t)) + ∫_0^{α(t)} g(t,s) ds`, together with a second form in
//! which `g` multiplies `η(u)w(u)` and is integrated up to `t`. The validity
//! horizon `τ` is found from the supremum of `Ψ`.
//!
//! Modules:
//! * [`expr`]: the expression language the data is written in.
//! * [`problem`]: problem instances and hypothesis validation.
//! * [`numerics`]: quadrature, inversion and probing kernels.
//! * [`bounds`]: transform tables, τ and the bound curves.
//! * [`corollaries`]: closed-form special cases.
//! * [`oracle`]: the equality-case solver used to check dominance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod corollaries;
pub mod expr;
pub mod numerics;
pub mod oracle;
pub mod par;
pub mod problem;

pub use bounds::{BoundCurve, TauSearch, TransformTables};
pub use expr::Expr;
pub use numerics::Grid;
pub use oracle::{DominanceReport, EqualitySolution, Family};
pub use par::Execution;
pub use problem::{ProblemInstance, TheoremForm, ValidationReport};
