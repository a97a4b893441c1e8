//! Complex geodesics and invariant metrics on tridisc varieties, planar pair
//! domains, the polydisc and the unit ball.

pub mod ball;
pub mod discgeom;
pub mod geodesics;
pub mod metrics;
pub mod oracle;
pub mod plotdata;
pub mod sampling;
pub mod sweep;
pub mod tol;
pub mod varieties;

pub use discgeom::C;
