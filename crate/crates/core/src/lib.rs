//! Hopf differentials `[z^{2m} - (a + ib) z^{m-1}] dz²` of symmetric
//! harmonic maps into the hyperbolic plane: roots, natural coordinates,
//! leaf spaces, ideal polygon images and a numerical vortex solver.

pub mod polyfield;
mod quad;
pub mod quaddiff;
pub mod realtree;
pub mod hypdisc;
pub mod imagelaw;
pub mod vortex;

pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/polynomials.md")]
    struct Polynomials;
    #[doc = include_str!("../../../book/src/natural-coordinates.md")]
    struct NaturalCoordinates;
    #[doc = include_str!("../../../book/src/trees.md")]
    struct Trees;
    #[doc = include_str!("../../../book/src/disc.md")]
    struct Disc;
    #[doc = include_str!("../../../book/src/image-polygons.md")]
    struct ImagePolygons;
    #[doc = include_str!("../../../book/src/vortex.md")]
    struct Vortex;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
